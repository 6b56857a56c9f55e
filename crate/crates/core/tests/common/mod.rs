//! Helpers and reference implementations shared by the integration tests.
//!
//! The oracles here are written independently of the library kernels: plain
//! triple loops and a classical (largest off-diagonal) Jacobi eigensolver.

#![allow(dead_code, clippy::needless_range_loop)]

use distla::grid::Grid;
use distla::local::LocalMatrix;
use distla::transport::run_in_process;

pub const GRIDS: [(usize, usize); 5] = [(1, 1), (1, 2), (2, 1), (2, 2), (2, 3)];

/// Runs `f` on every rank of an `r x c` grid and returns rank 0's value.
pub fn on_grid<R: Send>(r: usize, c: usize, f: impl Fn(&Grid) -> R + Send + Sync) -> R {
    run_in_process(r * c, |w| {
        let g = Grid::new(&w, Some(r), Some(c)).expect("grid");
        f(&g)
    })
    .expect("world")
    .remove(0)
}

pub fn random(h: usize, w: usize, seed: u64) -> LocalMatrix {
    let mut m = LocalMatrix::zeros(h, w);
    m.fill_uniform(seed);
    m
}

pub fn to_rows(m: &LocalMatrix) -> Vec<Vec<f64>> {
    (0..m.height()).map(|i| (0..m.width()).map(|j| m.at(i, j)).collect()).collect()
}

pub fn frob(rows: &[Vec<f64>]) -> f64 {
    rows.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn frob_local(m: &LocalMatrix) -> f64 {
    frob(&to_rows(m))
}

pub fn frob_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)))
        .sum::<f64>()
        .sqrt()
}

/// `alpha * A * B + beta * C`, one dot product per entry.
pub fn gemm_oracle(alpha: f64, a: &[Vec<f64>], b: &[Vec<f64>], beta: f64, c: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = b.len();
    c.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &cij)| {
                    let dot: f64 = (0..k).map(|p| a[i][p] * b[p][j]).sum();
                    alpha * dot + beta * cij
                })
                .collect()
        })
        .collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let c = vec![vec![0.0; b.first().map_or(0, Vec::len)]; a.len()];
    gemm_oracle(1.0, a, b, 0.0, &c)
}

pub fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let w = a.first().map_or(0, Vec::len);
    (0..w).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect()
}

/// Classical Jacobi: always annihilates the largest off-diagonal entry.
/// Returns eigenvalues in descending order and matching unit eigenvectors as columns.
pub fn sym_eig_oracle(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m = a.to_vec();
    let mut v = identity(n);
    let scale = frob(a).max(f64::MIN_POSITIVE);
    for _ in 0..100 * n * n + 100 {
        let (mut p, mut q, mut big) = (0, 0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                if m[i][j].abs() > big {
                    (p, q, big) = (i, j, m[i][j].abs());
                }
            }
        }
        if big <= 1e-17 * scale {
            break;
        }
        let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        for k in 0..n {
            let (mkp, mkq) = (m[k][p], m[k][q]);
            m[k][p] = c * mkp - s * mkq;
            m[k][q] = s * mkp + c * mkq;
        }
        for k in 0..n {
            let (mpk, mqk) = (m[p][k], m[q][k]);
            m[p][k] = c * mpk - s * mqk;
            m[q][k] = s * mpk + c * mqk;
        }
        for row in v.iter_mut() {
            let (vp, vq) = (row[p], row[q]);
            row[p] = c * vp - s * vq;
            row[q] = s * vp + c * vq;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y][y].total_cmp(&m[x][x]));
    let values = order.iter().map(|&k| m[k][k]).collect();
    let vectors = (0..n).map(|i| order.iter().map(|&k| v[i][k]).collect()).collect();
    (values, vectors)
}

/// Sample covariance of the columns of `x` (rows are observations).
pub fn covariance(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let h = x.len();
    let w = x.first().map_or(0, Vec::len);
    let means: Vec<f64> = (0..w).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / h as f64).collect();
    (0..w)
        .map(|a| {
            (0..w)
                .map(|b| x.iter().map(|r| (r[a] - means[a]) * (r[b] - means[b])).sum::<f64>() / (h - 1) as f64)
                .collect()
        })
        .collect()
}

/// `max |x|` over two vectors' entrywise differences, after flipping `y` to
/// agree in sign with `x`.
pub fn column_diff_up_to_sign(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let s = if dot < 0.0 { -1.0 } else { 1.0 };
    x.iter().zip(y).map(|(a, b)| (a - s * b).abs()).fold(0.0, f64::max)
}
