//! One-sided (Hestenes) Jacobi SVD returning singular values and right vectors.

use super::{LocalMatrix, JACOBI_TOL, MAX_SWEEPS};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Svd {
    /// Descending, non-negative.
    pub sigma: Vec<f64>,
    /// q x q right singular vectors as columns.
    pub v: LocalMatrix,
}

/// Flips each column so its largest-magnitude entry (first one on ties) is positive.
pub fn normalize_column_signs(m: &mut LocalMatrix) {
    let (h, ld) = (m.height(), m.ldim());
    let data = m.data_f64_mut();
    for j in 0..data.len() / ld.max(1) {
        let col = &mut data[j * ld..j * ld + h];
        let mut best = 0;
        for i in 1..h {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if h > 0 && col[best] < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// SVD of a p x q matrix with `p >= q`.
///
/// Column pairs are rotated until every pair is orthogonal to a relative
/// tolerance of `max(1e-14, sqrt(p) * eps)`, which also bounds each
/// inner product by `1e-14 * ||A||_F^2`. Fails after 30 sweeps.
pub fn jacobi_svd(a: &LocalMatrix) -> Result<Svd> {
    let (p, q) = (a.height(), a.width());
    if p < q {
        return Err(Error::DimensionMismatch(format!(
            "Jacobi SVD needs height >= width, got {p} x {q}"
        )));
    }
    a.as_f64()?;
    let mut u: Vec<f64> = Vec::with_capacity(p * q);
    for j in 0..q {
        u.extend((0..p).map(|i| a.at(i, j)));
    }
    let mut v = LocalMatrix::identity(q);
    let tol = JACOBI_TOL.max((p as f64).sqrt() * f64::EPSILON);

    let mut converged = q < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for i in 0..q {
            for j in i + 1..q {
                let (ci, cj) = (&u[i * p..(i + 1) * p], &u[j * p..(j + 1) * p]);
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for (x, y) in ci.iter().zip(cj) {
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut u, p, i, j, c, s);
                rotate_columns(v.data_f64_mut(), q, i, j, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("Jacobi SVD", MAX_SWEEPS));
    }

    let norms: Vec<f64> = (0..q)
        .map(|j| u[j * p..(j + 1) * p].iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let sigma = order.iter().map(|&k| norms[k]).collect();
    let mut v_sorted = LocalMatrix::from_fn(q, q, |i, j| v.at(i, order[j]));
    normalize_column_signs(&mut v_sorted);
    Ok(Svd { sigma, v: v_sorted })
}

/// Columns i, j of a column-major buffer with stride `ld`:
/// `(x, y) <- (c x - s y, s x + c y)`.
pub(super) fn rotate_columns(data: &mut [f64], ld: usize, i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = data.split_at_mut(j * ld);
    let x = &mut lo[i * ld..(i + 1) * ld];
    let y = &mut hi[..ld];
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let (a, b) = (*xi, *yi);
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}
