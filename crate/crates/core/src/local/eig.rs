//! Cyclic two-sided Jacobi for real symmetric matrices.

use super::svd::{normalize_column_signs, rotate_columns};
use super::{LocalMatrix, JACOBI_TOL, MAX_SWEEPS};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SymEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: LocalMatrix,
}

/// Eigen-decomposition of the symmetric matrix defined by the lower triangle of `a`.
///
/// The upper triangle is ignored. Iterates until every off-diagonal entry is
/// at most `1e-14 * ||A||_F`; fails after 30 sweeps.
pub fn jacobi_sym_eig(a: &LocalMatrix) -> Result<SymEig> {
    let n = a.height();
    if a.width() != n {
        return Err(Error::DimensionMismatch(format!(
            "eigensolver needs a square matrix, got {} x {}",
            a.height(),
            a.width()
        )));
    }
    a.as_f64()?;
    let mut m = vec![0.0; n * n];
    for j in 0..n {
        for i in j..n {
            let v = a.at(i, j);
            m[i + j * n] = v;
            m[j + i * n] = v;
        }
    }
    let fro = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = JACOBI_TOL * fro;
    let mut x = LocalMatrix::identity(n);

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p + q * n];
                if apq.abs() <= threshold || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let theta = (m[q + q * n] - m[p + p * n]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sgn / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let (app, aqq) = (m[p + p * n], m[q + q * n]);
                // columns p, q
                rotate_columns(&mut m, n, p, q, c, s);
                // rows p, q
                for k in 0..n {
                    let (xp, xq) = (m[p + k * n], m[q + k * n]);
                    m[p + k * n] = c * xp - s * xq;
                    m[q + k * n] = s * xp + c * xq;
                }
                m[p + p * n] = app - t * apq;
                m[q + q * n] = aqq + t * apq;
                m[p + q * n] = 0.0;
                m[q + p * n] = 0.0;
                rotate_columns(x.data_f64_mut(), n, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("Jacobi eigensolver", MAX_SWEEPS));
    }

    let diag: Vec<f64> = (0..n).map(|k| m[k + k * n]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
    let values = order.iter().map(|&k| diag[k]).collect();
    let mut vectors = LocalMatrix::from_fn(n, n, |i, j| x.at(i, order[j]));
    normalize_column_signs(&mut vectors);
    Ok(SymEig { values, vectors })
}
