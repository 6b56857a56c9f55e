//! Householder QR with a non-negative diagonal in R.

use super::LocalMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Qr {
    /// h x w with orthonormal columns.
    pub q: LocalMatrix,
    /// w x w upper triangular, diagonal >= 0.
    pub r: LocalMatrix,
}

struct Reflectors {
    m: usize,
    n: usize,
    /// Column-major m x n; R above the diagonal, reflector tails below.
    work: Vec<f64>,
    tau: Vec<f64>,
    diag: Vec<f64>,
}

fn factor(a: &LocalMatrix) -> Result<Reflectors> {
    let (m, n) = (a.height(), a.width());
    a.as_f64()?;
    let mut work = vec![0.0; m * n];
    for j in 0..n {
        for i in 0..m {
            work[i + j * m] = a.at(i, j);
        }
    }
    let steps = m.min(n);
    let mut tau = vec![0.0; steps];
    let mut diag = vec![0.0; steps];
    for k in 0..steps {
        let col = k * m;
        let alpha = work[k + col];
        let sigma: f64 = work[k + 1 + col..m + col].iter().map(|x| x * x).sum();
        if sigma == 0.0 {
            diag[k] = alpha;
            continue;
        }
        let norm = (alpha * alpha + sigma).sqrt();
        let beta = if alpha >= 0.0 { -norm } else { norm };
        let v0 = alpha - beta;
        for x in &mut work[k + 1 + col..m + col] {
            *x /= v0;
        }
        tau[k] = (beta - alpha) / beta;
        diag[k] = beta;
        for j in k + 1..n {
            let cj = j * m;
            let mut dot = work[k + cj];
            for i in k + 1..m {
                dot += work[i + col] * work[i + cj];
            }
            dot *= tau[k];
            work[k + cj] -= dot;
            for i in k + 1..m {
                work[i + cj] -= dot * work[i + col];
            }
        }
    }
    Ok(Reflectors {
        m,
        n,
        work,
        tau,
        diag,
    })
}

impl Reflectors {
    /// w x w R with zero rows below min(m, w) and non-negative diagonal.
    /// Returns the per-row signs that were applied.
    fn r_factor(&self) -> (LocalMatrix, Vec<f64>) {
        let n = self.n;
        let steps = self.m.min(n);
        let mut r = LocalMatrix::zeros(n, n);
        let mut signs = vec![1.0; steps];
        for k in 0..steps {
            let s = if self.diag[k] < 0.0 { -1.0 } else { 1.0 };
            signs[k] = s;
            r.data_f64_mut()[k + k * n] = s * self.diag[k];
            for j in k + 1..n {
                r.data_f64_mut()[k + j * n] = s * self.work[k + j * self.m];
            }
        }
        (r, signs)
    }

    /// First n columns of Q = H_0 H_1 ... H_{n-1}.
    fn thin_q(&self, signs: &[f64]) -> LocalMatrix {
        let (m, n) = (self.m, self.n);
        let mut q = LocalMatrix::zeros(m, n);
        let qd = q.data_f64_mut();
        for k in 0..n.min(m) {
            qd[k + k * m] = 1.0;
        }
        for k in (0..self.tau.len()).rev() {
            if self.tau[k] == 0.0 {
                continue;
            }
            let col = k * m;
            for j in k..n {
                let cj = j * m;
                let mut dot = qd[k + cj];
                for i in k + 1..m {
                    dot += self.work[i + col] * qd[i + cj];
                }
                dot *= self.tau[k];
                qd[k + cj] -= dot;
                for i in k + 1..m {
                    qd[i + cj] -= dot * self.work[i + col];
                }
            }
        }
        for (k, s) in signs.iter().enumerate() {
            if *s < 0.0 {
                for i in 0..m {
                    qd[i + k * m] = -qd[i + k * m];
                }
            }
        }
        q
    }
}

/// Thin QR of a tall matrix (`height >= width`).
pub fn local_qr(a: &LocalMatrix) -> Result<Qr> {
    if a.height() < a.width() {
        return Err(Error::DimensionMismatch(format!(
            "QR needs height >= width, got {} x {}",
            a.height(),
            a.width()
        )));
    }
    let refl = factor(a)?;
    let (r, signs) = refl.r_factor();
    let q = refl.thin_q(&signs);
    Ok(Qr { q, r })
}

/// The w x w triangular factor of any h x w matrix, without forming Q.
///
/// When `h < w` the rows below `h` are zero, so `RᵀR = AᵀA` still holds.
pub fn qr_r_factor(a: &LocalMatrix) -> Result<LocalMatrix> {
    Ok(factor(a)?.r_factor().0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &LocalMatrix, b: &LocalMatrix) -> f64 {
        let d = a.sub(b).unwrap();
        super::super::local_norm(super::super::NormKind::Max, &d)
    }

    #[test]
    fn identity_is_fixed_point() {
        let qr = local_qr(&LocalMatrix::identity(4)).unwrap();
        assert_eq!(qr.q, LocalMatrix::identity(4));
        assert_eq!(qr.r, LocalMatrix::identity(4));
    }

    #[test]
    fn orthonormal_columns_give_identity_r() {
        let mut a = LocalMatrix::zeros(6, 3);
        a.fill_uniform(5);
        let q0 = local_qr(&a).unwrap().q;
        let qr = local_qr(&q0).unwrap();
        assert!(max_abs_diff(&qr.r, &LocalMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn random_reconstruction() {
        let mut a = LocalMatrix::zeros(8, 3);
        a.fill_uniform(8);
        let qr = local_qr(&a).unwrap();
        let recon = qr.q.matmul(&qr.r).unwrap();
        assert!(max_abs_diff(&recon, &a) <= 1e-12);
        let qtq = qr.q.transpose().matmul(&qr.q).unwrap();
        assert!(max_abs_diff(&qtq, &LocalMatrix::identity(3)) <= 1e-12);
        for k in 0..3 {
            assert!(qr.r.at(k, k) >= 0.0);
            for i in k + 1..3 {
                assert_eq!(qr.r.at(i, k), 0.0);
            }
        }
    }

    #[test]
    fn rank_deficient_allowed() {
        let a = LocalMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        let qr = local_qr(&a).unwrap();
        assert!(qr.r.at(1, 1).abs() < 1e-12);
        assert!(max_abs_diff(&qr.q.matmul(&qr.r).unwrap(), &a) < 1e-12);
    }

    #[test]
    fn short_block_r_factor() {
        let mut a = LocalMatrix::zeros(2, 4);
        a.fill_uniform(3);
        let r = qr_r_factor(&a).unwrap();
        let gram = a.transpose().matmul(&a).unwrap();
        let rtr = r.transpose().matmul(&r).unwrap();
        assert!(max_abs_diff(&gram, &rtr) < 1e-14);
        assert_eq!((r.at(2, 2), r.at(3, 3)), (0.0, 0.0));
    }

    #[test]
    fn wide_rejected() {
        assert!(local_qr(&LocalMatrix::zeros(2, 3)).is_err());
    }
}
