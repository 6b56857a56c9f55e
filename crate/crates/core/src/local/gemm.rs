use super::LocalMatrix;
use crate::error::{Error, Result};

/// `C <- alpha * A * B + beta * C`.
///
/// Loop order is fixed (j, then k, then i), so for a given input the result
/// is bitwise reproducible. Each C entry accumulates its k terms in
/// ascending k.
pub fn local_gemm(
    alpha: f64,
    a: &LocalMatrix,
    b: &LocalMatrix,
    beta: f64,
    c: &mut LocalMatrix,
) -> Result<()> {
    if a.width() != b.height() || c.height() != a.height() || c.width() != b.width() {
        return Err(Error::DimensionMismatch(format!(
            "gemm {}x{} * {}x{} into {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width(),
            c.height(),
            c.width()
        )));
    }
    let (m, n, kk) = (a.height(), b.width(), a.width());
    let (lda, ldb, ldc) = (a.ldim(), b.ldim(), c.ldim());
    let ad = a.as_f64()?;
    let bd = b.as_f64()?;
    let cd = c.as_f64_mut()?;
    for j in 0..n {
        let cj = &mut cd[j * ldc..j * ldc + m];
        if beta == 0.0 {
            cj.fill(0.0);
        } else if beta != 1.0 {
            cj.iter_mut().for_each(|x| *x *= beta);
        }
        if alpha == 0.0 {
            continue;
        }
        for k in 0..kk {
            let t = alpha * bd[k + j * ldb];
            let ak = &ad[k * lda..k * lda + m];
            for (ci, ai) in cj.iter_mut().zip(ak) {
                *ci += t * ai;
            }
        }
    }
    Ok(())
}
