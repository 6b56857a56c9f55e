use super::{require_f64, tsqr};
use crate::dist::DistMatrix;
use crate::error::{Error, Result};
use crate::grid::DistScheme;
use crate::local::{jacobi_svd, jacobi_sym_eig, Svd};

/// Singular values (descending) and right singular vectors of a tall matrix.
///
/// The matrix is reduced to its R factor by [`tsqr`]; every rank then runs
/// the same one-sided Jacobi SVD on R, so the result is replicated.
pub fn dist_svd_values_vt(a: &DistMatrix) -> Result<Svd> {
    require_f64(a)?;
    if a.height() < a.width() {
        return Err(Error::DimensionMismatch(format!(
            "SVD needs height >= width, got {} x {}",
            a.height(),
            a.width()
        )));
    }
    let r = tsqr(&a.redistribute(DistScheme::VcStar)?)?;
    jacobi_svd(&r)
}

#[derive(Debug)]
pub struct HermitianEig {
    /// Ascending, replicated.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, `[*,*]`.
    pub vectors: DistMatrix,
}

/// Eigen-decomposition of the symmetric matrix given by `a`'s lower triangle.
///
/// The matrix is gathered to every rank and solved redundantly with cyclic
/// Jacobi; results are identical everywhere.
pub fn hermitian_eig(a: &DistMatrix) -> Result<HermitianEig> {
    require_f64(a)?;
    if a.height() != a.width() {
        return Err(Error::DimensionMismatch(format!(
            "eigensolver needs a square matrix, got {} x {}",
            a.height(),
            a.width()
        )));
    }
    let full = a.gather()?;
    let e = jacobi_sym_eig(&full)?;
    Ok(HermitianEig {
        values: e.values,
        vectors: DistMatrix::from_global(a.grid(), &e.vectors, DistScheme::StarStar),
    })
}
