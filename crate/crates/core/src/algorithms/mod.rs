//! Distributed dense kernels built on [`DistMatrix`].
//!
//! All functions are collective over the grid of their operands. Inputs in
//! another scheme, with a non-zero alignment, or given as views are first
//! copied into a default `[MC,MR]` layout; in-out arguments are written back
//! afterwards, so views work as expected.

mod gemm;
mod lu;
mod spectral;
mod tsqr;

use crate::dist::DistMatrix;
use crate::error::{Error, Result};
use crate::grid::DistScheme;
use crate::local::Tag;

pub use gemm::{dist_gemm, DEFAULT_PANEL};
pub use lu::{dist_lu_factor, dist_lu_solve, PivotVector, SINGULAR_TOL};
pub use spectral::{dist_svd_values_vt, hermitian_eig, HermitianEig};
pub use tsqr::tsqr;

// Point-to-point tags used inside the kernels.
const TAG_SWAP: u16 = 0x0A01;
const TAG_TSQR: u16 = 0x0A02;

pub(crate) fn require_f64(a: &DistMatrix) -> Result<()> {
    match a.tag() {
        Tag::D => Ok(()),
        Tag::I => Err(Error::UnsupportedDatatype("i")),
    }
}

/// `a` itself when already in the default `[MC,MR]` layout, else a copy that is.
pub(crate) fn default_mcmr(a: &DistMatrix) -> Result<DistMatrix> {
    if a.scheme() == DistScheme::McMr {
        a.aligned()
    } else {
        a.redistribute(DistScheme::McMr)
    }
}

/// Copies `work` back into `target` unless they share storage.
fn write_back(work: &DistMatrix, target: &DistMatrix) -> Result<()> {
    if work.shares_storage(target) {
        Ok(())
    } else {
        target.assign_from(work)
    }
}
