//! Column statistics and principal component analysis.
//!
//! `prcomp` follows R's pipeline: center (and optionally scale) the data,
//! take the singular values and right vectors of the result, and divide the
//! values by `sqrt(h - 1)`. No covariance matrix is formed.

use crate::algorithms::{default_mcmr, dist_svd_values_vt, require_f64};
use crate::dist::DistMatrix;
use crate::error::{Error, Result};
use crate::grid::AxisMap;
use crate::local::LocalMatrix;
use crate::transport::ReduceOp;

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMoments {
    pub means: Vec<f64>,
    /// Sample standard deviations (divisor `h - 1`); NaN when `h == 1`.
    pub std_devs: Vec<f64>,
}

#[derive(Debug)]
pub struct ScaledMatrix {
    pub matrix: DistMatrix,
    /// Column means subtracted; empty when centering is off.
    pub center: Vec<f64>,
    /// Column divisors applied; empty when scaling is off.
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcaOptions {
    /// Accepted for signature compatibility; rotated data is never returned.
    pub retx: bool,
    pub center: bool,
    pub scale: bool,
    /// Accepted for signature compatibility; no components are dropped.
    pub tol: Option<f64>,
}

impl Default for PcaOptions {
    fn default() -> Self {
        PcaOptions {
            retx: true,
            center: true,
            scale: false,
            tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// Descending, non-negative.
    pub sdev: Vec<f64>,
    /// Principal directions as columns, replicated.
    pub rotation: LocalMatrix,
    /// Column means; empty when centering is off.
    pub center: Vec<f64>,
}

/// Per-column reduction of `f(gi, gj, x)` over all rows, replicated on every rank.
///
/// Partial sums are reduced down process columns in rank order, then the
/// per-column totals are exchanged along process rows.
fn column_sums(a: &DistMatrix, f: impl Fn(usize, f64) -> f64) -> Result<Vec<f64>> {
    let grid = a.grid();
    let piece = a.local_matrix();
    let cols = a.col_map();
    let partial: Vec<f64> = (0..piece.width())
        .map(|lj| {
            let gj = cols.to_global(lj);
            (0..piece.height()).map(|li| f(gj, piece.at(li, lj))).sum()
        })
        .collect();
    let totals = grid.col_comm().allreduce(ReduceOp::Sum, &partial)?;
    let parts = grid.row_comm().allgatherv_parts(&totals)?;
    let mut out = vec![0.0; a.width()];
    for (q, part) in parts.iter().enumerate() {
        let owner = AxisMap { me: q, ..cols };
        for (lj, &v) in part.iter().enumerate() {
            out[owner.to_global(lj)] = v;
        }
    }
    Ok(out)
}

/// Column means and sample standard deviations, computed in two passes.
pub fn column_moments(a: &DistMatrix) -> Result<ColumnMoments> {
    require_f64(a)?;
    let h = a.height();
    if h == 0 {
        return Err(Error::Empty("column moments of a matrix with no rows".into()));
    }
    let work = default_mcmr(a)?;
    let means: Vec<f64> = column_sums(&work, |_, x| x)?
        .into_iter()
        .map(|s| s / h as f64)
        .collect();
    let std_devs = column_sums(&work, |j, x| (x - means[j]) * (x - means[j]))?
        .into_iter()
        .map(|s| (s / (h - 1) as f64).sqrt())
        .collect();
    Ok(ColumnMoments { means, std_devs })
}

/// R's `scale(x, center, scale)`: a new matrix with column means removed
/// and/or columns divided by their spread.
///
/// With centering on, the divisor is the sample standard deviation; with
/// centering off it is the root mean square `sqrt(sum x^2 / (h - 1))`.
pub fn center_scale(a: &DistMatrix, center: bool, scale: bool) -> Result<ScaledMatrix> {
    require_f64(a)?;
    let h = a.height();
    let matrix = a.deep_copy()?;
    let work = default_mcmr(&matrix)?;
    let means = if center {
        column_moments(&work)?.means
    } else {
        Vec::new()
    };
    let divisors = if scale {
        if h < 2 {
            return Err(Error::DimensionMismatch(format!(
                "scaling needs at least two rows, got {h}"
            )));
        }
        let ss = if center {
            column_sums(&work, |j, x| (x - means[j]) * (x - means[j]))?
        } else {
            column_sums(&work, |_, x| x * x)?
        };
        let d: Vec<f64> = ss.into_iter().map(|s| (s / (h - 1) as f64).sqrt()).collect();
        if let Some(j) = d.iter().position(|&v| v == 0.0 || !v.is_finite()) {
            return Err(Error::ZeroVariance(j));
        }
        d
    } else {
        Vec::new()
    };
    work.update_local(|_, j, bits| {
        let mut x = f64::from_bits(bits);
        if center {
            x -= means[j];
        }
        if scale {
            x /= divisors[j];
        }
        x.to_bits()
    });
    Ok(ScaledMatrix {
        matrix: work,
        center: means,
        scale: divisors,
    })
}

/// Principal components of the rows of `a` (observations) over its columns
/// (variables). Requires `h >= 2` and `h >= w`.
pub fn prcomp(a: &DistMatrix, opts: PcaOptions) -> Result<PcaResult> {
    require_f64(a)?;
    let (h, w) = (a.height(), a.width());
    if h < 2 || h < w {
        return Err(Error::DimensionMismatch(format!(
            "prcomp needs at least two rows and no more columns than rows, got {h} x {w}"
        )));
    }
    let scaled = center_scale(a, opts.center, opts.scale)?;
    let svd = dist_svd_values_vt(&scaled.matrix)?;
    let factor = 1.0 / ((h - 1) as f64).sqrt();
    Ok(PcaResult {
        sdev: svd.sigma.iter().map(|s| factor * s).collect(),
        rotation: svd.v,
        center: scaled.center,
    })
}
