use super::{default_mcmr, require_f64, write_back, TAG_SWAP};
use crate::dist::{dist_norm, DistMatrix};
use crate::error::{Error, Result};
use crate::grid::{AxisMap, Grid};
use crate::local::{LocalMatrix, NormKind};
use crate::transport::codec;

/// A pivot smaller than this times `max |a_ij|` is treated as zero.
pub const SINGULAR_TOL: f64 = 1e-13;

/// Row interchanges of an LU factorization, replicated on every rank.
///
/// Step `k` swapped rows `k` and `p[k]`, with `k <= p[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PivotVector(pub Vec<usize>);

impl PivotVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// This rank's block of an `[MC,MR]` matrix with its index maps.
struct Block {
    data: LocalMatrix,
    rows: AxisMap,
    cols: AxisMap,
}

impl Block {
    fn of(m: &DistMatrix) -> Block {
        Block {
            data: m.local_matrix(),
            rows: m.row_map(),
            cols: m.col_map(),
        }
    }

    fn height(&self) -> usize {
        self.data.height()
    }

    fn width(&self) -> usize {
        self.data.width()
    }

    fn at(&self, li: usize, lj: usize) -> f64 {
        self.data.data_f64()[li + lj * self.data.ldim()]
    }

    fn at_mut(&mut self, li: usize, lj: usize) -> &mut f64 {
        let ld = self.data.ldim();
        &mut self.data.data_f64_mut()[li + lj * ld]
    }

    fn row(&self, li: usize) -> Vec<f64> {
        (0..self.width()).map(|lj| self.at(li, lj)).collect()
    }

    fn set_row(&mut self, li: usize, vals: &[f64]) {
        for (lj, &v) in vals.iter().enumerate() {
            *self.at_mut(li, lj) = v;
        }
    }

    fn column(&self, lj: usize) -> Vec<f64> {
        (0..self.height()).map(|li| self.at(li, lj)).collect()
    }

    /// First local row whose global index is greater than `g`.
    fn rows_after(&self, g: usize) -> usize {
        self.rows.local_len(g + 1)
    }

    /// Swaps global rows `k` and `p` across the whole block row.
    fn swap_rows(&mut self, grid: &Grid, k: usize, p: usize) -> Result<()> {
        if k == p {
            return Ok(());
        }
        let (rk, rp) = (self.rows.owner(k), self.rows.owner(p));
        let me = grid.my_row();
        if rk == rp {
            if me == rk {
                let (lk, lp) = (self.rows.to_local(k).unwrap(), self.rows.to_local(p).unwrap());
                let (a, b) = (self.row(lk), self.row(lp));
                self.set_row(lk, &b);
                self.set_row(lp, &a);
            }
            return Ok(());
        }
        let (mine, partner) = if me == rk {
            (k, rp)
        } else if me == rp {
            (p, rk)
        } else {
            return Ok(());
        };
        let li = self.rows.to_local(mine).unwrap();
        let comm = grid.col_comm();
        comm.send(partner, TAG_SWAP, codec::encode_f64s(&self.row(li)))?;
        let theirs = codec::decode_f64s(&comm.recv(partner, TAG_SWAP)?)?;
        self.set_row(li, &theirs);
        Ok(())
    }
}

/// In-place LU factorization with partial pivoting, `P A = L U`.
///
/// Unblocked right-looking elimination. The pivot of step `k` is the entry
/// of largest magnitude in column `k` on or below the diagonal; ties go to
/// the smallest row. L (unit diagonal, not stored) ends up below the
/// diagonal and U on and above it.
pub fn dist_lu_factor(a: &DistMatrix) -> Result<PivotVector> {
    require_f64(a)?;
    let n = a.height();
    if a.width() != n {
        return Err(Error::DimensionMismatch(format!(
            "LU needs a square matrix, got {} x {}",
            a.height(),
            a.width()
        )));
    }
    let work = default_mcmr(a)?;
    let grid = work.grid().clone();
    let threshold = SINGULAR_TOL * dist_norm(NormKind::Max, &work)?;
    let mut blk = Block::of(&work);
    let my_col = grid.my_col();
    let mut piv = Vec::with_capacity(n);

    for k in 0..n {
        let (rk, ck) = (blk.rows.owner(k), blk.cols.owner(k));
        let lk_col = blk.cols.to_local(k);

        // Pivot search down column k, then share the choice along process rows.
        let mut choice = [0u8; 16];
        if my_col == ck {
            let lj = lk_col.unwrap();
            let mut best = (0.0f64, u64::MAX);
            for li in blk.rows.local_len(k)..blk.height() {
                let v = blk.at(li, lj).abs();
                if v > best.0 || best.1 == u64::MAX {
                    best = (v, blk.rows.to_global(li) as u64);
                }
            }
            let (mag, idx) = grid.col_comm().allreduce_located(&[best])?[0];
            choice[..8].copy_from_slice(&mag.to_le_bytes());
            choice[8..].copy_from_slice(&idx.to_le_bytes());
        }
        let choice = grid.row_comm().broadcast(ck, choice.to_vec())?;
        let mag = f64::from_le_bytes(choice[..8].try_into().unwrap());
        let p = u64::from_le_bytes(choice[8..16].try_into().unwrap()) as usize;
        if mag < threshold || mag == 0.0 || p >= n {
            return Err(Error::Singular {
                step: k,
                pivot: mag,
                threshold,
            });
        }
        piv.push(p);
        blk.swap_rows(&grid, k, p)?;

        // Scale the subdiagonal part of column k by the pivot's reciprocal.
        let first_below = blk.rows_after(k);
        if my_col == ck {
            let lj = lk_col.unwrap();
            let mine = match blk.rows.to_local(k) {
                Some(li) => vec![blk.at(li, lj)],
                None => Vec::new(),
            };
            let pivot = grid.col_comm().broadcast_f64(rk, &mine)?[0];
            let inv = 1.0 / pivot;
            for li in first_below..blk.height() {
                *blk.at_mut(li, lj) *= inv;
            }
        }

        // Rank-one update of the trailing block.
        if k + 1 == n {
            continue;
        }
        let l_col = match lk_col {
            Some(lj) => blk.column(lj),
            None => Vec::new(),
        };
        let l_col = grid.row_comm().broadcast_f64(ck, &l_col)?;
        let u_row = match blk.rows.to_local(k) {
            Some(li) => blk.row(li),
            None => Vec::new(),
        };
        let u_row = grid.col_comm().broadcast_f64(rk, &u_row)?;
        let first_right = blk.cols.local_len(k + 1);
        for lj in first_right..blk.width() {
            let u = u_row[lj];
            if u == 0.0 {
                continue;
            }
            for li in first_below..blk.height() {
                *blk.at_mut(li, lj) -= l_col[li] * u;
            }
        }
    }

    work.set_local_matrix(&blk.data)?;
    write_back(&work, a)?;
    Ok(PivotVector(piv))
}

/// Solves `A X = B` in place given `dist_lu_factor`'s output for `A`.
pub fn dist_lu_solve(lu: &DistMatrix, piv: &PivotVector, b: &DistMatrix) -> Result<()> {
    require_f64(lu)?;
    require_f64(b)?;
    let n = lu.height();
    if lu.width() != n || b.height() != n || piv.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "solve with {} x {} factors, {} pivots and a {} x {} right-hand side",
            lu.height(),
            lu.width(),
            piv.len(),
            b.height(),
            b.width()
        )));
    }
    if !lu.grid().same_as(b.grid()) {
        return Err(Error::GridMismatch);
    }
    let lu_w = default_mcmr(lu)?;
    let work = default_mcmr(b)?;
    let grid = work.grid().clone();
    let f = Block::of(&lu_w);
    let mut x = Block::of(&work);

    for (k, &p) in piv.as_slice().iter().enumerate() {
        x.swap_rows(&grid, k, p)?;
    }

    // Forward substitution with unit lower L.
    for k in 0..n {
        let (rk, ck) = (f.rows.owner(k), f.cols.owner(k));
        let l_col = match f.cols.to_local(k) {
            Some(lj) => f.column(lj),
            None => Vec::new(),
        };
        let l_col = grid.row_comm().broadcast_f64(ck, &l_col)?;
        let x_row = match x.rows.to_local(k) {
            Some(li) => x.row(li),
            None => Vec::new(),
        };
        let x_row = grid.col_comm().broadcast_f64(rk, &x_row)?;
        for lj in 0..x.width() {
            for li in x.rows_after(k)..x.height() {
                *x.at_mut(li, lj) -= l_col[li] * x_row[lj];
            }
        }
    }

    // Back substitution with U.
    for k in (0..n).rev() {
        let (rk, ck) = (f.rows.owner(k), f.cols.owner(k));
        let u_col = match f.cols.to_local(k) {
            Some(lj) => f.column(lj),
            None => Vec::new(),
        };
        let u_col = grid.row_comm().broadcast_f64(ck, &u_col)?;
        if let Some(li) = x.rows.to_local(k) {
            let ukk = u_col[li];
            for lj in 0..x.width() {
                *x.at_mut(li, lj) /= ukk;
            }
        }
        let x_row = match x.rows.to_local(k) {
            Some(li) => x.row(li),
            None => Vec::new(),
        };
        let x_row = grid.col_comm().broadcast_f64(rk, &x_row)?;
        for lj in 0..x.width() {
            for li in 0..x.rows.local_len(k) {
                *x.at_mut(li, lj) -= u_col[li] * x_row[lj];
            }
        }
    }

    work.set_local_matrix(&x.data)?;
    write_back(&work, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistMatrix;
    use crate::grid::{DistScheme, Grid};
    use crate::local::local_norm;
    use crate::transport::run_in_process;

    fn dominant(n: usize, seed: u64) -> LocalMatrix {
        let mut a = LocalMatrix::zeros(n, n);
        a.fill_uniform(seed);
        LocalMatrix::from_fn(n, n, |i, j| a.at(i, j) + if i == j { n as f64 } else { 0.0 })
    }

    fn factor_on(r: usize, c: usize, a: &LocalMatrix) -> (LocalMatrix, Vec<usize>) {
        let out = run_in_process(r * c, |w| {
            let g = Grid::new(&w, Some(r), Some(c)).unwrap();
            let d = DistMatrix::from_global(&g, a, DistScheme::McMr);
            let p = dist_lu_factor(&d).unwrap();
            (d.gather().unwrap(), p.0)
        })
        .unwrap();
        for o in &out[1..] {
            assert_eq!(o, &out[0]);
        }
        out[0].clone()
    }

    /// P A from the pivot sequence, and L U from the packed factors.
    fn reconstruct(a: &LocalMatrix, lu: &LocalMatrix, piv: &[usize]) -> (LocalMatrix, LocalMatrix) {
        let n = a.height();
        let mut pa: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a.at(i, j)).collect()).collect();
        for (k, &p) in piv.iter().enumerate() {
            pa.swap(k, p);
        }
        let pa = LocalMatrix::from_fn(n, n, |i, j| pa[i][j]);
        let l = LocalMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => lu.at(i, j),
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => 0.0,
        });
        let u = LocalMatrix::from_fn(n, n, |i, j| if i <= j { lu.at(i, j) } else { 0.0 });
        (pa, l.matmul(&u).unwrap())
    }

    #[test]
    fn identity_is_fixed() {
        let (lu, p) = factor_on(2, 2, &LocalMatrix::identity(5));
        assert_eq!(lu, LocalMatrix::identity(5));
        assert_eq!(p, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn permutation_forces_swap() {
        let a = LocalMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let (_, p) = factor_on(1, 2, &a);
        assert_eq!(p[0], 1);
    }

    #[test]
    fn reconstruction_on_grids() {
        let a = dominant(24, 4);
        for (r, c) in [(1, 1), (2, 2), (2, 3), (3, 1)] {
            let (lu, p) = factor_on(r, c, &a);
            let (pa, prod) = reconstruct(&a, &lu, &p);
            let err = local_norm(NormKind::Frobenius, &pa.sub(&prod).unwrap());
            assert!(err <= 1e-12 * local_norm(NormKind::Frobenius, &a), "{r}x{c}: {err}");
            assert!(p.iter().enumerate().all(|(k, &pk)| k <= pk && pk < 24));
        }
    }

    #[test]
    fn pivoting_ties_prefer_smallest_row() {
        let a = LocalMatrix::from_rows(&[&[1.0, 2.0, 0.0], &[-3.0, 1.0, 1.0], &[3.0, 0.0, 2.0]]);
        let (_, p) = factor_on(2, 1, &a);
        assert_eq!(p[0], 1);
    }

    #[test]
    fn singular_detected_on_every_rank() {
        let a = LocalMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let out = run_in_process(4, |w| {
            let g = Grid::new(&w, Some(2), Some(2)).unwrap();
            let d = DistMatrix::from_global(&g, &a, DistScheme::McMr);
            dist_lu_factor(&d).unwrap_err().to_string()
        })
        .unwrap();
        assert!(out.iter().all(|e| e.contains("singular matrix")));
        let zero = run_in_process(1, |w| {
            let g = Grid::new(&w, None, None).unwrap();
            dist_lu_factor(&DistMatrix::zeros(&g, 3, 3)).is_err()
        })
        .unwrap();
        assert!(zero[0]);
    }

    fn solve_on(r: usize, c: usize, a: &LocalMatrix, b: &LocalMatrix) -> LocalMatrix {
        run_in_process(r * c, |w| {
            let g = Grid::new(&w, Some(r), Some(c)).unwrap();
            let da = DistMatrix::from_global(&g, a, DistScheme::McMr);
            let db = DistMatrix::from_global(&g, b, DistScheme::McMr);
            let p = dist_lu_factor(&da).unwrap();
            dist_lu_solve(&da, &p, &db).unwrap();
            db.gather().unwrap()
        })
        .unwrap()
        .remove(0)
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let mut b = LocalMatrix::zeros(4, 3);
        b.fill_uniform(2);
        assert_eq!(solve_on(2, 2, &LocalMatrix::identity(4), &b), b);
    }

    #[test]
    fn first_column_rhs_gives_unit_vector() {
        let mut a = LocalMatrix::zeros(4, 4);
        a.fill_uniform(12);
        let b = LocalMatrix::from_fn(4, 1, |i, _| a.at(i, 0));
        let x = solve_on(2, 1, &a, &b);
        for i in 0..4 {
            let want = if i == 0 { 1.0 } else { 0.0 };
            assert!((x.at(i, 0) - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn residual_bound_on_grids() {
        let a = dominant(20, 9);
        let mut b = LocalMatrix::zeros(20, 5);
        b.fill_uniform(10);
        for (r, c) in [(1, 1), (2, 2), (1, 3)] {
            let x = solve_on(r, c, &a, &b);
            let res = local_norm(NormKind::Frobenius, &a.matmul(&x).unwrap().sub(&b).unwrap());
            let scale = local_norm(NormKind::Frobenius, &a) * local_norm(NormKind::Frobenius, &x);
            assert!(res <= 1e-12 * scale, "{r}x{c}: {res}");
        }
    }

    #[test]
    fn solve_shape_mismatch() {
        run_in_process(1, |w| {
            let g = Grid::new(&w, None, None).unwrap();
            let a = DistMatrix::from_global(&g, &LocalMatrix::identity(3), DistScheme::McMr);
            let p = dist_lu_factor(&a).unwrap();
            let b = DistMatrix::zeros(&g, 4, 1);
            assert!(matches!(dist_lu_solve(&a, &p, &b), Err(Error::DimensionMismatch(_))));
        })
        .unwrap();
    }
}
