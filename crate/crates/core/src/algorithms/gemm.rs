use super::{default_mcmr, require_f64, write_back};
use crate::dist::DistMatrix;
use crate::error::{Error, Result};
use crate::grid::AxisMap;
use crate::local::{local_gemm, LocalMatrix};

/// Panel width used when callers have no preference.
pub const DEFAULT_PANEL: usize = 32;

/// `C <- alpha * A * B + beta * C` with C stationary.
///
/// For each panel of `nb` inner indices, the A panel is replicated across
/// process rows and the B panel across process columns, then every rank
/// accumulates its own block of C. Each entry of C sums its inner terms in
/// ascending order, so the result is bitwise independent of the grid shape
/// and of `nb`.
pub fn dist_gemm(
    alpha: f64,
    a: &DistMatrix,
    b: &DistMatrix,
    beta: f64,
    c: &DistMatrix,
    nb: usize,
) -> Result<()> {
    for m in [a, b, c] {
        require_f64(m)?;
    }
    if !a.grid().same_as(c.grid()) || !b.grid().same_as(c.grid()) {
        return Err(Error::GridMismatch);
    }
    if a.width() != b.height() || a.height() != c.height() || b.width() != c.width() {
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
    let nb = nb.max(1);
    let work = default_mcmr(c)?;
    // C may alias A or B; the operands must not change while C is updated.
    let a_w = detached(default_mcmr(a)?, c)?;
    let b_w = detached(default_mcmr(b)?, c)?;

    let grid = c.grid();
    let (lh, lw) = (work.local_height(), work.local_width());
    let mut c_loc = work.local_matrix();
    {
        let cd = c_loc.as_f64_mut()?;
        if beta == 0.0 {
            cd.fill(0.0);
        } else if beta != 1.0 {
            cd.iter_mut().for_each(|x| *x *= beta);
        }
    }

    let a_loc = a_w.local_matrix();
    let b_loc = b_w.local_matrix();
    let (a_cols, b_rows) = (a_w.col_map(), b_w.row_map());
    let kk = a.width();
    let mut k0 = 0;
    while k0 < kk && alpha != 0.0 {
        let k1 = (k0 + nb).min(kk);
        let width = k1 - k0;

        // A panel: my process row's rows, all panel columns.
        let mut mine = Vec::new();
        for lj in local_range(a_cols, k0, k1) {
            mine.extend((0..lh).map(|li| a_loc.at(li, lj)));
        }
        let parts = grid.row_comm().allgatherv_parts(&mine)?;
        let mut ap = LocalMatrix::zeros(lh, width);
        for (q, part) in parts.iter().enumerate() {
            let owner = AxisMap { me: q, ..a_cols };
            for (n, lj) in local_range(owner, k0, k1).enumerate() {
                let gk = owner.to_global(lj) - k0;
                for (li, &v) in part[n * lh..(n + 1) * lh].iter().enumerate() {
                    ap.set(li, gk, v)?;
                }
            }
        }

        // B panel: all panel rows, my process column's columns.
        let my_rows: Vec<usize> = local_range(b_rows, k0, k1).collect();
        let mut mine = Vec::with_capacity(my_rows.len() * lw);
        for lj in 0..lw {
            mine.extend(my_rows.iter().map(|&li| b_loc.at(li, lj)));
        }
        let parts = grid.col_comm().allgatherv_parts(&mine)?;
        let mut bp = LocalMatrix::zeros(width, lw);
        for (q, part) in parts.iter().enumerate() {
            let owner = AxisMap { me: q, ..b_rows };
            let idx: Vec<usize> = local_range(owner, k0, k1).map(|li| owner.to_global(li) - k0).collect();
            for lj in 0..lw {
                for (n, &gk) in idx.iter().enumerate() {
                    bp.set(gk, lj, part[lj * idx.len() + n])?;
                }
            }
        }

        local_gemm(alpha, &ap, &bp, 1.0, &mut c_loc)?;
        k0 = k1;
    }
    work.set_local_matrix(&c_loc)?;
    write_back(&work, c)
}

fn detached(m: DistMatrix, c: &DistMatrix) -> Result<DistMatrix> {
    if m.shares_storage(c) {
        m.deep_copy()
    } else {
        Ok(m)
    }
}

/// Local indices whose global index falls in `[g0, g1)`.
fn local_range(map: AxisMap, g0: usize, g1: usize) -> std::ops::Range<usize> {
    map.local_len(g0)..map.local_len(g1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistMatrix;
    use crate::grid::{DistScheme, Grid};
    use crate::local::{local_norm, NormKind};
    use crate::transport::run_in_process;

    fn triple_loop(a: &LocalMatrix, b: &LocalMatrix) -> LocalMatrix {
        LocalMatrix::from_fn(a.height(), b.width(), |i, j| {
            let mut s = 0.0;
            for k in 0..a.width() {
                s += a.at(i, k) * b.at(k, j);
            }
            s
        })
    }

    fn random(h: usize, w: usize, seed: u64) -> LocalMatrix {
        let mut m = LocalMatrix::zeros(h, w);
        m.fill_uniform(seed);
        m
    }

    fn run(r: usize, c: usize, nb: usize, alpha: f64, beta: f64) -> LocalMatrix {
        let (a, b, c0) = (random(33, 17, 1), random(17, 29, 2), random(33, 29, 3));
        let out = run_in_process(r * c, |w| {
            let g = Grid::new(&w, Some(r), Some(c)).unwrap();
            let da = DistMatrix::from_global(&g, &a, DistScheme::McMr);
            let db = DistMatrix::from_global(&g, &b, DistScheme::McMr);
            let dc = DistMatrix::from_global(&g, &c0, DistScheme::McMr);
            dist_gemm(alpha, &da, &db, beta, &dc, nb).unwrap();
            dc.gather().unwrap()
        })
        .unwrap();
        out[0].clone()
    }

    #[test]
    fn matches_triple_loop_on_grids() {
        let (a, b) = (random(33, 17, 1), random(17, 29, 2));
        let oracle = triple_loop(&a, &b);
        let fro = local_norm(NormKind::Frobenius, &oracle);
        for (r, c) in [(1, 1), (2, 2), (2, 3)] {
            let got = run(r, c, DEFAULT_PANEL, 1.0, 0.0);
            let err = local_norm(NormKind::Frobenius, &got.sub(&oracle).unwrap());
            assert!(err <= 1e-13 * fro, "grid {r}x{c}: {err}");
        }
    }

    #[test]
    fn bitwise_across_grids_and_panels() {
        let base = run(1, 1, 32, 0.5, -1.5);
        for (r, c, nb) in [(1, 2, 1), (2, 1, 2), (2, 2, 32), (2, 3, 5)] {
            assert_eq!(run(r, c, nb, 0.5, -1.5), base);
        }
    }

    #[test]
    fn identity_and_zero_alpha() {
        let out = run_in_process(4, |w| {
            let g = Grid::new(&w, Some(2), Some(2)).unwrap();
            let a = DistMatrix::from_global(&g, &random(5, 5, 7), DistScheme::McMr);
            let i = DistMatrix::from_global(&g, &LocalMatrix::identity(5), DistScheme::McMr);
            let c = DistMatrix::from_global(&g, &random(5, 5, 8), DistScheme::McMr);
            dist_gemm(2.0, &a, &i, 1.0, &c, 2).unwrap();
            let first = c.gather().unwrap();
            dist_gemm(0.0, &a, &i, 3.0, &c, 2).unwrap();
            (first, c.gather().unwrap())
        })
        .unwrap();
        let (a, c) = (random(5, 5, 7), random(5, 5, 8));
        let want = LocalMatrix::from_fn(5, 5, |i, j| 2.0 * a.at(i, j) + c.at(i, j));
        assert!(local_norm(NormKind::Max, &out[0].0.sub(&want).unwrap()) < 1e-15);
        let scaled = LocalMatrix::from_fn(5, 5, |i, j| 3.0 * out[0].0.at(i, j));
        assert_eq!(out[0].1, scaled);
    }

    #[test]
    fn into_a_view() {
        let out = run_in_process(4, |w| {
            let g = Grid::new(&w, Some(2), Some(2)).unwrap();
            let big = DistMatrix::zeros(&g, 6, 6);
            let a = DistMatrix::from_global(&g, &random(3, 2, 1), DistScheme::McMr);
            let b = DistMatrix::from_global(&g, &random(2, 4, 2), DistScheme::VcStar);
            let v = big.view(1, 4, 2, 6).unwrap();
            dist_gemm(1.0, &a, &b, 0.0, &v, 1).unwrap();
            big.gather().unwrap()
        })
        .unwrap();
        let prod = triple_loop(&random(3, 2, 1), &random(2, 4, 2));
        let g = &out[0];
        for i in 0..6 {
            for j in 0..6 {
                let inside = (1..4).contains(&i) && (2..6).contains(&j);
                let want = if inside { prod.at(i - 1, j - 2) } else { 0.0 };
                assert!((g.at(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn errors() {
        run_in_process(1, |w| {
            let g = Grid::new(&w, None, None).unwrap();
            let a = DistMatrix::zeros(&g, 2, 3);
            let c = DistMatrix::zeros(&g, 2, 2);
            assert!(matches!(dist_gemm(1.0, &a, &a, 0.0, &c, 4), Err(Error::DimensionMismatch(_))));
            let i = DistMatrix::with_suffix(&g, 2, 2, "i").unwrap();
            assert!(matches!(dist_gemm(1.0, &i, &i, 0.0, &i, 4), Err(Error::UnsupportedDatatype(_))));
        })
        .unwrap();
    }
}
