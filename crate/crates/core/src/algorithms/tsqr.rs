use super::{require_f64, TAG_TSQR};
use crate::dist::DistMatrix;
use crate::error::{Error, Result};
use crate::grid::DistScheme;
use crate::local::{qr_r_factor, LocalMatrix};
use crate::transport::codec;

/// R factor of a tall matrix by tree reduction over the world.
///
/// Each rank factors its `[VC,*]` row block, then at level `s` rank `q` with
/// `q % 2s == 0` stacks its R on top of rank `q + s`'s (when that rank
/// exists) and refactors. Rank 0's R is broadcast, so every rank returns the
/// same w x w upper triangle with non-negative diagonal.
pub fn tsqr(a: &DistMatrix) -> Result<LocalMatrix> {
    require_f64(a)?;
    let (h, w) = (a.height(), a.width());
    if h < w {
        return Err(Error::DimensionMismatch(format!(
            "TSQR needs height >= width, got {h} x {w}"
        )));
    }
    let block = if a.scheme() == DistScheme::VcStar {
        a.aligned()?
    } else {
        a.redistribute(DistScheme::VcStar)?
    };
    let world = a.grid().world();
    let (me, size) = (world.rank(), world.size());
    let mut r = qr_r_factor(&block.local_matrix())?;

    let mut step = 1;
    while step < size {
        if me % (2 * step) == 0 {
            if me + step < size {
                let theirs = codec::decode_f64s(&world.recv(me + step, TAG_TSQR)?)?;
                let theirs = LocalMatrix::from_col_major(w, w, theirs)?;
                let stacked = LocalMatrix::from_fn(2 * w, w, |i, j| {
                    if i < w {
                        r.at(i, j)
                    } else {
                        theirs.at(i - w, j)
                    }
                });
                r = qr_r_factor(&stacked)?;
            }
        } else if me % (2 * step) == step {
            world.send(me - step, TAG_TSQR, codec::encode_f64s(r.compact().data_f64()))?;
        }
        step *= 2;
    }

    let root = if me == 0 { r.compact().data_f64().to_vec() } else { Vec::new() };
    let all = world.broadcast_f64(0, &root)?;
    LocalMatrix::from_col_major(w, w, all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::local::{local_norm, local_qr, NormKind};
    use crate::transport::run_in_process;

    fn on_ranks(n: usize, a: &LocalMatrix) -> Vec<LocalMatrix> {
        run_in_process(n, |w| {
            let g = Grid::new(&w, None, None).unwrap();
            tsqr(&DistMatrix::from_global(&g, a, DistScheme::McMr)).unwrap()
        })
        .unwrap()
    }

    #[test]
    fn single_rank_equals_local_qr() {
        let mut a = LocalMatrix::zeros(9, 3);
        a.fill_uniform(1);
        assert_eq!(on_ranks(1, &a)[0], local_qr(&a).unwrap().r);
    }

    #[test]
    fn orthonormal_columns_give_identity() {
        let mut a = LocalMatrix::zeros(12, 3);
        a.fill_uniform(2);
        let q = local_qr(&a).unwrap().q;
        for r in on_ranks(4, &q) {
            let d = r.sub(&LocalMatrix::identity(3)).unwrap();
            assert!(local_norm(NormKind::Max, &d) < 1e-12);
        }
    }

    #[test]
    fn gram_oracle_over_odd_rank_counts() {
        let mut a = LocalMatrix::zeros(64, 5);
        a.fill_uniform(3);
        let gram = a.transpose().matmul(&a).unwrap();
        let scale = local_norm(NormKind::Frobenius, &gram);
        for n in [2, 3, 5, 6] {
            let rs = on_ranks(n, &a);
            assert!(rs.iter().all(|r| r == &rs[0]), "replicas differ on {n} ranks");
            let r = &rs[0];
            let rtr = r.transpose().matmul(r).unwrap();
            assert!(local_norm(NormKind::Frobenius, &rtr.sub(&gram).unwrap()) <= 1e-11 * scale);
            for k in 0..5 {
                assert!(r.at(k, k) >= 0.0);
                for i in k + 1..5 {
                    assert_eq!(r.at(i, k), 0.0);
                }
            }
        }
    }

    #[test]
    fn more_ranks_than_rows() {
        let mut a = LocalMatrix::zeros(3, 2);
        a.fill_uniform(4);
        let gram = a.transpose().matmul(&a).unwrap();
        let r = &on_ranks(5, &a)[0];
        let rtr = r.transpose().matmul(r).unwrap();
        assert!(local_norm(NormKind::Max, &rtr.sub(&gram).unwrap()) < 1e-14);
    }

    #[test]
    fn wide_rejected() {
        let out = run_in_process(1, |w| {
            let g = Grid::new(&w, None, None).unwrap();
            tsqr(&DistMatrix::zeros(&g, 2, 3)).is_err()
        })
        .unwrap();
        assert!(out[0]);
    }
}
