//! Factor once with partial pivoting, then solve for several right-hand sides.

use distla::algorithms::{dist_gemm, dist_lu_factor, dist_lu_solve};
use distla::dist::{dist_norm, DistMatrix};
use distla::grid::Grid;
use distla::local::NormKind;
use distla::transport::run_in_process;

fn main() -> distla::Result<()> {
    let n = 40;
    let res = run_in_process(4, |world| -> distla::Result<(Vec<usize>, f64)> {
        let grid = Grid::new(&world, None, None)?;
        let a = DistMatrix::zeros(&grid, n, n);
        a.fill_uniform(7);
        let b = DistMatrix::zeros(&grid, n, 3);
        b.fill_uniform(8);

        let lu = a.deep_copy()?;
        let x = b.deep_copy()?;
        let piv = dist_lu_factor(&lu)?;
        dist_lu_solve(&lu, &piv, &x)?;

        let r = b.deep_copy()?;
        dist_gemm(1.0, &a, &x, -1.0, &r, 16)?;
        let rel = dist_norm(NormKind::Frobenius, &r)? / dist_norm(NormKind::Frobenius, &b)?;
        Ok((piv.as_slice()[..8].to_vec(), rel))
    })?;
    let (piv, rel) = res.into_iter().next().unwrap()?;
    println!("first pivots {piv:?}");
    println!("||A X - B|| / ||B|| = {rel:e}");
    Ok(())
}
