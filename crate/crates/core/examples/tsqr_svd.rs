//! Tall-skinny QR over a tree of ranks, then singular values from R.

use distla::algorithms::{dist_svd_values_vt, tsqr};
use distla::dist::DistMatrix;
use distla::grid::Grid;
use distla::transport::run_in_process;

fn main() -> distla::Result<()> {
    let out = run_in_process(5, |world| -> distla::Result<(Vec<f64>, Vec<f64>)> {
        let grid = Grid::new(&world, None, None)?;
        let a = DistMatrix::zeros(&grid, 500, 4);
        a.fill_uniform(3);
        let r = tsqr(&a)?;
        let diag = (0..4).map(|k| r.at(k, k)).collect();
        Ok((diag, dist_svd_values_vt(&a)?.sigma))
    })?;
    let (diag, sigma) = out.into_iter().next().unwrap()?;
    println!("diag(R) = {diag:?}");
    println!("sigma   = {sigma:?}");
    Ok(())
}
