//! Eigen-decomposition of a symmetric matrix stored in its lower triangle.

use distla::algorithms::hermitian_eig;
use distla::dist::{print, DistMatrix};
use distla::grid::Grid;
use distla::transport::run_in_process;

fn main() -> distla::Result<()> {
    let out = run_in_process(4, |world| -> distla::Result<(Vec<f64>, Vec<u8>)> {
        let grid = Grid::new(&world, None, None)?;
        // Second-difference matrix; only the lower triangle is filled.
        let a = DistMatrix::zeros(&grid, 5, 5);
        a.fill_with(|i, j| match i as i64 - j as i64 {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        })?;
        let e = hermitian_eig(&a)?;
        let mut text = Vec::new();
        print(&e.vectors, &mut text)?;
        Ok((e.values, text))
    })?;
    let (values, vectors) = out.into_iter().next().unwrap()?;
    let exact: Vec<f64> = (1..=5).map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / 6.0).cos()).collect();
    println!("eigenvalues {values:?}");
    println!("closed form {exact:?}");
    print!("{}", String::from_utf8_lossy(&vectors));
    Ok(())
}
