//! Principal components of correlated data, with and without scaling.

use distla::dist::DistMatrix;
use distla::grid::Grid;
use distla::local::LocalMatrix;
use distla::stats::{prcomp, PcaOptions};
use distla::transport::run_in_process;

fn main() -> distla::Result<()> {
    let mut noise = LocalMatrix::zeros(300, 3);
    noise.fill_uniform(11);
    // Column 1 follows column 0; column 2 is independent and wide.
    let data = LocalMatrix::from_fn(300, 3, |i, j| match j {
        0 => noise.at(i, 0),
        1 => 2.0 * noise.at(i, 0) + 0.1 * noise.at(i, 1),
        _ => 5.0 * noise.at(i, 2),
    });
    let out = run_in_process(6, |world| -> distla::Result<_> {
        let grid = Grid::new(&world, Some(3), Some(2))?;
        let x = DistMatrix::from_global(&grid, &data, distla::grid::DistScheme::McMr);
        let plain = prcomp(&x, PcaOptions::default())?;
        let scaled = prcomp(&x, PcaOptions { scale: true, ..PcaOptions::default() })?;
        Ok((plain, scaled))
    })?;
    let (plain, scaled) = out.into_iter().next().unwrap()?;
    println!("sdev        {:?}", plain.sdev);
    println!("sdev scaled {:?}", scaled.sdev);
    println!("center      {:?}", plain.center);
    println!("first component {:?}", plain.rotation.column(0));
    Ok(())
}
