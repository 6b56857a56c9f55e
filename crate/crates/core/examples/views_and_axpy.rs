//! Writing through a view updates the parent; axpy composes with copy.

use distla::dist::{axpy, copy, print, DistMatrix};
use distla::grid::Grid;
use distla::transport::run_in_process;

fn main() -> distla::Result<()> {
    let out = run_in_process(4, |world| -> distla::Result<Vec<u8>> {
        let grid = Grid::new(&world, None, None)?;
        let a = DistMatrix::zeros(&grid, 4, 5);
        a.fill_with(|i, j| (10 * i + j) as f64)?;

        let block = a.view(1, 3, 2, 5)?;
        block.scale(-1.0)?;

        let ones = DistMatrix::zeros(&grid, 2, 3);
        ones.fill_with(|_, _| 1.0)?;
        axpy(100.0, &ones, &block)?;

        let mut snapshot = DistMatrix::zeros(&grid, 1, 1);
        copy(&a, &mut snapshot)?;
        a.set_global(0, 0, 42.0)?;

        let mut text = Vec::new();
        print(&a, &mut text)?;
        print(&snapshot, &mut text)?;
        Ok(text)
    })?;
    print!("{}", String::from_utf8_lossy(&out.into_iter().next().unwrap()?));
    Ok(())
}
