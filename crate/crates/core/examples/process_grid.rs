//! Element-cyclic ownership of a 5 x 7 matrix on a 2 x 3 grid.

use distla::grid::{DistScheme, Grid};
use distla::transport::run_in_process;

fn main() -> distla::Result<()> {
    let maps = run_in_process(6, |world| -> distla::Result<String> {
        let grid = Grid::new(&world, Some(2), Some(3))?;
        let (lh, lw) = grid.local_extent(DistScheme::McMr, 5, 7);
        let map = grid.index_map(DistScheme::McMr);
        let owned: Vec<String> = (0..lw)
            .flat_map(|lj| (0..lh).map(move |li| (li, lj)))
            .map(|(li, lj)| format!("{:?}", map.local_to_global(li, lj)))
            .collect();
        Ok(format!(
            "rank {} at ({}, {}) holds {lh} x {lw}: {}",
            grid.rank(),
            grid.my_row(),
            grid.my_col(),
            owned.join(" ")
        ))
    })?;
    for m in maps {
        println!("{}", m?);
    }
    Ok(())
}
