//! Write a distributed matrix as CSV and read it back on a different grid.

use distla::dist::DistMatrix;
use distla::grid::Grid;
use distla::local::Tag;
use distla::table_io::{read_table_dist, write_table, Delimiter, TableFormat};
use distla::transport::run_in_process;

fn main() -> distla::Result<()> {
    let dir = std::env::temp_dir().join(format!("distla-table-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("m.csv");
    let format = TableFormat {
        delimiter: Delimiter::Comma,
        header: true,
        tag: Tag::D,
    };

    let written = run_in_process(2, |world| -> distla::Result<_> {
        let grid = Grid::new(&world, None, None)?;
        let m = DistMatrix::zeros(&grid, 6, 3);
        m.fill_uniform(5);
        write_table(&m, &path, format)?;
        m.gather()
    })?;
    let read = run_in_process(3, |world| -> distla::Result<_> {
        let grid = Grid::new(&world, None, None)?;
        read_table_dist(&path, &grid, format)?.gather()
    })?;

    print!("{}", std::fs::read_to_string(&path)?);
    let same = written[0].as_ref().ok() == read[0].as_ref().ok();
    println!("round trip exact: {same}");
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
