//! Numeric text tables.
//!
//! Every rank reads the whole file and keeps the elements it owns, so the
//! file must be visible to all ranks. Blank lines are ignored; line numbers
//! in errors are 1-based physical lines.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dist::DistMatrix;
use crate::error::{Error, Result};
use crate::grid::{DistScheme, Grid};
use crate::local::{Scalar, Tag};
use crate::transport::ReduceOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    /// Runs of spaces and tabs.
    Whitespace,
    Comma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableFormat {
    pub delimiter: Delimiter,
    /// Skip the first non-blank line.
    pub header: bool,
    pub tag: Tag,
}

impl Default for TableFormat {
    fn default() -> Self {
        TableFormat {
            delimiter: Delimiter::Whitespace,
            header: false,
            tag: Tag::D,
        }
    }
}

struct Table {
    height: usize,
    width: usize,
    /// Row-major.
    values: Vec<Scalar>,
}

fn parse_token(tok: &str, tag: Tag) -> Option<Scalar> {
    match tag {
        Tag::D => tok.parse::<f64>().ok().map(Scalar::D),
        Tag::I => tok.parse::<i64>().ok().map(Scalar::I),
    }
}

fn parse_table(text: &str, format: TableFormat) -> Result<Table> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    if format.header {
        lines.next();
    }
    let mut width = None;
    let mut height = 0;
    let mut values = Vec::new();
    for (line, text) in lines {
        let tokens: Vec<&str> = match format.delimiter {
            Delimiter::Whitespace => text.split_whitespace().collect(),
            Delimiter::Comma => text.split(',').map(str::trim).collect(),
        };
        let expected = *width.get_or_insert(tokens.len());
        if tokens.len() != expected {
            return Err(Error::RaggedRow {
                line,
                expected,
                found: tokens.len(),
            });
        }
        for (c, tok) in tokens.iter().enumerate() {
            let v = parse_token(tok, format.tag).ok_or_else(|| Error::Parse {
                line,
                column: c + 1,
                token: tok.to_string(),
            })?;
            values.push(v);
        }
        height += 1;
    }
    Ok(Table {
        height,
        width: width.unwrap_or(0),
        values,
    })
}

/// Collective: reads a table into an `[MC,MR]` matrix.
///
/// An empty file yields a 0 x 0 matrix. If any rank fails to read or parse
/// the file, every rank returns an error.
pub fn read_table_dist(path: impl AsRef<Path>, grid: &Grid, format: TableFormat) -> Result<DistMatrix> {
    let local = fs::read_to_string(path.as_ref())
        .map_err(Error::from)
        .and_then(|text| parse_table(&text, format));
    let (failed, h, w) = match &local {
        Ok(t) => (0.0, t.height as f64, t.width as f64),
        Err(_) => (1.0, 0.0, 0.0),
    };
    let hi = grid.world().allreduce(ReduceOp::Max, &[failed, h, w])?;
    let lo = grid.world().allreduce(ReduceOp::Min, &[h, w])?;
    let table = local?;
    if hi[0] != 0.0 {
        return Err(Error::Transport(format!(
            "another rank failed to read {}",
            path.as_ref().display()
        )));
    }
    if hi[1] != lo[0] || hi[2] != lo[1] {
        return Err(Error::DimensionMismatch(format!(
            "ranks disagree on the shape of {}",
            path.as_ref().display()
        )));
    }
    let m = DistMatrix::new(grid, table.height, table.width, format.tag, DistScheme::McMr);
    let w = table.width;
    m.update_local(|i, j, _| table.values[i * w + j].to_bits());
    Ok(m)
}

/// Shortest text that parses back to exactly `v`.
fn round_trip(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Collective: gathers `a` and writes it from world rank 0 at full precision.
///
/// With `header` set, a line `V1 V2 ...` precedes the data. An empty matrix
/// produces an empty file. The write status is shared so every rank returns
/// the same outcome.
pub fn write_table(a: &DistMatrix, path: impl AsRef<Path>, format: TableFormat) -> Result<()> {
    let full = a.gather()?;
    let world = a.grid().world();
    let status = if world.rank() == 0 {
        let sep = match format.delimiter {
            Delimiter::Whitespace => " ",
            Delimiter::Comma => ",",
        };
        let mut out = String::new();
        if full.height() > 0 && full.width() > 0 {
            if format.header {
                let names: Vec<String> = (1..=full.width()).map(|j| format!("V{j}")).collect();
                out.push_str(&names.join(sep));
                out.push('\n');
            }
            for i in 0..full.height() {
                let row: Vec<String> = (0..full.width())
                    .map(|j| match full.tag() {
                        Tag::D => round_trip(full.at(i, j)),
                        Tag::I => (full.bits_at(i, j) as i64).to_string(),
                    })
                    .collect();
                out.push_str(&row.join(sep));
                out.push('\n');
            }
        }
        let res = fs::File::create(path.as_ref()).and_then(|mut f| {
            f.write_all(out.as_bytes())?;
            f.flush()
        });
        match res {
            Ok(()) => Vec::new(),
            Err(e) => e.to_string().into_bytes(),
        }
    } else {
        Vec::new()
    };
    let status = world.broadcast(0, status)?;
    if status.is_empty() {
        Ok(())
    } else {
        Err(Error::Io(std::io::Error::other(String::from_utf8_lossy(&status).into_owned())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::LocalMatrix;
    use crate::transport::run_in_process;

    fn read_on(r: usize, c: usize, text: &str, format: TableFormat) -> Result<LocalMatrix> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.txt");
        fs::write(&path, text).unwrap();
        let out = run_in_process(r * c, |w| {
            let g = Grid::new(&w, Some(r), Some(c)).unwrap();
            read_table_dist(&path, &g, format).and_then(|m| m.gather()).map_err(|e| e.to_string())
        })
        .unwrap();
        out.into_iter()
            .next()
            .unwrap()
            .map_err(Error::Config)
    }

    #[test]
    fn two_by_two() {
        let m = read_on(1, 1, "1 2\n3 4\n", TableFormat::default()).unwrap();
        assert_eq!(m, LocalMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]));
        assert_eq!(read_on(2, 2, "1 2\n3 4\n", TableFormat::default()).unwrap(), m);
    }

    #[test]
    fn ragged_names_line() {
        let e = read_on(1, 2, "1 2\n3\n", TableFormat::default()).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
    }

    #[test]
    fn bad_token_names_line_and_column() {
        let e = read_on(1, 1, "1 2\n\n3 x\n", TableFormat::default()).unwrap_err().to_string();
        assert!(e.contains("line 3, column 2"), "{e}");
    }

    #[test]
    fn empty_file() {
        let m = read_on(2, 1, "", TableFormat::default()).unwrap();
        assert_eq!((m.height(), m.width()), (0, 0));
    }

    #[test]
    fn comma_and_header() {
        let f = TableFormat {
            delimiter: Delimiter::Comma,
            header: true,
            tag: Tag::D,
        };
        let m = read_on(1, 1, "a,b\n1.5,2.5\n", f).unwrap();
        assert_eq!(m, LocalMatrix::from_rows(&[&[1.5, 2.5]]));
    }

    #[test]
    fn integer_tag_rejects_fractions() {
        let f = TableFormat {
            tag: Tag::I,
            ..TableFormat::default()
        };
        let m = read_on(1, 1, "1 -2\n", f).unwrap();
        assert_eq!(m.get(0, 1).unwrap(), Scalar::I(-2));
        assert!(read_on(1, 1, "1 2.5\n", f).is_err());
    }

    #[test]
    fn missing_file_fails_everywhere() {
        let out = run_in_process(2, |w| {
            let g = Grid::new(&w, None, None).unwrap();
            read_table_dist("/nonexistent/table.txt", &g, TableFormat::default()).is_err()
        })
        .unwrap();
        assert_eq!(out, vec![true, true]);
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.txt");
        let mut a = LocalMatrix::zeros(7, 3);
        a.fill_uniform(44);
        a.set(0, 0, 1e-300).unwrap();
        a.set(1, 1, -6.02e23).unwrap();
        a.set(2, 2, 1.0 / 3.0).unwrap();
        for (r, c) in [(1, 1), (2, 2)] {
            for fmt in [
                TableFormat::default(),
                TableFormat {
                    delimiter: Delimiter::Comma,
                    header: true,
                    tag: Tag::D,
                },
            ] {
                let back = run_in_process(r * c, |w| {
                    let g = Grid::new(&w, Some(r), Some(c)).unwrap();
                    let d = DistMatrix::from_global(&g, &a, DistScheme::McMr);
                    write_table(&d, &path, fmt).unwrap();
                    read_table_dist(&path, &g, fmt).unwrap().gather().unwrap()
                })
                .unwrap();
                assert_eq!(back[0], a);
            }
        }
    }

    #[test]
    fn empty_matrix_writes_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.txt");
        run_in_process(1, |w| {
            let g = Grid::new(&w, None, None).unwrap();
            write_table(&DistMatrix::zeros(&g, 0, 0), &path, TableFormat::default()).unwrap();
        })
        .unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "");
    }
}
