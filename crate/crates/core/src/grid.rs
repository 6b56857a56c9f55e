//! r x c process grids and the element-cyclic data-to-rank maps.
//!
//! Grid coordinates are column-major: world rank = `row + col * r`. Matrix
//! rows are dealt cyclically over grid rows (the MC dimension) and columns
//! over grid columns (MR), with block size one.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::transport::Communicator;

/// How a distributed matrix is spread over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistScheme {
    /// Rows cyclic over grid rows, columns cyclic over grid columns.
    McMr,
    /// Rows cyclic over all ranks (in grid rank order), columns replicated.
    VcStar,
    /// Every rank holds the whole matrix.
    StarStar,
}

impl fmt::Display for DistScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistScheme::McMr => "[MC,MR]",
            DistScheme::VcStar => "[VC,*]",
            DistScheme::StarStar => "[*,*]",
        })
    }
}

/// Cyclic distribution of one matrix dimension over `stride` owners.
///
/// Global index `g` belongs to owner `(g + align) % stride`. A stride of one
/// means the dimension is replicated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisMap {
    pub stride: usize,
    pub me: usize,
    pub align: usize,
}

impl AxisMap {
    pub const REPLICATED: AxisMap = AxisMap {
        stride: 1,
        me: 0,
        align: 0,
    };

    /// First global index owned here.
    pub fn shift(&self) -> usize {
        (self.me + self.stride - self.align % self.stride) % self.stride
    }

    pub fn owner(&self, global: usize) -> usize {
        (global + self.align) % self.stride
    }

    pub fn local_len(&self, n: usize) -> usize {
        let shift = self.shift();
        if n > shift {
            (n - shift - 1) / self.stride + 1
        } else {
            0
        }
    }

    pub fn to_local(&self, global: usize) -> Option<usize> {
        (self.owner(global) == self.me).then(|| (global - self.shift()) / self.stride)
    }

    pub fn to_global(&self, local: usize) -> usize {
        self.shift() + local * self.stride
    }

    /// Same map with its origin moved `offset` entries forward.
    pub fn offset(&self, offset: usize) -> AxisMap {
        AxisMap {
            align: (self.align + offset) % self.stride,
            ..*self
        }
    }
}

struct GridInner {
    height: usize,
    width: usize,
    my_row: usize,
    my_col: usize,
    world: Communicator,
    row_comm: Communicator,
    col_comm: Communicator,
}

/// An r x c arrangement of the ranks of a world communicator.
///
/// Cheap to clone; clones compare equal with [`Grid::same_as`].
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Grid({}x{}, row {} col {})",
            self.height(),
            self.width(),
            self.my_row(),
            self.my_col()
        )
    }
}

/// Largest divisor of `size` not exceeding its square root.
pub fn auto_shape(size: usize) -> (usize, usize) {
    let mut r = 1;
    let mut d = 1;
    while d * d <= size {
        if size.is_multiple_of(d) {
            r = d;
        }
        d += 1;
    }
    (r, size / r)
}

impl Grid {
    /// Collective over `world`. `None` for both dimensions picks [`auto_shape`];
    /// giving one dimension derives the other.
    pub fn new(world: &Communicator, rows: Option<usize>, cols: Option<usize>) -> Result<Grid> {
        let size = world.size();
        let (r, c) = match (rows, cols) {
            (None, None) => auto_shape(size),
            (Some(r), None) if r > 0 && size.is_multiple_of(r) => (r, size / r),
            (None, Some(c)) if c > 0 && size.is_multiple_of(c) => (size / c, c),
            (Some(r), Some(c)) => (r, c),
            (r, c) => {
                return Err(Error::InvalidGrid(format!(
                    "cannot build {r:?} x {c:?} grid from {size} ranks"
                )))
            }
        };
        if r == 0 || c == 0 || r * c != size {
            return Err(Error::InvalidGrid(format!(
                "{r} x {c} grid does not match {size} ranks"
            )));
        }
        let rank = world.rank();
        let my_row = rank % r;
        let my_col = rank / r;
        let row_comm = world.split(my_row as i64, my_col as i64)?;
        let col_comm = world.split(my_col as i64, my_row as i64)?;
        Ok(Grid {
            inner: Arc::new(GridInner {
                height: r,
                width: c,
                my_row,
                my_col,
                world: world.clone(),
                row_comm,
                col_comm,
            }),
        })
    }

    /// Grid shape from a `RxC` or `auto` spec.
    pub fn parse_spec(spec: &str) -> Result<Option<(usize, usize)>> {
        if spec.eq_ignore_ascii_case("auto") {
            return Ok(None);
        }
        let (r, c) = spec
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::Config(format!("grid spec '{spec}' is not RxC or auto")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| Error::Config(format!("bad grid dimension '{s}'")))
        };
        Ok(Some((parse(r)?, parse(c)?)))
    }

    pub fn height(&self) -> usize {
        self.inner.height
    }

    pub fn width(&self) -> usize {
        self.inner.width
    }

    pub fn size(&self) -> usize {
        self.inner.height * self.inner.width
    }

    pub fn my_row(&self) -> usize {
        self.inner.my_row
    }

    pub fn my_col(&self) -> usize {
        self.inner.my_col
    }

    pub fn rank(&self) -> usize {
        self.inner.world.rank()
    }

    pub fn world(&self) -> &Communicator {
        &self.inner.world
    }

    /// Ranks sharing this grid row, ordered by grid column.
    pub fn row_comm(&self) -> &Communicator {
        &self.inner.row_comm
    }

    /// Ranks sharing this grid column, ordered by grid row.
    pub fn col_comm(&self) -> &Communicator {
        &self.inner.col_comm
    }

    pub fn rank_of(&self, row: usize, col: usize) -> usize {
        row + col * self.inner.height
    }

    pub fn coords_of(&self, rank: usize) -> (usize, usize) {
        (rank % self.inner.height, rank / self.inner.height)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }

    /// Row and column maps for `scheme` with zero alignment.
    pub fn axes(&self, scheme: DistScheme) -> (AxisMap, AxisMap) {
        match scheme {
            DistScheme::McMr => (
                AxisMap {
                    stride: self.height(),
                    me: self.my_row(),
                    align: 0,
                },
                AxisMap {
                    stride: self.width(),
                    me: self.my_col(),
                    align: 0,
                },
            ),
            DistScheme::VcStar => (
                AxisMap {
                    stride: self.size(),
                    me: self.rank(),
                    align: 0,
                },
                AxisMap::REPLICATED,
            ),
            DistScheme::StarStar => (AxisMap::REPLICATED, AxisMap::REPLICATED),
        }
    }

    /// World rank owning element (i, j). Replicated schemes answer with the caller's rank.
    pub fn owner(&self, scheme: DistScheme, i: usize, j: usize) -> usize {
        match scheme {
            DistScheme::McMr => self.rank_of(i % self.height(), j % self.width()),
            DistScheme::VcStar => i % self.size(),
            DistScheme::StarStar => self.rank(),
        }
    }

    /// Local buffer shape for an h x w matrix on the calling rank.
    pub fn local_extent(&self, scheme: DistScheme, h: usize, w: usize) -> (usize, usize) {
        let (rows, cols) = self.axes(scheme);
        (rows.local_len(h), cols.local_len(w))
    }

    pub fn index_map(&self, scheme: DistScheme) -> IndexMap {
        let (rows, cols) = self.axes(scheme);
        IndexMap { rows, cols }
    }
}

/// Global/local index translation for the calling rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexMap {
    pub rows: AxisMap,
    pub cols: AxisMap,
}

impl IndexMap {
    pub fn global_to_local(&self, i: usize, j: usize) -> Result<(usize, usize)> {
        let li = self.rows.to_local(i).ok_or(Error::NotOwned(i))?;
        let lj = self.cols.to_local(j).ok_or(Error::NotOwned(j))?;
        Ok((li, lj))
    }

    pub fn local_to_global(&self, li: usize, lj: usize) -> (usize, usize) {
        (self.rows.to_global(li), self.cols.to_global(lj))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::run_in_process;

    #[test]
    fn auto_shapes() {
        assert_eq!(auto_shape(1), (1, 1));
        assert_eq!(auto_shape(6), (2, 3));
        assert_eq!(auto_shape(4), (2, 2));
        assert_eq!(auto_shape(7), (1, 7));
        assert_eq!(auto_shape(12), (3, 4));
    }

    #[test]
    fn parse_specs() {
        assert_eq!(Grid::parse_spec("2x3").unwrap(), Some((2, 3)));
        assert_eq!(Grid::parse_spec("auto").unwrap(), None);
        assert!(Grid::parse_spec("2by3").is_err());
        assert!(Grid::parse_spec("0x3").is_err());
    }

    #[test]
    fn single_rank_grid() {
        let out = run_in_process(1, |w| {
            let g = Grid::new(&w, None, None).unwrap();
            (g.height(), g.width(), g.owner(DistScheme::McMr, 5, 9), g.local_extent(DistScheme::McMr, 5, 3))
        })
        .unwrap();
        assert_eq!(out[0], (1, 1, 0, (5, 3)));
    }

    #[test]
    fn column_grid_communicators() {
        let out = run_in_process(4, |w| {
            let g = Grid::new(&w, Some(4), Some(1)).unwrap();
            (g.row_comm().size(), g.col_comm().size(), g.col_comm().rank(), g.my_row())
        })
        .unwrap();
        for (rank, o) in out.iter().enumerate() {
            assert_eq!((o.0, o.1), (1, 4));
            assert_eq!(o.2, rank);
            assert_eq!(o.3, rank);
        }
    }

    #[test]
    fn mismatched_shape_rejected() {
        let out = run_in_process(3, |w| Grid::new(&w, Some(2), Some(2)).is_err()).unwrap();
        assert!(out.iter().all(|&e| e));
    }

    #[test]
    fn owner_examples() {
        let out = run_in_process(6, |w| {
            let g = Grid::new(&w, Some(2), Some(3)).unwrap();
            g.coords_of(g.owner(DistScheme::McMr, 5, 7))
        })
        .unwrap();
        assert!(out.iter().all(|&c| c == (1, 1)));
        let out = run_in_process(4, |w| {
            let g = Grid::new(&w, Some(2), Some(2)).unwrap();
            (g.owner(DistScheme::VcStar, 6, 0), g.owner(DistScheme::StarStar, 3, 3))
        })
        .unwrap();
        for (rank, o) in out.iter().enumerate() {
            assert_eq!(*o, (2, rank));
        }
    }

    #[test]
    fn local_extents_on_2x2() {
        let out = run_in_process(4, |w| {
            let g = Grid::new(&w, Some(2), Some(2)).unwrap();
            ((g.my_row(), g.my_col()), g.local_extent(DistScheme::McMr, 5, 5))
        })
        .unwrap();
        for (coords, ext) in out {
            match coords {
                (0, 0) => assert_eq!(ext, (3, 3)),
                (1, 1) => assert_eq!(ext, (2, 2)),
                _ => {}
            }
        }
    }

    #[test]
    fn local_heights_sum_over_column_grid() {
        let out = run_in_process(3, |w| {
            let g = Grid::new(&w, Some(3), Some(1)).unwrap();
            g.local_extent(DistScheme::McMr, 7, 1).0
        })
        .unwrap();
        assert_eq!(out, vec![3, 2, 2]);
        assert_eq!(out.iter().sum::<usize>(), 7);
    }

    #[test]
    fn index_map_example() {
        let m = IndexMap {
            rows: AxisMap { stride: 2, me: 1, align: 0 },
            cols: AxisMap::REPLICATED,
        };
        assert_eq!(m.global_to_local(5, 0).unwrap(), (2, 0));
        assert!(matches!(m.global_to_local(4, 0), Err(Error::NotOwned(4))));
    }

    #[test]
    fn aligned_axis_maps() {
        let base = AxisMap { stride: 3, me: 1, align: 0 };
        let shifted = base.offset(2);
        // global g in the shifted map is global g + 2 in the base map
        for g in 0..12 {
            assert_eq!(shifted.owner(g), base.owner(g + 2));
        }
        assert_eq!(shifted.shift(), 2);
        assert_eq!(shifted.local_len(5), 1);
    }
}
