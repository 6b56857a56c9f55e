//! Ownership and index-map laws for every scheme and grid shape.

use std::collections::HashSet;

use distla::grid::{DistScheme, Grid};
use distla::transport::run_in_process;
use proptest::prelude::*;

const SCHEMES: [DistScheme; 3] = [DistScheme::McMr, DistScheme::VcStar, DistScheme::StarStar];

/// Per rank: grid coordinates, local extent, and the global image of every local slot.
type RankView = ((usize, usize), (usize, usize), Vec<(usize, usize)>, Vec<usize>);

fn collect(r: usize, c: usize, scheme: DistScheme, h: usize, w: usize) -> Vec<RankView> {
    run_in_process(r * c, |world| {
        let g = Grid::new(&world, Some(r), Some(c)).unwrap();
        let (lh, lw) = g.local_extent(scheme, h, w);
        let map = g.index_map(scheme);
        let mut image = Vec::new();
        for lj in 0..lw {
            for li in 0..lh {
                let (i, j) = map.local_to_global(li, lj);
                assert_eq!(map.global_to_local(i, j).unwrap(), (li, lj));
                image.push((i, j));
            }
        }
        let owners = (0..h).flat_map(|i| (0..w).map(move |j| (i, j))).map(|(i, j)| g.owner(scheme, i, j)).collect();
        ((g.my_row(), g.my_col()), (lh, lw), image, owners)
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn owned_sets_partition_the_matrix(r in 1usize..4, c in 1usize..4, h in 0usize..20, w in 0usize..20) {
        let views = collect(r, c, DistScheme::McMr, h, w);
        let mut seen = HashSet::new();
        for (rank, (_, _, image, owners)) in views.iter().enumerate() {
            for &(i, j) in image {
                prop_assert!(i < h && j < w);
                prop_assert!(seen.insert((i, j)), "({i},{j}) owned twice");
                prop_assert_eq!(owners[i * w + j], rank);
            }
        }
        prop_assert_eq!(seen.len(), h * w);
    }

    #[test]
    fn local_extents_sum_along_grid_axes(r in 1usize..4, c in 1usize..4, h in 0usize..20, w in 0usize..20) {
        let views = collect(r, c, DistScheme::McMr, h, w);
        for col in 0..c {
            let total: usize = views.iter().filter(|v| v.0 .1 == col).map(|v| v.1 .0).sum();
            prop_assert_eq!(total, h);
        }
        for row in 0..r {
            let total: usize = views.iter().filter(|v| v.0 .0 == row).map(|v| v.1 .1).sum();
            prop_assert_eq!(total, w);
        }
    }

    #[test]
    fn other_schemes_cover_every_element(r in 1usize..4, c in 1usize..4, h in 0usize..15, w in 0usize..15) {
        for scheme in SCHEMES {
            let views = collect(r, c, scheme, h, w);
            let mut counts = vec![0usize; h * w];
            for (_, _, image, _) in &views {
                for &(i, j) in image {
                    counts[i * w + j] += 1;
                }
            }
            let copies = if scheme == DistScheme::StarStar { r * c } else { 1 };
            prop_assert!(counts.iter().all(|&k| k == copies), "{scheme}: {counts:?}");
        }
    }
}
