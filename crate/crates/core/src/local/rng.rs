//! SplitMix64 streams.
//!
//! The n-th output of a generator seeded with `s` is `mix(s + n * GOLDEN)`, so
//! any position of the stream can be computed directly. Matrix fills use the
//! position derived from the element's global (row, column) so that the
//! generated matrix does not depend on how it is distributed.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform in [-1, 1).
    pub fn next_f64(&mut self) -> f64 {
        to_unit_interval(self.next_u64())
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

fn to_unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0
}

/// Value of element (i, j) in the matrix filled from `seed`.
pub fn element(seed: u64, i: usize, j: usize) -> f64 {
    let position = ((i as u64) << 32 | j as u64).wrapping_add(1);
    to_unit_interval(mix(seed.wrapping_add(position.wrapping_mul(GOLDEN))))
}
