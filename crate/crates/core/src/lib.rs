//! Distributed dense linear algebra for SPMD programs.
//!
//! Ranks form a two-dimensional process grid over a message-passing
//! [`transport`]. Matrices are spread element-cyclically over the grid
//! ([`dist::DistMatrix`]) and the collective kernels in [`algorithms`] and
//! [`stats`] return identical results on every rank. [`capi`] is a flat,
//! handle-based boundary for foreign-language bindings and [`cli`] drives
//! benchmarks and file-based analyses.

// Numeric kernels index several buffers with one loop variable.
#![allow(clippy::needless_range_loop)]

pub mod algorithms;
pub mod capi;
pub mod cli;
pub mod dist;
pub mod error;
pub mod grid;
pub mod local;
pub mod stats;
pub mod table_io;
pub mod transport;

pub use error::{Error, Result};
