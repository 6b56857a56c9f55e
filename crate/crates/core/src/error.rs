use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("transport: {0}")]
    Transport(String),

    #[error("timed out waiting for {0}")]
    Timeout(String),

    #[error("peer rank {0} disconnected")]
    Disconnected(usize),

    #[error("world aborted: another rank failed")]
    Aborted,

    #[error("collective length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("index ({row}, {col}) out of bounds for {height} x {width} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("global index {0} is not owned by this rank")]
    NotOwned(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Matrices must have the same datatype")]
    DatatypeMismatch,

    #[error("Matrices must have the same size")]
    SizeMismatch,

    #[error("matrices live on different grids")]
    GridMismatch,

    #[error("unknown datatype tag '{0}'")]
    UnknownTag(String),

    #[error("operation requires datatype 'd', got '{0}'")]
    UnsupportedDatatype(&'static str),

    #[error("value {0} is not representable in an integer matrix")]
    NotIntegral(f64),

    #[error("singular matrix: pivot {pivot:e} at step {step} is below {threshold:e}")]
    Singular {
        step: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("{0} did not converge within {1} sweeps")]
    NoConvergence(&'static str, usize),

    #[error("column {0} has zero variance and cannot be scaled")]
    ZeroVariance(usize),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}, column {column}: cannot parse '{token}'")]
    Parse {
        line: usize,
        column: usize,
        token: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
