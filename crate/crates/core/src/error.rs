use thiserror::Error;

/// Errors produced by the simulation and estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet size must be at least 2 and at most 256, got {0}")]
    AlphabetSize(usize),

    #[error("rule table has {got} entries, expected {expected}")]
    TableLength { expected: usize, got: usize },

    #[error("symbol {symbol} out of range for alphabet of size {k}")]
    SymbolOutOfRange { symbol: usize, k: usize },

    #[error("neighborhood has length {got}, expected {expected}")]
    NeighborhoodLength { expected: usize, got: usize },

    #[error("window of length {len} is too short for radius {radius}")]
    WindowTooShort { len: usize, radius: usize },

    #[error("window [{have_lo}, {have_hi}] does not cover required interval [{need_lo}, {need_hi}]")]
    InsufficientCoverage {
        need_lo: i64,
        need_hi: i64,
        have_lo: i64,
        have_hi: i64,
    },

    #[error("empty configuration")]
    EmptyConfig,

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("orbit did not close within {steps} steps")]
    CycleBoundExceeded { steps: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
