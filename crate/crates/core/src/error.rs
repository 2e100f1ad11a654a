//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate problem: {0}")]
    DegenerateProblem(String),

    #[error("factorization failed: {0}")]
    FactorizationFailed(String),

    #[error("line search stalled after {backtracks} backtracks")]
    LineSearchStalled { backtracks: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(
        "polynomial expansion of degree {degree} over {features} features \
         needs {columns} columns, above the cap of {cap}"
    )]
    ExpansionTooLarge {
        degree: usize,
        features: usize,
        columns: u128,
        cap: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
