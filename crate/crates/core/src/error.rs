use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fidelity level {level} out of range 1..={levels}")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("point {point:?} lies outside the domain of `{family}`")]
    OutOfDomain { family: String, point: Vec<f64> },

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    #[error("unknown acquisition `{0}`")]
    UnknownAcquisition(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("budget exhausted: spent {spent}, limit {limit}")]
    BudgetExhausted { spent: f64, limit: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
