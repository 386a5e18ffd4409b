//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by mesh construction, basis assembly, transforms and I/O.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size mismatch in {context}: expected {expected}, got {got}")]
    SizeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("degenerate point set: all points coincide, cannot split")]
    DegenerateSplit,

    #[error("unknown basis function id {0}")]
    UnknownFunction(usize),

    #[error("level {level} out of range (tree depth {depth})")]
    LevelOutOfRange { level: usize, depth: usize },

    #[error("model construction failed: {0}")]
    ModelConstruction(String),

    #[error("malformed input file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
