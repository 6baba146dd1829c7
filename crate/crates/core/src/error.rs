use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The u/v circulation never drains: the conservation system is singular.
    #[error("loop divergence: conservation determinant {determinant:e} is not positive")]
    LoopDivergence { determinant: f64 },

    #[error("price of anarchy undefined: optimal cost is {optimal}")]
    UndefinedRatio { optimal: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("value out of range for `{field}`: {message}")]
    Range { field: String, message: String },

    #[error("i/o failure on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failure: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
