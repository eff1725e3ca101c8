use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("non-contiguous dates: {0}")]
    NonContiguousDates(String),

    #[error("duplicate entry: {0}")]
    Duplicate(String),

    #[error("missing observation: {0}")]
    Missing(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("collinear design: {0}")]
    Collinear(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("infeasible restrictions: {0}")]
    Infeasible(String),

    #[error("identification failed: {0}")]
    Identification(String),

    #[error("stage `{stage}` failed: {cause}")]
    Stage { stage: String, cause: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
