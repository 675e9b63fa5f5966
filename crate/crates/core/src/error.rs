use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite numeric input: {0}")]
    NumericInput(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
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

    /// True for errors that the CLI reports with the usage/config exit code.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidConfig(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
