use std::path::PathBuf;

use thiserror::Error;

use crate::numerics::MathError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data. `row` is 1-based and counts the
    /// header as row 1.
    #[error("invalid data{}: {message}", row.map(|r| format!(" (row {r})")).unwrap_or_default())]
    Data { row: Option<usize>, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Math(#[from] MathError),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn data(message: impl Into<String>) -> Self {
        Error::Data { row: None, message: message.into() }
    }

    pub(crate) fn data_at(row: usize, message: impl Into<String>) -> Self {
        Error::Data { row: Some(row), message: message.into() }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
