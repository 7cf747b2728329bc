use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the estimation, selection and benchmarking routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {message} (estimate {estimate:e}, error bound {error_bound:e}, {evaluations} evaluations)")]
    Numeric {
        message: String,
        estimate: f64,
        error_bound: f64,
        evaluations: usize,
    },

    #[error("line {line}: cannot parse {content:?} as a number")]
    Parse { line: usize, content: String },

    #[error("input contains no observations")]
    EmptyInput,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
