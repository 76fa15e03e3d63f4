use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A quantity that has no defined value for the given input, such as the
    /// homophily of an isolated node.
    #[error("undefined value: {0}")]
    Undefined(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("{file}: declared {what} = {declared} but found {found}")]
    CountMismatch {
        file: String,
        what: String,
        declared: usize,
        found: usize,
    },

    #[error("{file}:{line}: label {label} outside [0, {classes})")]
    LabelRange {
        file: String,
        line: usize,
        label: i64,
        classes: usize,
    },

    #[error("{file}:{line}: non-finite feature value {value:?}")]
    NonFinite { file: String, line: usize, value: String },

    #[error("{file}:{line}: {msg}")]
    Malformed { file: String, line: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn invalid_state(msg: impl Into<String>) -> Self {
        Error::InvalidState(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// True for errors caused by the input data rather than configuration or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::MissingFile(_)
                | Error::CountMismatch { .. }
                | Error::LabelRange { .. }
                | Error::NonFinite { .. }
                | Error::Malformed { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}
