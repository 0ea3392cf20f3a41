use std::path::PathBuf;

use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands with incompatible dimensions; names both shapes.
    #[error("{op}: incompatible shapes {a_rows}x{a_cols} and {b_rows}x{b_cols}")]
    ShapeMismatch {
        op: &'static str,
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
    },

    /// Invalid operator or descriptor parameters.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Invalid input data (undersized image, empty dataset, bad labels, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// Value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numeric routine failed beyond its tolerance.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file contents (manifest, image, feature container).
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
