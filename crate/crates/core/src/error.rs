use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SlsError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SlsError {
    /// A configuration value is out of range or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// Caller-supplied data violates an operation's precondition.
    #[error("input error: {0}")]
    Input(String),
    /// A record or header breaks a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical error at step {step}: {message}")]
    Numerical { step: usize, message: String },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SlsError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SlsError::Io {
            path: path.into(),
            source,
        }
    }
}
