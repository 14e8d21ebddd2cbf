use sls_core::SlsError;
use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] SlsError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Stable process exit code: 2 usage, 3 validation, 4 numerical, 1 other.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(SlsError::Config(_)) => EXIT_USAGE,
            CliError::Core(SlsError::Validation(_) | SlsError::Input(_) | SlsError::Parse { .. }) => {
                EXIT_VALIDATION
            }
            CliError::Core(SlsError::Numerical { .. }) => EXIT_NUMERICAL,
            CliError::Core(SlsError::Io { .. }) | CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
