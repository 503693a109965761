use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_BOUND_VIOLATION: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{failed} asserted bound check(s) failed")]
    BoundViolation { failed: usize },

    #[error(transparent)]
    Core(#[from] tensor_fsd::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use tensor_fsd::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::BoundViolation { .. } => EXIT_BOUND_VIOLATION,
            CliError::Core(e) => match e {
                E::Config(_) | E::DimensionMismatch(_) | E::IndexOutOfRange { .. } | E::ZeroRowSlice { .. } | E::Json(_) => {
                    EXIT_CONFIG
                }
                E::Io(_) | E::Format(_) | E::NonFinite { .. } => EXIT_IO,
                _ => EXIT_RUNTIME,
            },
        }
    }
}
