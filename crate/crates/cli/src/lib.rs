//! Library side of the `dgn` command-line tool.

pub mod commands;
pub mod config;
pub mod gradcheck;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration.
    #[error("{0}")]
    Usage(String),
    /// The command ran but a checked quantity exceeded its tolerance.
    #[error("{0}")]
    Tolerance(String),
    #[error(transparent)]
    Core(#[from] dgn_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 0 success, 1 tolerance or runtime failure, 2 usage or config error.
    pub fn exit_code(&self) -> i32 {
        use dgn_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(
                E::InvalidParam { .. } | E::Shape { .. } | E::Unstable { .. } | E::StepTooLarge { .. },
            ) => 2,
            _ => 1,
        }
    }
}
