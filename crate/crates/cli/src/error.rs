use thiserror::Error;

use ecd_core::EcdError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("solver did not reach certified optimality: {0}")]
    NonOptimal(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Core(#[from] EcdError),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonOptimal(_) => 3,
            CliError::Invariant(_) => 4,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}
