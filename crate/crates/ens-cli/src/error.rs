//! CLI-side error type. `exit_code` maps the documented process statuses:
//! 2 for configuration/validation problems, 3 for a numerical abort.

use ens_core::CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("series error: {0}")]
    Series(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(CoreError::NumericalAbort { .. }) => 3,
            _ => 2,
        }
    }
}
