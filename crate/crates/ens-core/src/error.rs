use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical abort at t = {t}: {reason}")]
    NumericalAbort { t: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, CoreError>;
