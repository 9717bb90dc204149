use alloc::string::String;

use thiserror::Error;

/// Errors raised across the optimizer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoilError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("objective failure: {0}")]
    Objective(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, BoilError>;

macro_rules! invalid_input {
    ($($arg:tt)*) => {
        $crate::error::BoilError::InvalidInput(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid_input;
