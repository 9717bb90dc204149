//! Command line, run logs, benchmark reports and the external-trainer
//! adapter around [`boil_core`].
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod config;
pub mod external;
pub mod records;

use std::io;

use boil_core::BoilError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed log {path}: {msg}")]
    Log { path: String, msg: String },
    #[error(transparent)]
    Run(#[from] BoilError),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    /// 2 for anything the user has to fix in the input, 1 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Log { .. } => 2,
            CliError::Run(BoilError::InvalidInput(_)) => 2,
            CliError::Run(_) | CliError::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
