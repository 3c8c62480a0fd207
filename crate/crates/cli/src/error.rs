use std::path::PathBuf;

use mosbench_core::error::{BenchError, PrepError, StoreError};
use thiserror::Error;

/// Exit status for usage mistakes and unusable input.
pub const EXIT_INPUT: u8 = 2;
/// Exit status for failures while computing or writing results.
pub const EXIT_COMPUTE: u8 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("cannot read input: {0}")]
    Input(#[source] StoreError),
    #[error("{path}: {count} invariant violation(s)")]
    Invalid { path: PathBuf, count: usize },
    #[error("cannot write output: {0}")]
    Output(#[source] StoreError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Prep(#[from] PrepError),
    #[error("server stopped: {0}")]
    Serve(#[source] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Input(_) | CliError::Invalid { .. } => EXIT_INPUT,
            CliError::Output(_) | CliError::Bench(_) | CliError::Prep(_) | CliError::Serve(_) => EXIT_COMPUTE,
        }
    }
}
