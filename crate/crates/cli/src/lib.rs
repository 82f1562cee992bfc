//! Batch driver: configuration, solver runs, property suites and data export.

pub mod commands;
pub mod config;
pub mod suites;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failed: {0}")]
    Solver(#[source] dhym::Error),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub(crate) fn config(e: dhym::Error) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn io(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }

    /// Process exit code: 2 for configuration problems, 3 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::ChecksFailed(_) | CliError::Io(_) => 1,
        }
    }
}

/// Fixed-width scientific notation used in every artifact.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.15e}")
}
