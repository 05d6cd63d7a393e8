//! Command-line front end for the simulation/optimization toolkit:
//! JSON configuration with flag overrides, sweep orchestration, CSV
//! emission, a Monte-Carlo-vs-closed-form validation harness, and a fast
//! self-test of the numeric oracles.

pub mod config;
pub mod runs;

use thiserror::Error;

/// Process-level failure classes; each maps to a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration. Exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// A validation run exceeded tolerance or a self-test failed. Exit 1.
    #[error("validation failure: {0}")]
    Validation(String),
    /// The convex solver or a closed-form evaluation failed. Exit 3.
    #[error("solver failure: {0}")]
    Solver(String),
    /// Filesystem trouble reading inputs or writing outputs. Exit 2.
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}
