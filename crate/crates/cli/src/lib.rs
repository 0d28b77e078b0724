//! Config parsing, solver dispatch and result files for the `fpif` binary.

pub mod build;
pub mod config;
pub mod output;
pub mod run;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Schema and data problems; the message names the field path.
    #[error("config error {0}")]
    Config(String),

    #[error("{0}")]
    Solver(#[from] fpif_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("solution error: {0}")]
    Solution(String),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}
