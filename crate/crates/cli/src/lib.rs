//! Library side of the `tkgmlp` binary: run configuration, checkpoints and
//! the subcommand implementations. Kept separate from `main.rs` so tests can
//! drive the pipeline without spawning processes.

pub mod checkpoint;
pub mod commands;
pub mod config;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Core(#[from] tkgmlp::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for anything the user can fix in the invocation or config file,
    /// 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Core(tkgmlp::Error::Config(_)) => 1,
            _ => 2,
        }
    }
}
