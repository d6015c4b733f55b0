//! Experiment runner behind the `cbo` binary.

pub mod compare;
pub mod config;
pub mod runner;
pub mod sweep;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config, bad flags or unusable inputs. Nothing is written.
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) | Self::Io(_) => 1,
        }
    }
}
