//! CLI-level errors with their process exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("no positive key rate: {0}")]
    NoPositiveRate(String),

    #[error(transparent)]
    Core(#[from] cvqkd_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 is success; config problems exit 2, a link with no positive rate
    /// exits 3, everything else 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NoPositiveRate(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
