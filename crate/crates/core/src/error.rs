//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or weight shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A function argument violates its contract.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Configuration file or option is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Input data cannot be used (gaps, misalignment, missing context).
    #[error("data error: {0}")]
    Data(String),

    /// A computation produced NaN/Inf or hit a mathematical domain violation.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Model file is malformed or inconsistent.
    #[error("model file error: {0}")]
    ModelFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for CLI use: 2 config, 3 data, 4 numeric, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Argument(_) => 2,
            Error::Data(_) | Error::Dimension(_) | Error::ModelFile(_) | Error::Io(_) => 3,
            Error::Numeric(_) => 4,
        }
    }
}
