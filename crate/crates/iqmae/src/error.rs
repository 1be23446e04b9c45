//! Crate-wide error type.
//!
//! The CLI maps these onto its exit-code taxonomy: config errors → 2,
//! I/O errors → 3, numerical aborts → 4.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, manifest, or argument.
    #[error("config error: {0}")]
    Config(String),

    /// Shape or index mismatch between tensors, plans, or datasets.
    #[error("shape error: {0}")]
    Shape(String),

    /// A non-finite value was produced during training or evaluation.
    #[error("numerical abort at step {step}: {what}")]
    Numerical { step: usize, what: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// Exit code used by the command-line frontend.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Shape(_) | Error::Json(_) => 2,
            Error::Io(_) => 3,
            Error::Numerical { .. } => 4,
        }
    }
}
