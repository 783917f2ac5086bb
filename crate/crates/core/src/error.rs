use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("assumption (A) violated: {0}")]
    AssumptionViolated(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("inadmissible: {0}")]
    Inadmissible(String),

    #[error("sampler initialization failed: {0}")]
    Initialization(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite risk at replication {replication}")]
    NonFiniteRisk { replication: u64 },

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidInput(_)
            | Error::DimensionMismatch { .. }
            | Error::Unsupported(_) => 2,
            Error::Precondition(_) | Error::Inadmissible(_) | Error::AssumptionViolated(_) => 3,
            _ => 4,
        }
    }
}
