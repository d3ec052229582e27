use thiserror::Error;

/// Errors raised by the scattering, synthesis and monodromy routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("integrator failed at t = {at}: {reason}")]
    Integration { at: f64, reason: String },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("failed to parse input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
