use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The quadrature grid cannot resolve the requested mode set without aliasing.
    #[error("grid with {nodes} nodes per dimension cannot carry cutoff N={modes} (needs at least {} nodes)", 2 * .modes + 1)]
    Aliasing { nodes: usize, modes: usize },

    #[error("non-finite value at node {index} ({context})")]
    NonFinite { index: usize, context: &'static str },

    #[error("coefficient list has cutoff K={available}, cannot project to N={requested}")]
    Cutoff { available: usize, requested: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge for {what}: achieved relative change {achieved:e}, target {target:e}")]
    Quadrature {
        what: String,
        achieved: f64,
        target: f64,
    },

    #[error("step {step}: non-finite value at node {node}")]
    NumericalAbort { step: usize, node: usize },

    #[error("no snapshot at t={time}")]
    MissingSnapshot { time: f64 },

    #[error("fit needs at least 3 positive errors at t={time}, found {found}")]
    InsufficientData { time: f64, found: usize },

    #[error("malformed coefficient file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("property violated: {0}")]
    PropertyViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status: 2 configuration or input, 3 numerical failure, 4 property violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalAbort { .. }
            | Error::NonFinite { .. }
            | Error::Quadrature { .. }
            | Error::InsufficientData { .. } => 3,
            Error::PropertyViolation(_) => 4,
            _ => 2,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
