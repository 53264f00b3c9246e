use thiserror::Error;

use crate::trace::FitTrace;

/// Errors produced by model construction, fitting, and file IO.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is out of range or malformed.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The model violates one of its invariants (weights, symmetry, covariance floor).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// All mixture weights were non-positive after clipping.
    #[error("degenerate weights: no positive entry left after clipping")]
    DegenerateWeights,

    /// A gradient entry was NaN or infinite.
    #[error("non-finite gradient at iteration {iteration} (direction seed {direction_seed})")]
    NonFiniteGradient { iteration: usize, direction_seed: u64 },

    /// The objective became non-finite during fitting. Carries the trace so far.
    #[error("fit diverged at iteration {iteration}")]
    Diverged { iteration: usize, trace: Box<FitTrace> },

    /// A data or model file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// True for errors caused by numerical breakdown rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteGradient { .. } | Error::Diverged { .. } | Error::DegenerateWeights
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
