use thiserror::Error;

use crate::minnorm::MinNormError;

/// A parameter outside its admissible domain.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct ParamError {
    pub field: &'static str,
    pub message: String,
}

impl ParamError {
    pub(crate) fn new(field: &'static str, message: String) -> Self {
        Self { field, message }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("starting point has dimension {got}, objective expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("objective returned a non-finite value at the starting point")]
    NonFinite,
    #[error("min-norm subproblem failed: {0}")]
    MinNorm(#[from] MinNormError),
}
