use thiserror::Error;

use crate::expr::{DiffError, EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error(transparent)]
    Diff(#[from] DiffError),

    #[error("invalid interval [{lo}, {hi}]: need finite lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("integrand returned non-finite value {value} at {at:?}")]
    NonFinite { value: f64, at: Vec<f64> },
}
