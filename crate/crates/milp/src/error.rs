use thiserror::Error;

use crate::model::VarId;

/// Errors raised while building a model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid bounds for `{name}`: [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
    #[error("variable {0:?} is not registered in this model")]
    UnknownVariable(VarId),
    #[error("quadratic coefficient {0} is negative; use the general piecewise formulation")]
    NotConvex(f64),
    #[error("variable `{name}` ranges over [{lower}, {upper}], outside the linearization domain [{start}, {end}]")]
    OutOfRange {
        name: String,
        lower: f64,
        upper: f64,
        start: f64,
        end: f64,
    },
    #[error("invalid breakpoints: {0}")]
    Breakpoints(String),
    #[error("big-M {big_m} is smaller than the upper bound {upper} of `{name}`")]
    BigMTooSmall { name: String, big_m: f64, upper: f64 },
    #[error("`{0}` is not a binary variable")]
    NotBinary(String),
    #[error("indicator target `{0}` must have a non-negative lower bound")]
    NegativeIndicatorTarget(String),
}

/// Errors raised by a solver backend.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("backend `{name}` unavailable: {reason}")]
    BackendUnavailable { name: String, reason: String },
    #[error("backend `{name}` failed: {reason}")]
    Backend { name: String, reason: String },
    #[error("solution file: {0}")]
    SolutionFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors raised when reading the LP text format.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct LpFormatError {
    pub line: usize,
    pub message: String,
}
