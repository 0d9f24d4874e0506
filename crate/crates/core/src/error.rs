use ies_milp::{MilpStatus, ModelError, SolverError};
use thiserror::Error;

use crate::case::ValidationReport;
use crate::verify::VerificationReport;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed case at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("case does not match the schema: {0}")]
    Schema(String),
    #[error("invalid case:\n{0}")]
    Invalid(ValidationReport),
}

#[derive(Debug, Error, PartialEq)]
pub enum DrError {
    #[error("adjustment bounds for {carrier} {kind}: {reason}")]
    Bounds {
        carrier: String,
        kind: &'static str,
        reason: String,
    },
    #[error("horizons differ: {0} vs {1} periods")]
    Horizon(usize, usize),
    #[error("{0} load is zero over the horizon but its adjusted load is not")]
    Degenerate(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum CarbonError {
    #[error("cannot bound emissions from device capacities: {0}")]
    UnboundedEmissions(String),
}

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Dr(#[from] DrError),
    #[error(transparent)]
    Carbon(#[from] CarbonError),
    #[error("model construction failed: {0}")]
    Model(#[from] ModelError),
    #[error("solver failed: {0}")]
    Solver(#[from] SolverError),
    #[error("infeasible: {}", families.join(", "))]
    Infeasible {
        /// Constraint families implicated, e.g. `heat balance`.
        families: Vec<String>,
        detail: String,
    },
    #[error("the model is unbounded")]
    Unbounded,
    #[error("solver stopped with status {status} and no feasible point")]
    NoSolution { status: MilpStatus },
    #[error("solution failed verification:\n{0}")]
    Verification(Box<VerificationReport>),
    #[error("bad sweep grid: {0}")]
    Grid(String),
    #[error("unknown scenario `{0}` (expected S1..S5 or custom)")]
    UnknownScenario(String),
}
