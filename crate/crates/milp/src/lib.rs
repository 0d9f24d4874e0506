//! Mixed-integer linear models, linearization helpers, and an embedded
//! solver (bounded revised simplex inside best-first branch-and-bound).

pub mod backend;
pub mod bnb;
pub mod error;
mod lp;
pub mod lp_format;
mod lu;
pub mod model;
pub mod pwl;
mod simplex;
pub mod solution;

pub use backend::{parse_solution, EmbeddedBackend, ExternalBackend, SolverBackend};
pub use bnb::{relative_gap, solve_milp, MilpSolution, MilpStatus, TracePoint, INTEGRALITY_TOL};
pub use error::{LpFormatError, ModelError, SolverError};
pub use lp_format::{read_lp, write_lp};
pub use model::{
    Constraint, ConstraintId, LinExpr, MilpModel, Relation, VarId, VarKind, Variable,
};
pub use pwl::{
    bigm_indicator, bigm_indicator_complement, pwl_convex, pwl_convex_with, pwl_general,
    ConvexPwl, Quadratic,
};
pub use solution::{certificate_slack, solve_lp, LpSolution, LpStatus, SolveOptions};
