use std::time::Duration;

use crate::error::SolverError;
use crate::lp::LpData;
use crate::model::{MilpModel, Relation, VarId};
pub use crate::simplex::LpStatus;
use crate::simplex::Simplex;

/// Options shared by every backend.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Relative gap at which branch-and-bound stops with `Optimal`.
    pub gap_tol: f64,
    pub node_limit: Option<usize>,
    pub time_limit: Option<Duration>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            node_limit: None,
            time_limit: None,
        }
    }
}

/// Result of solving the continuous relaxation of a model.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    /// One multiplier per constraint: the objective's sensitivity to its rhs.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// For infeasible problems: multipliers `y` on the constraints such that
    /// no point inside the variable and row bounds satisfies `y.(Ax - s) = 0`.
    pub farkas: Option<Vec<f64>>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn value(&self, v: VarId) -> f64 {
        self.primal[v.index()]
    }

    /// Objective of the dual problem built from `duals` and `reduced_costs`.
    pub fn dual_objective(&self, model: &MilpModel) -> f64 {
        let mut total = model.objective().constant_term();
        for (c, &y) in model.constraints().iter().zip(&self.duals) {
            total += y * c.rhs;
        }
        for (v, &d) in model.variables().iter().zip(&self.reduced_costs) {
            if d > 1e-12 {
                total += d * v.lower;
            } else if d < -1e-12 {
                total += d * v.upper;
            }
        }
        total
    }
}

/// Solves the continuous relaxation of `model` (binaries relaxed to their bounds).
pub fn solve_lp(model: &MilpModel) -> Result<LpSolution, SolverError> {
    let lp = LpData::from_model(model);
    let mut simplex = Simplex::new(lp)?;
    let status = simplex.solve_primal()?;
    let n = model.num_variables();
    let m = model.num_constraints();
    let mut sol = LpSolution {
        status,
        objective: f64::NAN,
        primal: vec![0.0; n],
        duals: vec![0.0; m],
        reduced_costs: vec![0.0; n],
        farkas: None,
        iterations: simplex.iterations(),
    };
    match status {
        LpStatus::Optimal => {
            sol.objective = simplex.objective();
            sol.primal = simplex.primal();
            sol.duals = simplex.duals();
            sol.reduced_costs = simplex.reduced_costs();
        }
        LpStatus::Unbounded => {
            sol.objective = f64::NEG_INFINITY;
            sol.primal = simplex.primal();
        }
        LpStatus::Infeasible => {
            sol.objective = f64::INFINITY;
            sol.farkas = simplex.ray().map(|y| orient_certificate(model, y));
        }
    }
    Ok(sol)
}

/// Largest value of `y.(Ax - s)` over the variable box and row bounds; a
/// negative value proves infeasibility. Multipliers below `1e-9 * max|y|`
/// are treated as round-off and ignored.
pub fn certificate_slack(model: &MilpModel, y: &[f64]) -> f64 {
    let ymax = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tiny = 1e-9 * ymax;
    let mut g = vec![0.0; model.num_variables()];
    for (c, &yi) in model.constraints().iter().zip(y) {
        for &(v, a) in c.expr.terms() {
            g[v.index()] += yi * a;
        }
    }
    let mut total = 0.0;
    for (v, &gj) in model.variables().iter().zip(&g) {
        if gj.abs() > tiny {
            total += box_max(gj, v.lower, v.upper);
        }
    }
    for (c, &yi) in model.constraints().iter().zip(y) {
        if yi.abs() <= tiny {
            continue;
        }
        let (lo, hi) = match c.relation {
            Relation::Le => (f64::NEG_INFINITY, c.rhs),
            Relation::Ge => (c.rhs, f64::INFINITY),
            Relation::Eq => (c.rhs, c.rhs),
        };
        total += box_max(-yi, lo, hi);
    }
    total
}

fn box_max(g: f64, lo: f64, hi: f64) -> f64 {
    if g > 0.0 {
        g * hi
    } else if g < 0.0 {
        g * lo
    } else {
        0.0
    }
}

fn orient_certificate(model: &MilpModel, y: &[f64]) -> Vec<f64> {
    let flipped: Vec<f64> = y.iter().map(|v| -v).collect();
    if certificate_slack(model, &flipped) < certificate_slack(model, y) {
        flipped
    } else {
        y.to_vec()
    }
}
