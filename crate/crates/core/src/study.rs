//! Scenario comparison and parameter sweeps.

use ies_milp::{SolveOptions, SolverBackend};
use rayon::prelude::*;
use serde::Serialize;

use crate::case::CaseData;
use crate::dispatch::{run_scenario, DispatchSolution};
use crate::error::DispatchError;
use crate::scenario::ScenarioSpec;

/// Runs `f` over `items` on at most `jobs` threads, keeping input order.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

/// One line of the scenario comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRow {
    pub scenario: String,
    pub status: String,
    pub total_cost: f64,
    pub purchase_cost: f64,
    pub carbon_cost: f64,
    pub maintenance_cost: f64,
    pub dr_cost: f64,
    /// Exact actual emissions, kg.
    pub emissions: f64,
    pub objective: f64,
    pub error: Option<String>,
}

impl ScenarioRow {
    fn from_result(spec: &ScenarioSpec, result: &Result<DispatchSolution, DispatchError>) -> Self {
        match result {
            Ok(sol) => Self {
                scenario: spec.id.clone(),
                status: sol.solver.status.as_str().into(),
                total_cost: sol.costs.total,
                purchase_cost: sol.costs.purchase,
                carbon_cost: sol.costs.carbon,
                maintenance_cost: sol.costs.maintenance,
                dr_cost: sol.costs.dr,
                emissions: sol.emissions.actual.total,
                objective: sol.solver.objective,
                error: None,
            },
            Err(e) => Self {
                scenario: spec.id.clone(),
                status: error_status(e).into(),
                total_cost: f64::NAN,
                purchase_cost: f64::NAN,
                carbon_cost: f64::NAN,
                maintenance_cost: f64::NAN,
                dr_cost: f64::NAN,
                emissions: f64::NAN,
                objective: f64::NAN,
                error: Some(e.to_string()),
            },
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Short status label for a failed run.
pub fn error_status(e: &DispatchError) -> &'static str {
    match e {
        DispatchError::Infeasible { .. } => "infeasible",
        DispatchError::Unbounded => "unbounded",
        DispatchError::NoSolution { .. } => "limit",
        DispatchError::Verification(_) => "unverified",
        _ => "error",
    }
}

/// Relative change from the first to the last scenario, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub from: &'static str,
    pub to: &'static str,
    /// Positive when the total cost falls.
    pub cost_reduction_pct: f64,
    /// Positive when emissions fall.
    pub emission_reduction_pct: f64,
}

#[derive(Debug, Serialize)]
pub struct ScenarioReport {
    pub rows: Vec<ScenarioRow>,
    /// S5 relative to S1 when both solved.
    pub comparison: Option<Comparison>,
    #[serde(skip)]
    pub solutions: Vec<Result<DispatchSolution, DispatchError>>,
}

impl ScenarioReport {
    pub fn row(&self, id: &str) -> Option<&ScenarioRow> {
        self.rows.iter().find(|r| r.scenario == id)
    }

    pub fn solution(&self, id: &str) -> Option<&DispatchSolution> {
        self.solutions
            .iter()
            .filter_map(|r| r.as_ref().ok())
            .find(|s| s.scenario.id == id)
    }
}

/// Solves S1..S5 and tabulates them.
pub fn run_all_scenarios(
    case: &CaseData,
    backend: &dyn SolverBackend,
    opts: &SolveOptions,
    jobs: usize,
) -> ScenarioReport {
    run_scenarios(case, &ScenarioSpec::all(), backend, opts, jobs)
}

pub fn run_scenarios(
    case: &CaseData,
    specs: &[ScenarioSpec],
    backend: &dyn SolverBackend,
    opts: &SolveOptions,
    jobs: usize,
) -> ScenarioReport {
    let solutions = parallel_map(specs, jobs, |spec| run_scenario(case, spec, backend, opts));
    let rows: Vec<ScenarioRow> = specs
        .iter()
        .zip(&solutions)
        .map(|(spec, r)| ScenarioRow::from_result(spec, r))
        .collect();
    let find = |id: &str| rows.iter().find(|r| r.scenario == id && r.is_ok());
    let comparison = match (find("S1"), find("S5")) {
        (Some(a), Some(b)) => Some(Comparison {
            from: "S1",
            to: "S5",
            cost_reduction_pct: 100.0 * (a.total_cost - b.total_cost) / a.total_cost,
            emission_reduction_pct: 100.0 * (a.emissions - b.emissions) / a.emissions,
        }),
        _ => None,
    };
    ScenarioReport {
        rows,
        comparison,
        solutions,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Lambda,
    D,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Lambda => "lambda",
            SweepParam::D => "d",
        }
    }

    pub fn apply(self, case: &CaseData, value: f64) -> CaseData {
        let mut c = case.clone();
        match self {
            SweepParam::Lambda => c.carbon.lambda_base = value,
            SweepParam::D => c.carbon.interval_d = value,
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub status: String,
    pub emissions: f64,
    pub carbon_cost: f64,
    pub total_cost: f64,
    pub objective: f64,
    pub error: Option<String>,
}

impl SweepPoint {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Checks that a grid is non-empty, positive and strictly increasing.
pub fn check_grid(grid: &[f64]) -> Result<(), DispatchError> {
    if grid.is_empty() {
        return Err(DispatchError::Grid("empty grid".into()));
    }
    if let Some(v) = grid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(DispatchError::Grid(format!("values must be positive, got {v}")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DispatchError::Grid("values must be strictly increasing".into()));
    }
    Ok(())
}

/// Re-solves `scenario` once per grid value of `param`. Failures are
/// recorded per point; the sweep carries on.
pub fn sweep(
    case: &CaseData,
    scenario: &ScenarioSpec,
    param: SweepParam,
    grid: &[f64],
    backend: &dyn SolverBackend,
    opts: &SolveOptions,
    jobs: usize,
) -> Result<Vec<SweepPoint>, DispatchError> {
    check_grid(grid)?;
    Ok(parallel_map(grid, jobs, |&value| {
        let c = param.apply(case, value);
        match run_scenario(&c, scenario, backend, opts) {
            Ok(sol) => SweepPoint {
                value,
                status: sol.solver.status.as_str().into(),
                emissions: sol.emissions.actual.total,
                carbon_cost: sol.costs.carbon,
                total_cost: sol.costs.total,
                objective: sol.solver.objective,
                error: None,
            },
            Err(e) => SweepPoint {
                value,
                status: error_status(&e).into(),
                emissions: f64::NAN,
                carbon_cost: f64::NAN,
                total_cost: f64::NAN,
                objective: f64::NAN,
                error: Some(e.to_string()),
            },
        }
    }))
}

pub fn sweep_lambda(
    case: &CaseData,
    scenario: &ScenarioSpec,
    grid: &[f64],
    backend: &dyn SolverBackend,
    opts: &SolveOptions,
    jobs: usize,
) -> Result<Vec<SweepPoint>, DispatchError> {
    sweep(case, scenario, SweepParam::Lambda, grid, backend, opts, jobs)
}

pub fn sweep_interval(
    case: &CaseData,
    scenario: &ScenarioSpec,
    grid: &[f64],
    backend: &dyn SolverBackend,
    opts: &SolveOptions,
    jobs: usize,
) -> Result<Vec<SweepPoint>, DispatchError> {
    sweep(case, scenario, SweepParam::D, grid, backend, opts, jobs)
}
