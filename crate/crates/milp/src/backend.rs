use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use crate::bnb::{relative_gap, solve_milp, MilpSolution, MilpStatus};
use crate::error::SolverError;
use crate::lp_format::{lp_names, write_lp};
use crate::model::MilpModel;
use crate::solution::SolveOptions;

/// Anything that can solve a [`MilpModel`].
pub trait SolverBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, model: &MilpModel, opts: &SolveOptions) -> Result<MilpSolution, SolverError>;
}

/// The in-process simplex / branch-and-bound solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmbeddedBackend;

impl SolverBackend for EmbeddedBackend {
    fn name(&self) -> &str {
        "embedded"
    }

    fn solve(&self, model: &MilpModel, opts: &SolveOptions) -> Result<MilpSolution, SolverError> {
        solve_milp(model, opts)
    }
}

/// Runs an external program as `program [args..] <model.lp> <solution.txt>`.
///
/// Options go through the environment (`IES_GAP_TOL`, `IES_NODE_LIMIT`,
/// `IES_TIME_LIMIT` in seconds). The program writes `key=value` lines:
/// `status=optimal|feasible|infeasible|unbounded|limit`, `objective=`,
/// optionally `bound=` and `nodes=`, and one `var:<name>=<value>` per
/// variable, using the names from the LP file. Omitted variables are zero.
#[derive(Debug, Clone)]
pub struct ExternalBackend {
    name: String,
    program: PathBuf,
    args: Vec<String>,
}

static RUN_COUNTER: AtomicUsize = AtomicUsize::new(0);

impl ExternalBackend {
    pub fn new(name: impl Into<String>, program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        Self {
            name: name.into(),
            program: program.into(),
            args,
        }
    }

    fn work_dir(&self) -> Result<PathBuf, SolverError> {
        let stamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0);
        let dir = std::env::temp_dir().join(format!(
            "ies-external-{}-{}-{stamp}",
            std::process::id(),
            RUN_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }
}

impl SolverBackend for ExternalBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn solve(&self, model: &MilpModel, opts: &SolveOptions) -> Result<MilpSolution, SolverError> {
        let start = Instant::now();
        let dir = self.work_dir()?;
        let result = self.run_in(&dir, model, opts);
        let _ = std::fs::remove_dir_all(&dir);
        let mut sol = result?;
        sol.wall_time = start.elapsed();
        Ok(sol)
    }
}

impl ExternalBackend {
    fn run_in(
        &self,
        dir: &Path,
        model: &MilpModel,
        opts: &SolveOptions,
    ) -> Result<MilpSolution, SolverError> {
        let lp_path = dir.join("model.lp");
        let sol_path = dir.join("solution.txt");
        std::fs::write(&lp_path, write_lp(model))?;
        let mut cmd = Command::new(&self.program);
        cmd.args(&self.args)
            .arg(&lp_path)
            .arg(&sol_path)
            .env("IES_GAP_TOL", opts.gap_tol.to_string());
        if let Some(n) = opts.node_limit {
            cmd.env("IES_NODE_LIMIT", n.to_string());
        }
        if let Some(t) = opts.time_limit {
            cmd.env("IES_TIME_LIMIT", t.as_secs_f64().to_string());
        }
        let output = cmd.output().map_err(|e| SolverError::BackendUnavailable {
            name: self.name.clone(),
            reason: format!("{}: {e}", self.program.display()),
        })?;
        if !output.status.success() {
            return Err(SolverError::Backend {
                name: self.name.clone(),
                reason: format!(
                    "exited with {}: {}",
                    output.status,
                    String::from_utf8_lossy(&output.stderr).trim()
                ),
            });
        }
        let text = std::fs::read_to_string(&sol_path)?;
        parse_solution(model, &text)
    }
}

/// Parses the `key=value` solution format described on [`ExternalBackend`].
pub fn parse_solution(model: &MilpModel, text: &str) -> Result<MilpSolution, SolverError> {
    let names = lp_names(model.variables().iter().map(|v| v.name.clone()), 'x');
    let index: std::collections::HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut status = None;
    let mut objective = None;
    let mut bound = None;
    let mut nodes = 0;
    let mut values = vec![0.0; model.num_variables()];
    let number = |key: &str, v: &str| -> Result<f64, SolverError> {
        v.trim()
            .parse::<f64>()
            .map_err(|_| SolverError::SolutionFormat(format!("bad value for `{key}`: `{v}`")))
    };
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .rsplit_once('=')
            .ok_or_else(|| SolverError::SolutionFormat(format!("missing `=` in `{line}`")))?;
        let key = key.trim();
        if let Some(var) = key.strip_prefix("var:") {
            let j = *index
                .get(var)
                .ok_or_else(|| SolverError::SolutionFormat(format!("unknown variable `{var}`")))?;
            values[j] = number(key, value)?;
            continue;
        }
        match key {
            "status" => {
                status = Some(match value.trim() {
                    "optimal" => MilpStatus::Optimal,
                    "feasible" => MilpStatus::Feasible,
                    "infeasible" => MilpStatus::Infeasible,
                    "unbounded" => MilpStatus::Unbounded,
                    "limit" => MilpStatus::Limit,
                    other => {
                        return Err(SolverError::SolutionFormat(format!(
                            "unknown status `{other}`"
                        )))
                    }
                })
            }
            "objective" => objective = Some(number(key, value)?),
            "bound" => bound = Some(number(key, value)?),
            "nodes" => nodes = number(key, value)? as usize,
            _ => {}
        }
    }
    let status = status.ok_or_else(|| SolverError::SolutionFormat("missing `status`".into()))?;
    if !status.has_incumbent() {
        return Ok(MilpSolution::without_incumbent(
            status,
            bound.unwrap_or(f64::INFINITY),
            nodes,
        ));
    }
    let scale = 1.0
        + model
            .constraints()
            .iter()
            .map(|c| c.rhs.abs())
            .fold(0.0, f64::max);
    let violation = model.max_violation(&values);
    if violation > 1e-6 * scale {
        return Err(SolverError::SolutionFormat(format!(
            "reported point violates the model by {violation:e}"
        )));
    }
    let objective_eval = model.objective().eval(&values);
    if let Some(reported) = objective {
        if (reported - objective_eval).abs() > 1e-6 * (1.0 + reported.abs()) {
            return Err(SolverError::SolutionFormat(format!(
                "reported objective {reported} disagrees with the values ({objective_eval})"
            )));
        }
    }
    let bound = bound.unwrap_or(objective_eval).min(objective_eval);
    Ok(MilpSolution {
        status,
        gap: relative_gap(objective_eval, bound),
        values,
        objective: objective_eval,
        bound,
        nodes,
        lp_iterations: 0,
        wall_time: std::time::Duration::ZERO,
        trace: Vec::new(),
    })
}
