//! Best-first branch-and-bound over binary variables with plunging.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use crate::error::SolverError;
use crate::lp::LpData;
use crate::model::{MilpModel, VarId, VarKind};
use crate::simplex::{BasisSnapshot, LpStatus, Simplex};
use crate::solution::SolveOptions;

/// Distance from {0, 1} below which a binary counts as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;
const TRACE_EVERY: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    /// Incumbent proven within `gap_tol` of the bound.
    Optimal,
    /// A limit stopped the search with an incumbent in hand.
    Feasible,
    Infeasible,
    Unbounded,
    /// A limit stopped the search before any incumbent was found.
    Limit,
}

impl MilpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            MilpStatus::Optimal => "optimal",
            MilpStatus::Feasible => "feasible",
            MilpStatus::Infeasible => "infeasible",
            MilpStatus::Unbounded => "unbounded",
            MilpStatus::Limit => "limit",
        }
    }

    pub fn has_incumbent(self) -> bool {
        matches!(self, MilpStatus::Optimal | MilpStatus::Feasible)
    }
}

impl std::fmt::Display for MilpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Incumbent and bound as seen after `nodes` node solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub nodes: usize,
    pub objective: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Incumbent values, empty without an incumbent.
    pub values: Vec<f64>,
    /// Incumbent objective (`+inf` without an incumbent).
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub wall_time: Duration,
    pub trace: Vec<TracePoint>,
}

impl MilpSolution {
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.index()]
    }

    pub(crate) fn without_incumbent(status: MilpStatus, bound: f64, nodes: usize) -> Self {
        Self {
            status,
            values: Vec::new(),
            objective: f64::INFINITY,
            bound,
            gap: f64::INFINITY,
            nodes,
            lp_iterations: 0,
            wall_time: Duration::ZERO,
            trace: Vec::new(),
        }
    }
}

/// `(objective - bound) / max(1, |objective|)`
pub fn relative_gap(objective: f64, bound: f64) -> f64 {
    if !objective.is_finite() {
        return f64::INFINITY;
    }
    if bound == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    ((objective - bound) / objective.abs().max(1.0)).max(0.0)
}

struct Node {
    id: usize,
    bound: f64,
    fixes: Vec<(usize, f64)>,
    basis: Option<Rc<BasisSnapshot>>,
}

struct Queued(Node);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // BinaryHeap is a max-heap: the smallest bound (then smallest id) wins.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    opts: &'a SolveOptions,
    start: Instant,
    simplex: Simplex,
    binaries: Vec<usize>,
    root_bounds: Vec<(f64, f64)>,
    incumbent: Option<(f64, Vec<f64>)>,
    pruned_bound: f64,
    nodes: usize,
    next_id: usize,
    trace: Vec<TracePoint>,
}

/// Solves `model` by LP-based branch-and-bound on its binary variables.
pub fn solve_milp(model: &MilpModel, opts: &SolveOptions) -> Result<MilpSolution, SolverError> {
    let start = Instant::now();
    let lp = LpData::from_model(model);
    let binaries: Vec<usize> = model
        .variables()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| j)
        .collect();
    let root_bounds = binaries
        .iter()
        .map(|&j| {
            let v = &model.variables()[j];
            (v.lower, v.upper)
        })
        .collect();
    let simplex = Simplex::new(lp)?;
    let mut search = Search {
        model,
        opts,
        start,
        simplex,
        binaries,
        root_bounds,
        incumbent: None,
        pruned_bound: f64::INFINITY,
        nodes: 0,
        next_id: 1,
        trace: Vec::new(),
    };
    let mut sol = search.run()?;
    sol.lp_iterations = search.simplex.iterations();
    sol.wall_time = start.elapsed();
    Ok(sol)
}

enum NodeOutcome {
    Pruned,
    Integral,
    Branch { var: usize, value: f64, bound: f64 },
}

impl Search<'_> {
    fn limit_reached(&self) -> bool {
        if let Some(limit) = self.opts.node_limit {
            if self.nodes >= limit {
                return true;
            }
        }
        if let Some(limit) = self.opts.time_limit {
            if self.start.elapsed() >= limit {
                return true;
            }
        }
        false
    }

    fn incumbent_value(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |(o, _)| *o)
    }

    /// Nodes whose bound is at or above this value cannot improve the
    /// incumbent by more than the gap tolerance.
    fn cutoff(&self) -> f64 {
        let inc = self.incumbent_value();
        if inc.is_finite() {
            inc - self.opts.gap_tol * inc.abs().max(1.0)
        } else {
            f64::INFINITY
        }
    }

    fn note_pruned(&mut self, bound: f64) {
        if bound < self.incumbent_value() {
            self.pruned_bound = self.pruned_bound.min(bound);
        }
    }

    fn apply_fixes(&mut self, fixes: &[(usize, f64)]) {
        for (k, &j) in self.binaries.iter().enumerate() {
            let (lo, hi) = self.root_bounds[k];
            self.simplex.set_col_bounds(j, lo, hi);
        }
        for &(j, v) in fixes {
            self.simplex.set_col_bounds(j, v, v);
        }
    }

    fn solve_node_lp(&mut self, warm: bool) -> Result<LpStatus, SolverError> {
        let result = if warm {
            self.simplex.solve_dual()
        } else {
            self.simplex.solve_primal()
        };
        match result {
            Ok(s) => Ok(s),
            Err(_) => {
                // Retry once from a fresh slack basis with the same bounds.
                let lp = self.simplex.data().clone();
                let mut fresh = Simplex::new(lp)?;
                let status = fresh.solve_primal()?;
                self.simplex = fresh;
                Ok(status)
            }
        }
    }

    fn record_trace(&mut self, open_bound: f64) {
        let inc = self.incumbent_value();
        let bound = open_bound.min(self.pruned_bound).min(inc);
        self.trace.push(TracePoint {
            nodes: self.nodes,
            objective: inc,
            bound,
        });
    }

    /// Evaluates one node whose bounds are already applied.
    fn evaluate(&mut self, warm: bool) -> Result<Option<NodeOutcome>, SolverError> {
        self.nodes += 1;
        let status = self.solve_node_lp(warm)?;
        match status {
            LpStatus::Infeasible => return Ok(Some(NodeOutcome::Pruned)),
            LpStatus::Unbounded => return Ok(None),
            LpStatus::Optimal => {}
        }
        let obj = self.simplex.objective();
        if obj >= self.cutoff() {
            self.note_pruned(obj);
            return Ok(Some(NodeOutcome::Pruned));
        }
        let mut branch: Option<(usize, f64, f64)> = None;
        for &j in &self.binaries {
            let x = self.simplex.primal_value(j);
            let frac = (x - x.floor()).min(x.ceil() - x);
            if frac > INTEGRALITY_TOL && branch.is_none_or(|(_, _, f)| frac > f) {
                branch = Some((j, x, frac));
            }
        }
        match branch {
            Some((var, value, _)) => Ok(Some(NodeOutcome::Branch {
                var,
                value,
                bound: obj,
            })),
            None => {
                self.accept_integral(obj)?;
                Ok(Some(NodeOutcome::Integral))
            }
        }
    }

    /// Re-solves with every binary pinned to its rounded value, so reported
    /// incumbents satisfy the model with exact 0/1 binaries.
    fn accept_integral(&mut self, relaxed_obj: f64) -> Result<(), SolverError> {
        let snapshot = self.simplex.snapshot();
        let relaxed = self.simplex.primal();
        for &j in &self.binaries {
            let v = relaxed[j].round();
            self.simplex.set_col_bounds(j, v, v);
        }
        let (obj, mut values) = match self.simplex.solve_dual() {
            Ok(LpStatus::Optimal) => (self.simplex.objective(), self.simplex.primal()),
            _ => {
                self.simplex.restore(&snapshot)?;
                (relaxed_obj, relaxed)
            }
        };
        for &j in &self.binaries {
            values[j] = values[j].round();
        }
        if obj < self.incumbent_value() {
            self.incumbent = Some((obj, values));
        }
        Ok(())
    }

    fn run(&mut self) -> Result<MilpSolution, SolverError> {
        let mut heap: BinaryHeap<Queued> = BinaryHeap::new();
        let mut next: Option<Node> = Some(Node {
            id: 0,
            bound: f64::NEG_INFINITY,
            fixes: Vec::new(),
            basis: None,
        });
        // Id of the node whose optimal basis is currently loaded.
        let mut loaded: Option<usize> = None;
        let mut parent_of_next: Option<usize> = None;
        let mut stopped_by_limit = false;

        loop {
            let node = match next.take() {
                Some(n) => n,
                None => match heap.pop() {
                    Some(Queued(n)) => {
                        parent_of_next = None;
                        n
                    }
                    None => break,
                },
            };
            if node.bound >= self.cutoff() {
                self.note_pruned(node.bound);
                continue;
            }
            if self.limit_reached() {
                heap.push(Queued(node));
                stopped_by_limit = true;
                break;
            }

            self.apply_fixes(&node.fixes);
            let warm = match (&node.basis, parent_of_next) {
                (_, Some(p)) if loaded == Some(p) => true,
                (Some(b), _) => {
                    self.simplex.restore(b)?;
                    true
                }
                (None, _) => false,
            };
            let outcome = self.evaluate(warm)?;
            loaded = Some(node.id);
            parent_of_next = None;

            match outcome {
                None => {
                    if self.incumbent.is_none() && node.id == 0 {
                        let mut s = MilpSolution::without_incumbent(
                            MilpStatus::Unbounded,
                            f64::NEG_INFINITY,
                            self.nodes,
                        );
                        s.trace = std::mem::take(&mut self.trace);
                        return Ok(s);
                    }
                    return Err(SolverError::Numerical(
                        "unbounded relaxation below the root".into(),
                    ));
                }
                Some(NodeOutcome::Pruned) | Some(NodeOutcome::Integral) => {}
                Some(NodeOutcome::Branch { var, value, bound }) => {
                    let basis = Rc::new(self.simplex.snapshot());
                    let preferred = if value >= 0.5 { 1.0 } else { 0.0 };
                    let mut make = |v: f64| {
                        let mut fixes = node.fixes.clone();
                        fixes.push((var, v));
                        let id = self.next_id;
                        self.next_id += 1;
                        Node {
                            id,
                            bound,
                            fixes,
                            basis: Some(basis.clone()),
                        }
                    };
                    let dive = make(preferred);
                    let other = make(1.0 - preferred);
                    heap.push(Queued(other));
                    next = Some(dive);
                    parent_of_next = Some(node.id);
                }
            }
            if self.nodes % TRACE_EVERY == 0 {
                let open = open_bound(&heap, next.as_ref());
                self.record_trace(open);
            }
        }

        let open = open_bound(&heap, next.as_ref());
        self.record_trace(open);
        let inc = self.incumbent_value();
        let bound = open.min(self.pruned_bound).min(inc);
        let trace = std::mem::take(&mut self.trace);
        match self.incumbent.take() {
            Some((objective, values)) => {
                let gap = relative_gap(objective, bound);
                let status = if !stopped_by_limit || gap <= self.opts.gap_tol {
                    MilpStatus::Optimal
                } else {
                    MilpStatus::Feasible
                };
                debug_assert!(self.model.num_variables() == values.len());
                Ok(MilpSolution {
                    status,
                    values,
                    objective,
                    bound,
                    gap,
                    nodes: self.nodes,
                    lp_iterations: 0,
                    wall_time: Duration::ZERO,
                    trace,
                })
            }
            None => {
                let status = if stopped_by_limit {
                    MilpStatus::Limit
                } else {
                    MilpStatus::Infeasible
                };
                let mut s = MilpSolution::without_incumbent(status, bound, self.nodes);
                s.trace = trace;
                Ok(s)
            }
        }
    }
}

fn open_bound(heap: &BinaryHeap<Queued>, next: Option<&Node>) -> f64 {
    let h = heap.peek().map_or(f64::INFINITY, |q| q.0.bound);
    let n = next.map_or(f64::INFINITY, |n| n.bound);
    h.min(n)
}
