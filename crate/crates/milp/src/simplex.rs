//! Bounded revised simplex: primal (with a sum-of-infeasibilities phase one)
//! and dual, sharing one basis factorization so branch-and-bound can
//! re-solve warm after bound changes.

use crate::error::SolverError;
use crate::lp::LpData;
use crate::lu::{Factorization, LuFactors};

const FEAS_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const MAX_UPDATES: usize = 96;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_RUN: usize = 60;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    Basic,
    Lower,
    Upper,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Basis statuses sufficient to warm-start a later solve.
#[derive(Debug, Clone)]
pub struct BasisSnapshot {
    basis: Vec<usize>,
    status: Vec<Status>,
}

enum PrimalStep {
    Flip { t: f64 },
    Pivot { pos: usize, t: f64, to_upper: bool },
    Unbounded,
}

pub struct Simplex {
    lp: LpData,
    basis: Vec<usize>,
    pos: Vec<usize>,
    status: Vec<Status>,
    x: Vec<f64>,
    d: Vec<f64>,
    fact: Factorization,
    iterations: usize,
    max_iterations: usize,
    ray: Option<Vec<f64>>,
}

impl Simplex {
    pub fn new(lp: LpData) -> Result<Self, SolverError> {
        let (n, m) = (lp.n, lp.m);
        let basis: Vec<usize> = (n..n + m).collect();
        let mut pos = vec![NONE; n + m];
        for (p, &j) in basis.iter().enumerate() {
            pos[j] = p;
        }
        let mut status = vec![Status::Basic; n + m];
        for (j, s) in status.iter_mut().enumerate().take(n) {
            *s = default_status(lp.lower[j], lp.upper[j]);
        }
        let identity: Vec<Vec<(usize, f64)>> = (0..m).map(|i| vec![(i, -1.0)]).collect();
        let lu = LuFactors::factorize(m, &identity)
            .map_err(|_| SolverError::Numerical("slack basis is singular".into()))?;
        let mut s = Self {
            max_iterations: 20_000 + 40 * (n + m),
            lp,
            basis,
            pos,
            status,
            x: vec![0.0; n + m],
            d: vec![0.0; n + m],
            fact: Factorization::new(lu),
            iterations: 0,
            ray: None,
        };
        s.compute_primal();
        Ok(s)
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn data(&self) -> &LpData {
        &self.lp
    }

    pub fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot {
            basis: self.basis.clone(),
            status: self.status.clone(),
        }
    }

    pub fn restore(&mut self, snap: &BasisSnapshot) -> Result<(), SolverError> {
        self.basis.clone_from(&snap.basis);
        self.status.clone_from(&snap.status);
        self.pos.iter_mut().for_each(|p| *p = NONE);
        for (p, &j) in self.basis.iter().enumerate() {
            self.pos[j] = p;
        }
        for j in 0..self.status.len() {
            self.repair_status(j);
        }
        self.refactor()?;
        self.compute_primal();
        Ok(())
    }

    /// Changes the bounds of structural column `j` (model units).
    pub fn set_col_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lp.set_col_bounds(j, lower, upper);
        self.repair_status(j);
    }

    fn repair_status(&mut self, j: usize) {
        let (l, u) = (self.lp.lower[j], self.lp.upper[j]);
        let s = self.status[j];
        let fixed = match s {
            Status::Basic => s,
            Status::Lower if l.is_finite() => s,
            Status::Upper if u.is_finite() => s,
            Status::Free if !l.is_finite() && !u.is_finite() => s,
            _ => default_status(l, u),
        };
        self.status[j] = fixed;
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            Status::Lower => self.lp.lower[j],
            Status::Upper => self.lp.upper[j],
            Status::Free => 0.0,
            Status::Basic => self.x[j],
        }
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.lp.n {
            self.lp.cost[j]
        } else {
            0.0
        }
    }

    fn refactor(&mut self) -> Result<(), SolverError> {
        for _ in 0..4 {
            let cols: Vec<Vec<(usize, f64)>> =
                self.basis.iter().map(|&j| self.lp.column(j)).collect();
            match LuFactors::factorize(self.lp.m, &cols) {
                Ok(lu) => {
                    self.fact = Factorization::new(lu);
                    return Ok(());
                }
                Err(singular) => {
                    for (p, row) in singular.replacements {
                        let out = self.basis[p];
                        let incoming = self.lp.n + row;
                        self.pos[out] = NONE;
                        self.status[out] = default_status(self.lp.lower[out], self.lp.upper[out]);
                        self.basis[p] = incoming;
                        self.pos[incoming] = p;
                        self.status[incoming] = Status::Basic;
                    }
                }
            }
        }
        Err(SolverError::Numerical(
            "basis stayed singular after repair".into(),
        ))
    }

    fn compute_primal(&mut self) {
        let (n, m) = (self.lp.n, self.lp.m);
        let mut rhs = vec![0.0; m];
        for j in 0..n + m {
            if self.status[j] == Status::Basic {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v == 0.0 {
                continue;
            }
            if j < n {
                for k in self.lp.col_start[j]..self.lp.col_start[j + 1] {
                    rhs[self.lp.col_idx[k]] -= self.lp.col_val[k] * v;
                }
            } else {
                rhs[j - n] += v;
            }
        }
        let mut xb = vec![0.0; m];
        self.fact.ftran_dense(&mut rhs, &mut xb);
        for (p, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[p];
        }
    }

    fn btran_costs(&self, phase_one: bool) -> (Vec<f64>, bool) {
        let m = self.lp.m;
        let mut cb = vec![0.0; m];
        let mut infeasible = false;
        if phase_one {
            for (p, &j) in self.basis.iter().enumerate() {
                let v = self.x[j];
                if v < self.lp.lower[j] - FEAS_TOL {
                    cb[p] = -1.0;
                    infeasible = true;
                } else if v > self.lp.upper[j] + FEAS_TOL {
                    cb[p] = 1.0;
                    infeasible = true;
                }
            }
        }
        if !infeasible {
            for (p, &j) in self.basis.iter().enumerate() {
                cb[p] = self.cost(j);
            }
        }
        let mut y = vec![0.0; m];
        self.fact.btran(&mut cb, &mut y);
        (y, infeasible)
    }

    fn compute_reduced_costs(&mut self) {
        let (y, _) = self.btran_costs(false);
        for j in 0..self.lp.n + self.lp.m {
            self.d[j] = if self.status[j] == Status::Basic {
                0.0
            } else {
                self.cost(j) - self.lp.dot_column(&y, j)
            };
        }
    }

    fn max_primal_infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .map(|&j| {
                let v = self.x[j];
                (self.lp.lower[j] - v).max(v - self.lp.upper[j]).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    fn dual_feasible(&self, tol: f64) -> bool {
        (0..self.lp.n + self.lp.m).all(|j| self.dual_infeasibility(j) <= tol)
    }

    fn dual_infeasibility(&self, j: usize) -> f64 {
        if self.lp.lower[j] == self.lp.upper[j] {
            return 0.0;
        }
        let d = self.d[j];
        match self.status[j] {
            Status::Basic => 0.0,
            Status::Lower => (-d).max(0.0),
            Status::Upper => d.max(0.0),
            Status::Free => d.abs(),
        }
    }

    fn bump_iteration(&mut self) -> Result<(), SolverError> {
        self.iterations += 1;
        if self.iterations > self.max_iterations {
            return Err(SolverError::Numerical(format!(
                "simplex iteration limit ({}) reached",
                self.max_iterations
            )));
        }
        Ok(())
    }

    /// Primal simplex from the current basis.
    pub fn solve_primal(&mut self) -> Result<LpStatus, SolverError> {
        self.ray = None;
        self.compute_primal();
        let (n, m) = (self.lp.n, self.lp.m);
        let mut alpha = vec![0.0; m];
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut recheck = 0usize;
        loop {
            if self.fact.wants_refactor(MAX_UPDATES) {
                self.refactor()?;
                self.compute_primal();
            }
            let (y, phase_one) = self.btran_costs(true);

            // Pricing.
            let mut entering = NONE;
            let mut dir = 0.0;
            let mut best = 0.0;
            for j in 0..n + m {
                let st = self.status[j];
                if st == Status::Basic || self.lp.lower[j] == self.lp.upper[j] {
                    continue;
                }
                let c = if phase_one { 0.0 } else { self.cost(j) };
                let d = c - self.lp.dot_column(&y, j);
                let (score, sdir) = match st {
                    Status::Lower if d < -DUAL_TOL => (-d, 1.0),
                    Status::Upper if d > DUAL_TOL => (d, -1.0),
                    Status::Free if d.abs() > DUAL_TOL => (d.abs(), -d.signum()),
                    _ => continue,
                };
                if bland {
                    entering = j;
                    dir = sdir;
                    break;
                }
                if score > best {
                    best = score;
                    entering = j;
                    dir = sdir;
                }
            }

            if entering == NONE {
                if phase_one {
                    self.ray = Some(self.unscale_row_vector(&y));
                    return Ok(LpStatus::Infeasible);
                }
                // Confirm with fresh values before declaring optimality.
                self.refactor()?;
                self.compute_primal();
                if self.max_primal_infeasibility() <= FEAS_TOL {
                    return Ok(LpStatus::Optimal);
                }
                recheck += 1;
                if recheck > 5 {
                    return Err(SolverError::Numerical(
                        "primal feasibility lost repeatedly at optimality check".into(),
                    ));
                }
                continue;
            }

            self.bump_iteration()?;
            let column = self.lp.column(entering);
            self.fact.ftran_sparse(&column, &mut alpha);
            let step = self.primal_ratio_test(entering, dir, &alpha, bland);
            match step {
                PrimalStep::Unbounded => {
                    if phase_one {
                        // Cannot happen in exact arithmetic; refresh and retry.
                        self.refactor()?;
                        self.compute_primal();
                        recheck += 1;
                        if recheck > 5 {
                            return Err(SolverError::Numerical(
                                "unbounded direction during phase one".into(),
                            ));
                        }
                        continue;
                    }
                    return Ok(LpStatus::Unbounded);
                }
                PrimalStep::Flip { t } => {
                    self.x[entering] += dir * t;
                    for (p, &j) in self.basis.iter().enumerate() {
                        self.x[j] -= dir * t * alpha[p];
                    }
                    self.status[entering] = if dir > 0.0 {
                        Status::Upper
                    } else {
                        Status::Lower
                    };
                    self.x[entering] = self.nonbasic_value(entering);
                    degenerate_run = 0;
                    bland = false;
                }
                PrimalStep::Pivot { pos, t, to_upper } => {
                    self.x[entering] += dir * t;
                    for (p, &j) in self.basis.iter().enumerate() {
                        self.x[j] -= dir * t * alpha[p];
                    }
                    let leaving = self.basis[pos];
                    self.status[leaving] = if to_upper {
                        Status::Upper
                    } else {
                        Status::Lower
                    };
                    self.x[leaving] = self.nonbasic_value(leaving);
                    self.pos[leaving] = NONE;
                    self.basis[pos] = entering;
                    self.pos[entering] = pos;
                    self.status[entering] = Status::Basic;
                    self.fact.update(pos, &alpha);
                    if t <= 1e-12 {
                        degenerate_run += 1;
                        if degenerate_run > DEGENERATE_RUN {
                            bland = true;
                        }
                    } else {
                        degenerate_run = 0;
                        bland = false;
                    }
                }
            }
        }
    }

    fn primal_ratio_test(&self, q: usize, dir: f64, alpha: &[f64], bland: bool) -> PrimalStep {
        let amax = alpha.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let ptol = PIVOT_TOL * amax.max(1.0);
        let flip = self.lp.upper[q] - self.lp.lower[q];
        let flip = if flip.is_finite() { flip } else { f64::INFINITY };

        // (exact ratio, ratio with tolerance, target is upper)
        let limit = |p: usize| -> Option<(f64, f64, bool)> {
            let a = alpha[p];
            if a.abs() <= ptol {
                return None;
            }
            let rate = -dir * a;
            let j = self.basis[p];
            let (v, l, u) = (self.x[j], self.lp.lower[j], self.lp.upper[j]);
            if rate < 0.0 {
                if v > u + FEAS_TOL {
                    let r = (v - u) / -rate;
                    Some((r, r, true))
                } else if l.is_finite() && v >= l - FEAS_TOL {
                    Some(((v - l) / -rate, (v - l + FEAS_TOL) / -rate, false))
                } else {
                    None
                }
            } else if v < l - FEAS_TOL {
                let r = (l - v) / rate;
                Some((r, r, false))
            } else if u.is_finite() && v <= u + FEAS_TOL {
                Some(((u - v) / rate, (u - v + FEAS_TOL) / rate, true))
            } else {
                None
            }
        };

        if bland {
            let mut best: Option<(f64, usize, usize, bool)> = None;
            for p in 0..alpha.len() {
                if let Some((r, _, up)) = limit(p) {
                    let r = r.max(0.0);
                    let j = self.basis[p];
                    let better = match best {
                        None => true,
                        Some((br, _, bj, _)) => r < br || (r == br && j < bj),
                    };
                    if better {
                        best = Some((r, p, j, up));
                    }
                }
            }
            return match best {
                Some((r, _, _, _)) if flip <= r => PrimalStep::Flip { t: flip },
                Some((r, p, _, up)) => PrimalStep::Pivot {
                    pos: p,
                    t: r,
                    to_upper: up,
                },
                None if flip.is_finite() => PrimalStep::Flip { t: flip },
                None => PrimalStep::Unbounded,
            };
        }

        let mut t_max = f64::INFINITY;
        for p in 0..alpha.len() {
            if let Some((_, rt, _)) = limit(p) {
                t_max = t_max.min(rt);
            }
        }
        if t_max == f64::INFINITY && flip == f64::INFINITY {
            return PrimalStep::Unbounded;
        }
        if flip <= t_max {
            return PrimalStep::Flip { t: flip };
        }
        let mut chosen: Option<(usize, f64, bool)> = None;
        let mut best_pivot = 0.0;
        for p in 0..alpha.len() {
            if let Some((r, _, up)) = limit(p) {
                if r <= t_max && alpha[p].abs() > best_pivot {
                    best_pivot = alpha[p].abs();
                    chosen = Some((p, r.max(0.0), up));
                }
            }
        }
        match chosen {
            Some((pos, t, to_upper)) => PrimalStep::Pivot { pos, t, to_upper },
            None => PrimalStep::Unbounded,
        }
    }

    /// Dual simplex from the current basis. Falls back to the primal method
    /// if the basis is not dual feasible.
    pub fn solve_dual(&mut self) -> Result<LpStatus, SolverError> {
        self.ray = None;
        self.compute_primal();
        self.compute_reduced_costs();
        if !self.dual_feasible(1e-7) {
            return self.solve_primal();
        }
        let (n, m) = (self.lp.n, self.lp.m);
        let mut alpha_col = vec![0.0; m];
        let mut alpha_row = vec![0.0; n + m];
        let mut unit = vec![0.0; m];
        let mut rho = vec![0.0; m];
        let mut touched: Vec<usize> = Vec::new();
        let mut refreshes = 0usize;
        loop {
            if self.fact.wants_refactor(MAX_UPDATES) {
                self.refactor()?;
                self.compute_primal();
                self.compute_reduced_costs();
            }

            // Leaving row: largest bound violation.
            let mut r = NONE;
            let mut worst = FEAS_TOL;
            for (p, &j) in self.basis.iter().enumerate() {
                let v = self.x[j];
                let viol = (self.lp.lower[j] - v).max(v - self.lp.upper[j]);
                if viol > worst {
                    worst = viol;
                    r = p;
                }
            }
            if r == NONE {
                self.refactor()?;
                self.compute_primal();
                self.compute_reduced_costs();
                if self.max_primal_infeasibility() > FEAS_TOL {
                    refreshes += 1;
                    if refreshes > 5 {
                        return self.solve_primal();
                    }
                    continue;
                }
                if !self.dual_feasible(DUAL_TOL * 10.0) {
                    return self.solve_primal();
                }
                return Ok(LpStatus::Optimal);
            }
            if self.iterations + 1 > self.max_iterations {
                return self.solve_primal();
            }
            self.bump_iteration()?;

            let jr = self.basis[r];
            let below = self.x[jr] < self.lp.lower[jr];
            let target = if below {
                self.lp.lower[jr]
            } else {
                self.lp.upper[jr]
            };
            let delta = self.x[jr] - target;

            unit.iter_mut().for_each(|v| *v = 0.0);
            unit[r] = 1.0;
            self.fact.btran(&mut unit, &mut rho);

            for &j in &touched {
                alpha_row[j] = 0.0;
            }
            touched.clear();
            for (i, &ri) in rho.iter().enumerate() {
                if ri == 0.0 {
                    continue;
                }
                for k in self.lp.row_start[i]..self.lp.row_start[i + 1] {
                    let j = self.lp.row_idx[k];
                    if alpha_row[j] == 0.0 {
                        touched.push(j);
                    }
                    alpha_row[j] += ri * self.lp.row_val[k];
                }
                let logical = n + i;
                alpha_row[logical] = -ri;
                touched.push(logical);
            }

            // Ratio test (Harris two-pass).
            let amax = touched
                .iter()
                .filter(|&&j| self.status[j] != Status::Basic)
                .fold(0.0f64, |a, &j| a.max(alpha_row[j].abs()));
            let ptol = PIVOT_TOL * amax.max(1.0);
            let candidate = |j: usize| -> Option<(f64, f64)> {
                let st = self.status[j];
                if st == Status::Basic || self.lp.lower[j] == self.lp.upper[j] {
                    return None;
                }
                let a = alpha_row[j];
                if a.abs() <= ptol {
                    return None;
                }
                let dj = self.d[j];
                // Moves that push x_r towards its violated bound.
                let increase_ok = matches!(st, Status::Lower | Status::Free);
                let decrease_ok = matches!(st, Status::Upper | Status::Free);
                let usable = if below {
                    (increase_ok && a < 0.0) || (decrease_ok && a > 0.0)
                } else {
                    (increase_ok && a > 0.0) || (decrease_ok && a < 0.0)
                };
                if !usable {
                    return None;
                }
                let slack = match st {
                    Status::Lower => dj.max(0.0),
                    Status::Upper => (-dj).max(0.0),
                    _ => dj.abs(),
                };
                Some((slack / a.abs(), (slack + DUAL_TOL) / a.abs()))
            };
            let mut t_max = f64::INFINITY;
            for &j in &touched {
                if let Some((_, rt)) = candidate(j) {
                    t_max = t_max.min(rt);
                }
            }
            if t_max == f64::INFINITY {
                self.ray = Some(self.unscale_row_vector(&rho));
                return Ok(LpStatus::Infeasible);
            }
            let mut q = NONE;
            let mut best = 0.0;
            for &j in &touched {
                if let Some((rt, _)) = candidate(j) {
                    let a = alpha_row[j].abs();
                    if rt <= t_max && (a > best || (a == best && j < q)) {
                        best = a;
                        q = j;
                    }
                }
            }

            let column = self.lp.column(q);
            self.fact.ftran_sparse(&column, &mut alpha_col);
            let arq = alpha_col[r];
            if (arq - alpha_row[q]).abs() > 1e-7 * (1.0 + arq.abs()) || arq.abs() <= ptol {
                refreshes += 1;
                if refreshes > 20 {
                    return self.solve_primal();
                }
                self.refactor()?;
                self.compute_primal();
                self.compute_reduced_costs();
                continue;
            }

            let theta = self.d[q] / alpha_row[q];
            let step = delta / arq;
            self.x[q] += step;
            for (p, &j) in self.basis.iter().enumerate() {
                self.x[j] -= step * alpha_col[p];
            }
            self.x[jr] = target;
            for &j in &touched {
                if self.status[j] != Status::Basic {
                    self.d[j] -= theta * alpha_row[j];
                }
            }
            self.d[q] = 0.0;
            self.d[jr] = -theta;
            self.status[jr] = if below { Status::Lower } else { Status::Upper };
            self.pos[jr] = NONE;
            self.basis[r] = q;
            self.pos[q] = r;
            self.status[q] = Status::Basic;
            self.fact.update(r, &alpha_col);
        }
    }

    fn unscale_row_vector(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(&self.lp.row_scale)
            .map(|(v, r)| v * r)
            .collect()
    }

    /// Objective value (model units, including the constant offset).
    pub fn objective(&self) -> f64 {
        self.lp.offset
            + (0..self.lp.n)
                .map(|j| self.lp.cost[j] * self.x[j])
                .sum::<f64>()
    }

    /// Structural values in model units.
    pub fn primal(&self) -> Vec<f64> {
        (0..self.lp.n)
            .map(|j| self.x[j] * self.lp.col_scale[j])
            .collect()
    }

    pub fn primal_value(&self, j: usize) -> f64 {
        self.x[j] * self.lp.col_scale[j]
    }

    /// Row duals in model units (sensitivity of the objective to each rhs).
    pub fn duals(&self) -> Vec<f64> {
        let (y, _) = self.btran_costs(false);
        self.unscale_row_vector(&y)
    }

    /// Structural reduced costs in model units.
    pub fn reduced_costs(&self) -> Vec<f64> {
        let (y, _) = self.btran_costs(false);
        (0..self.lp.n)
            .map(|j| {
                let d = if self.status[j] == Status::Basic {
                    0.0
                } else {
                    self.cost(j) - self.lp.dot_column(&y, j)
                };
                d / self.lp.col_scale[j]
            })
            .collect()
    }

    /// Infeasibility certificate of the last infeasible solve, in row space.
    pub fn ray(&self) -> Option<&[f64]> {
        self.ray.as_deref()
    }
}

fn default_status(lower: f64, upper: f64) -> Status {
    if lower.is_finite() {
        Status::Lower
    } else if upper.is_finite() {
        Status::Upper
    } else {
        Status::Free
    }
}
