//! Slow, independent reference solvers used only by tests.
//!
//! A dense two-phase tableau simplex with Bland's rule, plus exhaustive
//! enumeration of binary assignments on top of it. Plain data in, plain data
//! out, so it shares no code with the production solver.

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

/// `min cost.x + offset` subject to dense rows and bounds.
#[derive(Debug, Clone, Default)]
pub struct DenseLp {
    pub cost: Vec<f64>,
    pub offset: f64,
    pub rows: Vec<(Vec<f64>, Rel, f64)>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub binary: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl Outcome {
    pub fn objective(&self) -> Option<f64> {
        match self {
            Outcome::Optimal { objective, .. } => Some(*objective),
            _ => None,
        }
    }
}

enum Map {
    Shift(usize, f64),
    Mirror(usize, f64),
    Split(usize, usize),
}

/// Solves the continuous relaxation (binary flags ignored).
pub fn solve_dense_lp(lp: &DenseLp) -> Outcome {
    let n = lp.cost.len();
    for j in 0..n {
        if lp.lower[j] > lp.upper[j] {
            return Outcome::Infeasible;
        }
    }
    // Standard-form columns p >= 0.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut extra_rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l.is_finite() {
            maps.push(Map::Shift(ncols, l));
            if u.is_finite() {
                extra_rows.push((vec![(ncols, 1.0)], u - l));
            }
            ncols += 1;
        } else if u.is_finite() {
            maps.push(Map::Mirror(ncols, u));
            ncols += 1;
        } else {
            maps.push(Map::Split(ncols, ncols + 1));
            ncols += 2;
        }
    }
    let mut cost = vec![0.0; ncols];
    let mut offset = lp.offset;
    for (j, map) in maps.iter().enumerate() {
        let c = lp.cost[j];
        match *map {
            Map::Shift(p, l) => {
                cost[p] += c;
                offset += c * l;
            }
            Map::Mirror(p, u) => {
                cost[p] -= c;
                offset += c * u;
            }
            Map::Split(p, q) => {
                cost[p] += c;
                cost[q] -= c;
            }
        }
    }
    let mut rows: Vec<(Vec<f64>, Rel, f64)> = Vec::new();
    for (a, rel, b) in &lp.rows {
        let mut row = vec![0.0; ncols];
        let mut rhs = *b;
        for (j, map) in maps.iter().enumerate() {
            let aj = a[j];
            if aj == 0.0 {
                continue;
            }
            match *map {
                Map::Shift(p, l) => {
                    row[p] += aj;
                    rhs -= aj * l;
                }
                Map::Mirror(p, u) => {
                    row[p] -= aj;
                    rhs -= aj * u;
                }
                Map::Split(p, q) => {
                    row[p] += aj;
                    row[q] -= aj;
                }
            }
        }
        rows.push((row, *rel, rhs));
    }
    for (entries, rhs) in extra_rows {
        let mut row = vec![0.0; ncols];
        for (p, v) in entries {
            row[p] = v;
        }
        rows.push((row, Rel::Le, rhs));
    }

    // Normalize rows and costs so the fixed tolerances are meaningful.
    for (a, _, b) in rows.iter_mut() {
        let big = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if big > 0.0 {
            a.iter_mut().for_each(|v| *v /= big);
            *b /= big;
        }
    }
    let cost_scale = cost.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cost_scale = if cost_scale > 0.0 { cost_scale } else { 1.0 };
    let unit_cost: Vec<f64> = cost.iter().map(|c| c / cost_scale).collect();

    match tableau_simplex(&unit_cost, &rows) {
        Outcome::Optimal { x: p, .. } => {
            let objective: f64 = cost.iter().zip(&p).map(|(c, v)| c * v).sum();
            let x = maps
                .iter()
                .map(|map| match *map {
                    Map::Shift(i, l) => l + p[i],
                    Map::Mirror(i, u) => u - p[i],
                    Map::Split(i, k) => p[i] - p[k],
                })
                .collect();
            Outcome::Optimal {
                objective: objective + offset,
                x,
            }
        }
        other => other,
    }
}

/// `min cost.p` over `rows`, `p >= 0`, by two-phase tableau simplex.
fn tableau_simplex(cost: &[f64], rows: &[(Vec<f64>, Rel, f64)]) -> Outcome {
    let n = cost.len();
    let m = rows.len();
    let slack_count = rows.iter().filter(|r| r.1 != Rel::Eq).count();
    // Columns: structurals, slacks, artificials, then rhs.
    let width = n + slack_count + m + 1;
    let rhs_col = width - 1;
    let art0 = n + slack_count;
    let mut t = vec![vec![0.0; width]; m];
    let mut basis = vec![0usize; m];
    let mut s = n;
    for (i, (a, rel, b)) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(a);
        match rel {
            Rel::Le => {
                t[i][s] = 1.0;
                s += 1;
            }
            Rel::Ge => {
                t[i][s] = -1.0;
                s += 1;
            }
            Rel::Eq => {}
        }
        t[i][rhs_col] = *b;
        if *b < 0.0 {
            for v in t[i].iter_mut() {
                *v = -*v;
            }
        }
        t[i][art0 + i] = 1.0;
        basis[i] = art0 + i;
    }

    // Phase one.
    let mut obj1 = vec![0.0; width];
    for j in art0..art0 + m {
        obj1[j] = 1.0;
    }
    if !run_phase(&mut t, &mut basis, &obj1, rhs_col, width - 1) {
        return Outcome::Unbounded;
    }
    let infeas: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= art0)
        .map(|(i, _)| t[i][rhs_col])
        .sum();
    let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
    if infeas > 1e-7 * scale {
        return Outcome::Infeasible;
    }
    // Drive artificials out of the basis where possible.
    for i in 0..m {
        if basis[i] >= art0 {
            if let Some(j) = (0..art0).find(|&j| t[i][j].abs() > EPS) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }

    // Phase two; artificial columns may not enter.
    let mut obj2 = vec![0.0; width];
    obj2[..n].copy_from_slice(cost);
    if !run_phase(&mut t, &mut basis, &obj2, rhs_col, art0) {
        return Outcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = t[i][rhs_col];
        }
    }
    let objective = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    Outcome::Optimal { objective, x }
}

/// Bland's rule on the tableau; columns `>= enter_limit` never enter.
/// Returns false if the phase objective is unbounded.
fn run_phase(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    obj: &[f64],
    rhs_col: usize,
    enter_limit: usize,
) -> bool {
    let m = t.len();
    loop {
        let mut entering = None;
        for j in 0..enter_limit {
            if basis.contains(&j) {
                continue;
            }
            let mut d = obj[j];
            for i in 0..m {
                d -= obj[basis[i]] * t[i][j];
            }
            if d < -EPS {
                entering = Some(j);
                break;
            }
        }
        let Some(q) = entering else {
            return true;
        };
        let mut leave: Option<(f64, usize, usize)> = None;
        for i in 0..m {
            let a = t[i][q];
            if a > EPS {
                let r = t[i][rhs_col] / a;
                let better = match leave {
                    None => true,
                    Some((br, _, bb)) => r < br - EPS || ((r - br).abs() <= EPS && basis[i] < bb),
                };
                if better {
                    leave = Some((r, i, basis[i]));
                }
            }
        }
        let Some((_, r, _)) = leave else {
            return false;
        };
        pivot(t, basis, r, q);
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, q: usize) {
    let p = t[r][q];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let f = row[q];
        if f != 0.0 {
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
    }
    basis[r] = q;
}

/// Best objective over every 0/1 assignment of the binary variables, each
/// leaf solved as an LP with those binaries fixed.
pub fn enumerate_binaries(lp: &DenseLp) -> Outcome {
    let bins: Vec<usize> = (0..lp.cost.len()).filter(|&j| lp.binary[j]).collect();
    assert!(bins.len() <= 20, "enumeration oracle limited to 20 binaries");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1u32 << bins.len()) {
        let mut leaf = lp.clone();
        let mut skip = false;
        for (k, &j) in bins.iter().enumerate() {
            let v = f64::from((mask >> k) & 1);
            if v < lp.lower[j] || v > lp.upper[j] {
                skip = true;
                break;
            }
            leaf.lower[j] = v;
            leaf.upper[j] = v;
        }
        if skip {
            continue;
        }
        match solve_dense_lp(&leaf) {
            Outcome::Optimal { objective, x } => {
                if best.as_ref().is_none_or(|(b, _)| objective < *b) {
                    best = Some((objective, x));
                }
            }
            Outcome::Unbounded => return Outcome::Unbounded,
            Outcome::Infeasible => {}
        }
    }
    match best {
        Some((objective, x)) => Outcome::Optimal { objective, x },
        None => Outcome::Infeasible,
    }
}
