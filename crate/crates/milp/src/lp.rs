//! Column/row compressed, scaled LP data built from a [`MilpModel`] relaxation.

use crate::model::{MilpModel, Relation};

/// `min cost.x` subject to `row_lower <= A x <= row_upper` and column bounds.
///
/// Internally every row `i` owns a logical variable `n + i` equal to the row
/// activity, so all bounds live in one vector of length `n + m`.
#[derive(Debug, Clone)]
pub struct LpData {
    pub(crate) n: usize,
    pub(crate) m: usize,
    pub(crate) cost: Vec<f64>,
    pub(crate) col_start: Vec<usize>,
    pub(crate) col_idx: Vec<usize>,
    pub(crate) col_val: Vec<f64>,
    pub(crate) row_start: Vec<usize>,
    pub(crate) row_idx: Vec<usize>,
    pub(crate) row_val: Vec<f64>,
    pub(crate) lower: Vec<f64>,
    pub(crate) upper: Vec<f64>,
    pub(crate) col_scale: Vec<f64>,
    pub(crate) row_scale: Vec<f64>,
    pub(crate) offset: f64,
}

fn pow2_round(v: f64) -> f64 {
    if !(v.is_finite() && v > 0.0) {
        return 1.0;
    }
    2f64.powi(v.log2().round() as i32)
}

impl LpData {
    /// Continuous relaxation of `model` (binaries relaxed to their bounds).
    pub fn from_model(model: &MilpModel) -> Self {
        let n = model.num_variables();
        let m = model.num_constraints();
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        for v in model.variables() {
            lower.push(v.lower);
            upper.push(v.upper);
        }
        for (i, c) in model.constraints().iter().enumerate() {
            for &(v, a) in c.expr.terms() {
                triplets.push((i, v.index(), a));
            }
            let (lo, hi) = match c.relation {
                Relation::Le => (f64::NEG_INFINITY, c.rhs),
                Relation::Ge => (c.rhs, f64::INFINITY),
                Relation::Eq => (c.rhs, c.rhs),
            };
            lower.push(lo);
            upper.push(hi);
        }
        let mut cost = vec![0.0; n];
        for &(v, c) in model.objective().terms() {
            cost[v.index()] = c;
        }
        let mut lp = Self::assemble(n, m, triplets, cost, lower, upper);
        lp.offset = model.objective().constant_term();
        lp.scale();
        lp
    }

    fn assemble(
        n: usize,
        m: usize,
        mut triplets: Vec<(usize, usize, f64)>,
        cost: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Self {
        triplets.sort_by_key(|t| (t.1, t.0));
        let mut col_start = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut col_val = Vec::with_capacity(triplets.len());
        for &(i, j, a) in &triplets {
            col_start[j + 1] += 1;
            col_idx.push(i);
            col_val.push(a);
        }
        for j in 0..n {
            col_start[j + 1] += col_start[j];
        }
        let mut lp = Self {
            n,
            m,
            cost,
            col_start,
            col_idx,
            col_val,
            row_start: Vec::new(),
            row_idx: Vec::new(),
            row_val: Vec::new(),
            lower,
            upper,
            col_scale: vec![1.0; n],
            row_scale: vec![1.0; m],
            offset: 0.0,
        };
        lp.rebuild_rows();
        lp
    }

    fn rebuild_rows(&mut self) {
        let mut row_start = vec![0usize; self.m + 1];
        for &i in &self.col_idx {
            row_start[i + 1] += 1;
        }
        for i in 0..self.m {
            row_start[i + 1] += row_start[i];
        }
        let mut fill = row_start.clone();
        let nnz = self.col_idx.len();
        let mut row_idx = vec![0usize; nnz];
        let mut row_val = vec![0.0; nnz];
        for j in 0..self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                let i = self.col_idx[k];
                row_idx[fill[i]] = j;
                row_val[fill[i]] = self.col_val[k];
                fill[i] += 1;
            }
        }
        self.row_start = row_start;
        self.row_idx = row_idx;
        self.row_val = row_val;
    }

    /// Geometric-mean scaling by powers of two, so scaling is exact.
    fn scale(&mut self) {
        if self.col_idx.is_empty() {
            return;
        }
        let mut r = vec![1.0f64; self.m];
        let mut c = vec![1.0f64; self.n];
        for _ in 0..4 {
            let mut rmin = vec![f64::INFINITY; self.m];
            let mut rmax = vec![0.0f64; self.m];
            for j in 0..self.n {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    let i = self.col_idx[k];
                    let a = (self.col_val[k] * r[i] * c[j]).abs();
                    rmin[i] = rmin[i].min(a);
                    rmax[i] = rmax[i].max(a);
                }
            }
            for i in 0..self.m {
                if rmax[i] > 0.0 {
                    r[i] *= pow2_round(1.0 / (rmin[i] * rmax[i]).sqrt());
                }
            }
            for j in 0..self.n {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for k in self.col_start[j]..self.col_start[j + 1] {
                    let a = (self.col_val[k] * r[self.col_idx[k]] * c[j]).abs();
                    lo = lo.min(a);
                    hi = hi.max(a);
                }
                if hi > 0.0 {
                    c[j] *= pow2_round(1.0 / (lo * hi).sqrt());
                }
            }
        }
        for j in 0..self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                self.col_val[k] *= r[self.col_idx[k]] * c[j];
            }
            self.cost[j] *= c[j];
            self.lower[j] /= c[j];
            self.upper[j] /= c[j];
        }
        for i in 0..self.m {
            self.lower[self.n + i] *= r[i];
            self.upper[self.n + i] *= r[i];
        }
        self.col_scale = c;
        self.row_scale = r;
        self.rebuild_rows();
    }

    /// Column `j` of `[A, -I]` in scaled space.
    pub(crate) fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1])
                .map(|k| (self.col_idx[k], self.col_val[k]))
                .collect()
        } else {
            vec![(j - self.n, -1.0)]
        }
    }

    /// `rho . column(j)`
    pub(crate) fn dot_column(&self, rho: &[f64], j: usize) -> f64 {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1])
                .map(|k| rho[self.col_idx[k]] * self.col_val[k])
                .sum()
        } else {
            -rho[j - self.n]
        }
    }

    /// Overrides the bounds of a structural column, given in model units.
    pub(crate) fn set_col_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower / self.col_scale[j];
        self.upper[j] = upper / self.col_scale[j];
    }
}
