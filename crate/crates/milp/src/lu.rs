//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! The basis is factorized column by column (left-looking) with threshold
//! partial pivoting. Basis changes between refactorizations are appended as
//! eta columns.

/// Pivot candidates must reach this fraction of the column's largest entry.
const PIVOT_THRESHOLD: f64 = 0.1;
/// Below this the column is treated as dependent on the earlier ones.
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Default)]
struct CompressedCols {
    start: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl CompressedCols {
    fn with_capacity(cols: usize) -> Self {
        let mut start = Vec::with_capacity(cols + 1);
        start.push(0);
        Self {
            start,
            idx: Vec::new(),
            val: Vec::new(),
        }
    }

    fn push(&mut self, i: usize, v: f64) {
        self.idx.push(i);
        self.val.push(v);
    }

    fn close(&mut self) {
        self.start.push(self.idx.len());
    }

    fn col(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.start[k]..self.start[k + 1];
        self.idx[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    fn nnz(&self) -> usize {
        self.idx.len()
    }
}

/// Basis positions that could not be pivoted, each paired with a row left
/// without a pivot. Replacing each position by that row's logical column
/// yields a nonsingular basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Singular {
    pub replacements: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct LuFactors {
    m: usize,
    row_of_step: Vec<usize>,
    pos_of_step: Vec<usize>,
    lower: CompressedCols,
    upper: CompressedCols,
    diag: Vec<f64>,
}

impl LuFactors {
    /// Factorizes the `m x m` matrix whose column `p` is `columns[p]`
    /// (pairs of row index and value).
    pub fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        assert_eq!(columns.len(), m);
        let mut row_count = vec![0usize; m];
        for col in columns {
            for &(i, _) in col {
                row_count[i] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (columns[p].len(), p));

        let mut step_of_row = vec![usize::MAX; m];
        let mut row_of_step = Vec::with_capacity(m);
        let mut pos_of_step = Vec::with_capacity(m);
        let mut lower = CompressedCols::with_capacity(m);
        let mut upper = CompressedCols::with_capacity(m);
        let mut diag = Vec::with_capacity(m);
        let mut failed = Vec::new();

        let mut work = vec![0.0f64; m];
        let mut in_pattern = vec![false; m];
        let mut pattern: Vec<usize> = Vec::new();

        for &p in &order {
            for &(i, v) in &columns[p] {
                if !in_pattern[i] {
                    in_pattern[i] = true;
                    pattern.push(i);
                }
                work[i] += v;
            }
            let k = row_of_step.len();
            let mut u_entries: Vec<(usize, f64)> = Vec::new();
            for s in 0..k {
                let v = work[row_of_step[s]];
                if v == 0.0 {
                    continue;
                }
                u_entries.push((s, v));
                for (i, l) in lower.col(s) {
                    if !in_pattern[i] {
                        in_pattern[i] = true;
                        pattern.push(i);
                    }
                    work[i] -= l * v;
                }
            }
            let mut max_abs = 0.0f64;
            for &i in &pattern {
                if step_of_row[i] == usize::MAX {
                    max_abs = max_abs.max(work[i].abs());
                }
            }
            let mut pivot_row = usize::MAX;
            if max_abs > SINGULAR_TOL {
                let mut best = (usize::MAX, usize::MAX);
                for &i in &pattern {
                    if step_of_row[i] == usize::MAX && work[i].abs() >= PIVOT_THRESHOLD * max_abs {
                        let key = (row_count[i], i);
                        if key < best {
                            best = key;
                            pivot_row = i;
                        }
                    }
                }
            }
            if pivot_row == usize::MAX {
                failed.push(p);
            } else {
                let pivot = work[pivot_row];
                for &(s, v) in &u_entries {
                    if v.abs() > DROP_TOL {
                        upper.push(s, v);
                    }
                }
                upper.close();
                for &i in &pattern {
                    if i != pivot_row && step_of_row[i] == usize::MAX {
                        let l = work[i] / pivot;
                        if l.abs() > DROP_TOL {
                            lower.push(i, l);
                        }
                    }
                }
                lower.close();
                diag.push(pivot);
                step_of_row[pivot_row] = k;
                row_of_step.push(pivot_row);
                pos_of_step.push(p);
            }
            for &i in &pattern {
                work[i] = 0.0;
                in_pattern[i] = false;
            }
            pattern.clear();
        }

        if !failed.is_empty() {
            let free_rows = (0..m).filter(|&i| step_of_row[i] == usize::MAX);
            return Err(Singular {
                replacements: failed.into_iter().zip(free_rows).collect(),
            });
        }
        Ok(Self {
            m,
            row_of_step,
            pos_of_step,
            lower,
            upper,
            diag,
        })
    }

    pub fn nnz(&self) -> usize {
        self.lower.nnz() + self.upper.nnz() + self.m
    }

    /// Solves `B z = rhs`; `rhs` is indexed by row and is consumed as scratch,
    /// `out` is indexed by basis position.
    pub fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        for s in 0..self.m {
            let v = rhs[self.row_of_step[s]];
            if v != 0.0 {
                for (i, l) in self.lower.col(s) {
                    rhs[i] -= l * v;
                }
            }
        }
        // `out` temporarily holds the step-ordered vector.
        let mut y: Vec<f64> = (0..self.m).map(|s| rhs[self.row_of_step[s]]).collect();
        for k in (0..self.m).rev() {
            let w = y[k] / self.diag[k];
            y[k] = w;
            if w != 0.0 {
                for (s, u) in self.upper.col(k) {
                    y[s] -= u * w;
                }
            }
        }
        for k in 0..self.m {
            out[self.pos_of_step[k]] = y[k];
        }
    }

    /// Solves `B^T z = rhs`; `rhs` is indexed by basis position, `out` by row.
    pub fn btran(&self, rhs: &[f64], out: &mut [f64]) {
        let mut v = vec![0.0; self.m];
        for k in 0..self.m {
            let mut acc = rhs[self.pos_of_step[k]];
            for (s, u) in self.upper.col(k) {
                acc -= u * v[s];
            }
            v[k] = acc / self.diag[k];
        }
        for s in (0..self.m).rev() {
            let mut acc = v[s];
            for (i, l) in self.lower.col(s) {
                acc -= l * out[i];
            }
            out[self.row_of_step[s]] = acc;
        }
    }
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

/// LU factors of a reference basis plus the eta columns of later pivots.
#[derive(Debug, Clone)]
pub struct Factorization {
    lu: LuFactors,
    etas: Vec<Eta>,
    eta_nnz: usize,
    scratch: Vec<f64>,
}

impl Factorization {
    pub fn new(lu: LuFactors) -> Self {
        let m = lu.m;
        Self {
            lu,
            etas: Vec::new(),
            eta_nnz: 0,
            scratch: vec![0.0; m],
        }
    }

    /// True once the eta file has grown enough that refactorizing pays off.
    pub fn wants_refactor(&self, max_updates: usize) -> bool {
        self.etas.len() >= max_updates || self.eta_nnz > 2 * self.lu.nnz() + 10 * self.lu.m
    }

    /// `out = B^{-1} column`, where `column` is sparse in row space.
    pub fn ftran_sparse(&mut self, column: &[(usize, f64)], out: &mut [f64]) {
        let mut rhs = std::mem::take(&mut self.scratch);
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for &(i, v) in column {
            rhs[i] += v;
        }
        self.lu.ftran(&mut rhs, out);
        self.scratch = rhs;
        self.apply_etas(out);
    }

    /// `out = B^{-1} rhs` for a dense row-space `rhs` (consumed).
    pub fn ftran_dense(&self, rhs: &mut [f64], out: &mut [f64]) {
        self.lu.ftran(rhs, out);
        self.apply_etas(out);
    }

    fn apply_etas(&self, z: &mut [f64]) {
        for eta in &self.etas {
            let zp = z[eta.pos];
            if zp == 0.0 {
                continue;
            }
            let zp = zp / eta.pivot;
            z[eta.pos] = zp;
            for &(i, a) in &eta.entries {
                z[i] -= a * zp;
            }
        }
    }

    /// `out = B^{-T} rhs`, `rhs` indexed by basis position (consumed).
    pub fn btran(&self, rhs: &mut [f64], out: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut acc = rhs[eta.pos];
            for &(i, a) in &eta.entries {
                acc -= a * rhs[i];
            }
            rhs[eta.pos] = acc / eta.pivot;
        }
        self.lu.btran(rhs, out);
    }

    /// Records that basis position `pos` was replaced by a column whose
    /// representation in the old basis is `alpha` (dense, by position).
    pub fn update(&mut self, pos: usize, alpha: &[f64]) {
        let entries: Vec<(usize, f64)> = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != pos && a.abs() > DROP_TOL)
            .map(|(i, &a)| (i, a))
            .collect();
        self.eta_nnz += entries.len() + 1;
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_to_cols(a: &[Vec<f64>]) -> Vec<Vec<(usize, f64)>> {
        let m = a.len();
        (0..m)
            .map(|j| {
                (0..m)
                    .filter(|&i| a[i][j] != 0.0)
                    .map(|i| (i, a[i][j]))
                    .collect()
            })
            .collect()
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
            .collect()
    }

    fn mat_t_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        let m = a.len();
        (0..m).map(|j| (0..m).map(|i| a[i][j] * x[i]).sum()).collect()
    }

    #[test]
    fn solves_small_system_both_ways() {
        let a = vec![
            vec![4.0, 0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0, 2.0],
            vec![1.0, 3.0, 0.0, 0.0],
            vec![0.0, 0.0, 5.0, 1.0],
        ];
        let lu = LuFactors::factorize(4, &dense_to_cols(&a)).unwrap();
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let mut b = matvec(&a, &x_true);
        let mut x = vec![0.0; 4];
        lu.ftran(&mut b, &mut x);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
        let c = mat_t_vec(&a, &x_true);
        let mut z = vec![0.0; 4];
        lu.btran(&c, &mut z);
        for (u, v) in z.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_dependent_columns() {
        let a = vec![
            vec![1.0, 2.0, 0.0],
            vec![2.0, 4.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let err = LuFactors::factorize(3, &dense_to_cols(&a)).unwrap_err();
        assert_eq!(err.replacements.len(), 1);
    }

    #[test]
    fn eta_updates_match_refactorization() {
        let a = vec![
            vec![2.0, 1.0, 0.0],
            vec![0.0, 3.0, 1.0],
            vec![1.0, 0.0, 4.0],
        ];
        let mut f = Factorization::new(LuFactors::factorize(3, &dense_to_cols(&a)).unwrap());
        // Replace column 1 by (1, 1, 1).
        let newcol = vec![(0, 1.0), (1, 1.0), (2, 1.0)];
        let mut alpha = vec![0.0; 3];
        f.ftran_sparse(&newcol, &mut alpha);
        f.update(1, &alpha);
        let mut a2 = a.clone();
        for r in a2.iter_mut() {
            r[1] = 1.0;
        }
        let x_true = [0.3, -1.0, 2.0];
        let b = matvec(&a2, &x_true);
        let sparse_b: Vec<(usize, f64)> = b.iter().copied().enumerate().collect();
        let mut x = vec![0.0; 3];
        f.ftran_sparse(&sparse_b, &mut x);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
        let mut c = mat_t_vec(&a2, &x_true);
        let mut z = vec![0.0; 3];
        f.btran(&mut c, &mut z);
        for (u, v) in z.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
