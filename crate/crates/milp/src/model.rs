//! Solver-agnostic mixed-integer linear model.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::ModelError;

/// Dense handle of a variable inside one [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Dense handle of a constraint inside one [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintId(pub usize);

impl ConstraintId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub name: String,
}

impl Variable {
    pub fn is_binary(&self) -> bool {
        self.kind == VarKind::Binary
    }
}

/// Sparse affine expression `sum(coef * var) + constant`.
///
/// Terms are kept sorted by variable id with no duplicates and no zero
/// coefficients, so two equal expressions compare equal.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    terms: Vec<(VarId, f64)>,
    constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn term(var: VarId, coef: f64) -> Self {
        let mut e = Self::new();
        e.add_term(var, coef);
        e
    }

    pub fn terms(&self) -> &[(VarId, f64)] {
        &self.terms
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coef(&self, var: VarId) -> f64 {
        match self.terms.binary_search_by_key(&var, |t| t.0) {
            Ok(i) => self.terms[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn add_term(&mut self, var: VarId, coef: f64) -> &mut Self {
        match self.terms.binary_search_by_key(&var, |t| t.0) {
            Ok(i) => {
                self.terms[i].1 += coef;
                if self.terms[i].1 == 0.0 {
                    self.terms.remove(i);
                }
            }
            Err(i) => {
                if coef != 0.0 {
                    self.terms.insert(i, (var, coef));
                }
            }
        }
        self
    }

    pub fn add_constant(&mut self, value: f64) -> &mut Self {
        self.constant += value;
        self
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        if scale == 0.0 {
            return self;
        }
        if self.terms.is_empty() {
            self.terms = other
                .terms
                .iter()
                .map(|&(v, c)| (v, c * scale))
                .filter(|t| t.1 != 0.0)
                .collect();
        } else {
            let mut merged = Vec::with_capacity(self.terms.len() + other.terms.len());
            let (mut i, mut j) = (0, 0);
            while i < self.terms.len() || j < other.terms.len() {
                let next = match (self.terms.get(i), other.terms.get(j)) {
                    (Some(&a), Some(&b)) if a.0 == b.0 => {
                        i += 1;
                        j += 1;
                        (a.0, a.1 + b.1 * scale)
                    }
                    (Some(&a), Some(&b)) if a.0 < b.0 => {
                        i += 1;
                        a
                    }
                    (Some(_), Some(&b)) => {
                        j += 1;
                        (b.0, b.1 * scale)
                    }
                    (Some(&a), None) => {
                        i += 1;
                        a
                    }
                    (None, Some(&b)) => {
                        j += 1;
                        (b.0, b.1 * scale)
                    }
                    (None, None) => unreachable!(),
                };
                if next.1 != 0.0 {
                    merged.push(next);
                }
            }
            self.terms = merged;
        }
        self.constant += other.constant * scale;
        self
    }

    pub fn scaled(&self, scale: f64) -> LinExpr {
        let mut e = LinExpr::new();
        e.add_scaled(self, scale);
        e
    }

    /// Evaluates the expression at `values[var.index()]`.
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(v, c)| c * values[v.index()])
                .sum::<f64>()
    }

    fn all_finite(&self) -> bool {
        self.constant.is_finite() && self.terms.iter().all(|t| t.1.is_finite())
    }
}

impl From<VarId> for LinExpr {
    fn from(v: VarId) -> Self {
        LinExpr::term(v, 1.0)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl<T: Into<LinExpr>> Add<T> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: T) -> LinExpr {
        self.add_scaled(&rhs.into(), 1.0);
        self
    }
}

impl<T: Into<LinExpr>> Sub<T> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: T) -> LinExpr {
        self.add_scaled(&rhs.into(), -1.0);
        self
    }
}

impl<T: Into<LinExpr>> AddAssign<T> for LinExpr {
    fn add_assign(&mut self, rhs: T) {
        self.add_scaled(&rhs.into(), 1.0);
    }
}

impl<T: Into<LinExpr>> SubAssign<T> for LinExpr {
    fn sub_assign(&mut self, rhs: T) {
        self.add_scaled(&rhs.into(), -1.0);
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.scaled(rhs)
    }
}

impl Mul<VarId> for f64 {
    type Output = LinExpr;
    fn mul(self, rhs: VarId) -> LinExpr {
        LinExpr::term(rhs, self)
    }
}

impl<T: Into<LinExpr>> Add<T> for VarId {
    type Output = LinExpr;
    fn add(self, rhs: T) -> LinExpr {
        LinExpr::from(self) + rhs
    }
}

impl<T: Into<LinExpr>> Sub<T> for VarId {
    type Output = LinExpr;
    fn sub(self, rhs: T) -> LinExpr {
        LinExpr::from(self) - rhs
    }
}

impl Mul<LinExpr> for f64 {
    type Output = LinExpr;
    fn mul(self, rhs: LinExpr) -> LinExpr {
        rhs.scaled(self)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scaled(-1.0)
    }
}

impl std::iter::Sum for LinExpr {
    fn sum<I: Iterator<Item = LinExpr>>(iter: I) -> LinExpr {
        let mut acc = LinExpr::new();
        for e in iter {
            acc.add_scaled(&e, 1.0);
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

impl Relation {
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Relation::Le => lhs <= rhs + tol,
            Relation::Eq => (lhs - rhs).abs() <= tol,
            Relation::Ge => lhs >= rhs - tol,
        }
    }
}

/// `expr relation rhs`, with the expression constant already folded into `rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub expr: LinExpr,
    pub relation: Relation,
    pub rhs: f64,
    pub name: String,
}

impl Constraint {
    /// Signed violation at the point (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.expr.eval(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A minimization problem over continuous and binary variables.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    name: String,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: LinExpr,
    var_lookup: HashMap<String, VarId>,
    con_lookup: HashMap<String, ConstraintId>,
    trivially_infeasible: Vec<ConstraintId>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn add_variable(
        &mut self,
        kind: VarKind,
        lower: f64,
        upper: f64,
        name: impl Into<String>,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        if lower.is_nan() || upper.is_nan() || lower == f64::INFINITY || upper == f64::NEG_INFINITY
        {
            return Err(ModelError::InvalidBounds { name, lower, upper });
        }
        let (lower, upper) = match kind {
            VarKind::Continuous => (lower, upper),
            VarKind::Binary => (lower.max(0.0).ceil(), upper.min(1.0).floor()),
        };
        if lower > upper {
            return Err(ModelError::InvalidBounds { name, lower, upper });
        }
        if self.var_lookup.contains_key(&name) {
            return Err(ModelError::DuplicateName(name));
        }
        let id = VarId(self.variables.len());
        self.var_lookup.insert(name.clone(), id);
        self.variables.push(Variable {
            kind,
            lower,
            upper,
            name,
        });
        Ok(id)
    }

    pub fn continuous(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, ModelError> {
        self.add_variable(VarKind::Continuous, lower, upper, name)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> Result<VarId, ModelError> {
        self.add_variable(VarKind::Binary, 0.0, 1.0, name)
    }

    /// Adds `expr relation rhs`. Constraints without variables are kept and,
    /// when they cannot hold, recorded as trivially infeasible.
    pub fn add_constraint(
        &mut self,
        expr: impl Into<LinExpr>,
        relation: Relation,
        rhs: f64,
        name: impl Into<String>,
    ) -> Result<ConstraintId, ModelError> {
        let name = name.into();
        let mut expr = expr.into();
        if !expr.all_finite() || !rhs.is_finite() {
            return Err(ModelError::NonFinite(name));
        }
        if let Some(&(v, _)) = expr.terms.iter().find(|t| t.0.index() >= self.variables.len()) {
            return Err(ModelError::UnknownVariable(v));
        }
        if self.con_lookup.contains_key(&name) {
            return Err(ModelError::DuplicateName(name));
        }
        let rhs = rhs - expr.constant;
        expr.constant = 0.0;
        let id = ConstraintId(self.constraints.len());
        if expr.is_constant() && !relation.holds(0.0, rhs, 0.0) {
            self.trivially_infeasible.push(id);
        }
        self.con_lookup.insert(name.clone(), id);
        self.constraints.push(Constraint {
            expr,
            relation,
            rhs,
            name,
        });
        Ok(id)
    }

    pub fn set_objective(&mut self, objective: impl Into<LinExpr>) -> Result<(), ModelError> {
        let objective = objective.into();
        if !objective.all_finite() {
            return Err(ModelError::NonFinite("objective".into()));
        }
        if let Some(&(v, _)) = objective
            .terms
            .iter()
            .find(|t| t.0.index() >= self.variables.len())
        {
            return Err(ModelError::UnknownVariable(v));
        }
        self.objective = objective;
        Ok(())
    }

    /// Tightens the bounds of an existing variable.
    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) -> Result<(), ModelError> {
        let v = self
            .variables
            .get_mut(var.index())
            .ok_or(ModelError::UnknownVariable(var))?;
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(ModelError::InvalidBounds {
                name: v.name.clone(),
                lower,
                upper,
            });
        }
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    /// Changes the kind of an existing variable; binaries get their bounds
    /// clamped to [0, 1].
    pub fn set_kind(&mut self, var: VarId, kind: VarKind) -> Result<(), ModelError> {
        let v = self
            .variables
            .get_mut(var.index())
            .ok_or(ModelError::UnknownVariable(var))?;
        if kind == VarKind::Binary {
            let (lower, upper) = (v.lower.max(0.0).ceil(), v.upper.min(1.0).floor());
            if lower > upper {
                return Err(ModelError::InvalidBounds {
                    name: v.name.clone(),
                    lower,
                    upper,
                });
            }
            v.lower = lower;
            v.upper = upper;
        }
        v.kind = kind;
        Ok(())
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.index()]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, id: ConstraintId) -> &Constraint {
        &self.constraints[id.index()]
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.is_binary()).count()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.var_lookup.get(name).copied()
    }

    pub fn constraint_by_name(&self, name: &str) -> Option<ConstraintId> {
        self.con_lookup.get(name).copied()
    }

    /// Constraints without variables whose constant side cannot hold.
    pub fn trivially_infeasible(&self) -> &[ConstraintId] {
        &self.trivially_infeasible
    }

    /// Largest bound or constraint violation at `values`, including
    /// integrality of binaries.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self.variables.iter().zip(values).map(|(v, &x)| {
            let b = (v.lower - x).max(x - v.upper).max(0.0);
            if v.is_binary() {
                b.max((x - x.round()).abs())
            } else {
                b
            }
        });
        let rows = self.constraints.iter().map(|c| c.violation(values));
        bounds.chain(rows).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_bounds_are_clamped() {
        let mut m = MilpModel::new("t");
        let b = m.add_variable(VarKind::Binary, -3.0, 7.0, "b").unwrap();
        let v = m.variable(b);
        assert_eq!(v.kind, VarKind::Binary);
        assert_eq!((v.lower, v.upper), (0.0, 1.0));
        let ok = m.add_variable(VarKind::Binary, 0.0, 1.0, "b2").unwrap();
        assert_eq!((m.variable(ok).lower, m.variable(ok).upper), (0.0, 1.0));
    }

    #[test]
    fn inverted_bounds_rejected() {
        let mut m = MilpModel::new("t");
        assert!(matches!(
            m.continuous("x", 2.0, 1.0),
            Err(ModelError::InvalidBounds { .. })
        ));
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut m = MilpModel::new("t");
        let x = m.continuous("x", 0.0, 1.0).unwrap();
        assert!(matches!(
            m.continuous("x", 0.0, 1.0),
            Err(ModelError::DuplicateName(_))
        ));
        m.add_constraint(x, Relation::Le, 1.0, "c").unwrap();
        assert!(matches!(
            m.add_constraint(x, Relation::Le, 1.0, "c"),
            Err(ModelError::DuplicateName(_))
        ));
    }

    #[test]
    fn constant_constraints_are_screened() {
        let mut m = MilpModel::new("t");
        let bad = m
            .add_constraint(LinExpr::new(), Relation::Ge, 1.0, "zero_ge_one")
            .unwrap();
        m.add_constraint(LinExpr::new(), Relation::Ge, -1.0, "zero_ge_minus_one")
            .unwrap();
        assert_eq!(m.trivially_infeasible(), &[bad]);
    }

    #[test]
    fn handles_are_dense() {
        let mut m = MilpModel::new("t");
        for i in 0..10_000 {
            let id = m.continuous(format!("x{i}"), 0.0, 1.0).unwrap();
            assert_eq!(id.index(), i);
        }
        assert_eq!(m.num_variables(), 10_000);
    }

    #[test]
    fn expression_arithmetic_normalizes() {
        let mut m = MilpModel::new("t");
        let x = m.continuous("x", 0.0, 1.0).unwrap();
        let y = m.continuous("y", 0.0, 1.0).unwrap();
        let e = LinExpr::from(x) + 2.0 * y - LinExpr::from(x) + 3.0;
        assert_eq!(e.terms(), &[(y, 2.0)]);
        assert_eq!(e.constant_term(), 3.0);
        assert_eq!(e.eval(&[5.0, 1.5]), 6.0);
    }

    #[test]
    fn constant_folds_into_rhs() {
        let mut m = MilpModel::new("t");
        let x = m.continuous("x", 0.0, 10.0).unwrap();
        let c = m
            .add_constraint(LinExpr::from(x) + 2.0, Relation::Le, 5.0, "c")
            .unwrap();
        assert_eq!(m.constraint(c).rhs, 3.0);
        assert_eq!(m.constraint(c).expr.constant_term(), 0.0);
    }

    #[test]
    fn unknown_variable_rejected() {
        let mut m = MilpModel::new("t");
        let r = m.add_constraint(VarId(3), Relation::Le, 1.0, "c");
        assert!(matches!(r, Err(ModelError::UnknownVariable(VarId(3)))));
    }
}
