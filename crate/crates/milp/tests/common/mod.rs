#![allow(dead_code)]

use ies_milp::{LinExpr, MilpModel, Relation, VarKind};
use ies_oracles::{DenseLp, Rel};
use rand::Rng;

pub fn to_dense(model: &MilpModel) -> DenseLp {
    let n = model.num_variables();
    let mut cost = vec![0.0; n];
    for &(v, c) in model.objective().terms() {
        cost[v.index()] = c;
    }
    let rows = model
        .constraints()
        .iter()
        .map(|c| {
            let mut a = vec![0.0; n];
            for &(v, x) in c.expr.terms() {
                a[v.index()] = x;
            }
            let rel = match c.relation {
                Relation::Le => Rel::Le,
                Relation::Ge => Rel::Ge,
                Relation::Eq => Rel::Eq,
            };
            (a, rel, c.rhs)
        })
        .collect();
    DenseLp {
        cost,
        offset: model.objective().constant_term(),
        rows,
        lower: model.variables().iter().map(|v| v.lower).collect(),
        upper: model.variables().iter().map(|v| v.upper).collect(),
        binary: model
            .variables()
            .iter()
            .map(|v| v.kind == VarKind::Binary)
            .collect(),
    }
}

/// Random bounded model; roughly half of the rows are built around a known
/// point so most instances are feasible.
pub fn random_model<R: Rng>(rng: &mut R, binaries: usize, continuous: usize, rows: usize) -> MilpModel {
    let mut m = MilpModel::new("random");
    let mut vars = Vec::new();
    let mut point = Vec::new();
    for i in 0..binaries {
        vars.push(m.binary(format!("b{i}")).unwrap());
        point.push(f64::from(rng.gen_range(0..=1u8)));
    }
    for i in 0..continuous {
        let lo = f64::from(rng.gen_range(-3..=0i8));
        let hi = lo + f64::from(rng.gen_range(1..=8i8));
        vars.push(m.continuous(format!("x{i}"), lo, hi).unwrap());
        point.push(rng.gen_range(lo..=hi));
    }
    for r in 0..rows {
        let mut e = LinExpr::new();
        let mut at_point = 0.0;
        for (k, &v) in vars.iter().enumerate() {
            if rng.gen_bool(0.6) {
                let a = f64::from(rng.gen_range(-5..=5i8));
                e.add_term(v, a);
                at_point += a * point[k];
            }
        }
        let rel = match rng.gen_range(0..5u8) {
            0 => Relation::Eq,
            1 | 2 => Relation::Le,
            _ => Relation::Ge,
        };
        let rhs = if rng.gen_bool(0.8) {
            match rel {
                Relation::Le => (at_point + rng.gen_range(0.0..3.0)).round(),
                Relation::Ge => (at_point - rng.gen_range(0.0..3.0)).round(),
                Relation::Eq => at_point,
            }
        } else {
            f64::from(rng.gen_range(-10..=10i8))
        };
        m.add_constraint(e, rel, rhs, format!("r{r}")).unwrap();
    }
    let mut obj = LinExpr::new();
    for &v in &vars {
        obj.add_term(v, f64::from(rng.gen_range(-6..=6i8)));
    }
    obj.add_constant(f64::from(rng.gen_range(-5..=5i8)));
    m.set_objective(obj).unwrap();
    m
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
