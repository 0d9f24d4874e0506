mod common;

use common::{random_model, rel_close, to_dense};
use ies_milp::{
    solve_milp, EmbeddedBackend, LinExpr, MilpModel, MilpStatus, Relation, SolveOptions,
    SolverBackend, INTEGRALITY_TOL,
};
use ies_oracles::{enumerate_binaries, Outcome};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check_against_oracle(m: &MilpModel) {
    let opts = SolveOptions::default();
    let s = solve_milp(m, &opts).unwrap();
    match enumerate_binaries(&to_dense(m)) {
        Outcome::Optimal { objective, .. } => {
            assert_eq!(s.status, MilpStatus::Optimal, "oracle optimum {objective}");
            assert!(
                rel_close(s.objective, objective, 1e-6),
                "solver {} oracle {}",
                s.objective,
                objective
            );
            assert!(s.gap <= opts.gap_tol);
            assert!(s.bound <= s.objective + 1e-9);
            assert!(m.max_violation(&s.values) <= 1e-6);
            for (v, x) in m.variables().iter().zip(&s.values) {
                if v.is_binary() {
                    assert!(x.fract() == 0.0, "binary {} = {x}", v.name);
                }
            }
        }
        Outcome::Infeasible => assert_eq!(s.status, MilpStatus::Infeasible),
        Outcome::Unbounded => assert_eq!(s.status, MilpStatus::Unbounded),
    }
}

#[test]
fn two_variable_example() {
    let mut m = MilpModel::new("t");
    let x = m.binary("x").unwrap();
    let y = m.continuous("y", 0.0, f64::INFINITY).unwrap();
    m.add_constraint(x + y, Relation::Ge, 1.5, "cover").unwrap();
    m.set_objective(2.0 * x + y).unwrap();
    let s = solve_milp(&m, &SolveOptions::default()).unwrap();
    assert_eq!(s.status, MilpStatus::Optimal);
    assert!((s.objective - 1.5).abs() < 1e-9);
    assert_eq!(s.value(x), 0.0);
    assert!((s.value(y) - 1.5).abs() < 1e-9);
}

#[test]
fn pure_lp_takes_one_node() {
    let mut m = MilpModel::new("t");
    let x = m.continuous("x", 0.0, 4.0).unwrap();
    let y = m.continuous("y", 0.0, 4.0).unwrap();
    m.add_constraint(x + 2.0 * y, Relation::Ge, 3.0, "r").unwrap();
    m.set_objective(x + y).unwrap();
    let s = solve_milp(&m, &SolveOptions::default()).unwrap();
    assert_eq!(s.status, MilpStatus::Optimal);
    assert_eq!(s.nodes, 1);
    assert!((s.objective - 1.5).abs() < 1e-9);
}

#[test]
fn integer_infeasible() {
    let mut m = MilpModel::new("t");
    let b = m.binary("b").unwrap();
    m.add_constraint(2.0 * b, Relation::Eq, 1.0, "half").unwrap();
    m.set_objective(b).unwrap();
    let s = solve_milp(&m, &SolveOptions::default()).unwrap();
    assert_eq!(s.status, MilpStatus::Infeasible);
    assert!(s.values.is_empty());
}

fn knapsack(rng: &mut ChaCha8Rng, items: usize) -> MilpModel {
    let mut m = MilpModel::new("knapsack");
    let mut weight = LinExpr::new();
    let mut value = LinExpr::new();
    let mut total = 0.0;
    for i in 0..items {
        let b = m.binary(format!("take[{i}]")).unwrap();
        let w = f64::from(rng.gen_range(1..=20u8));
        total += w;
        weight.add_term(b, w);
        value.add_term(b, -f64::from(rng.gen_range(1..=30u8)));
    }
    m.add_constraint(weight, Relation::Le, (total / 2.0).floor(), "capacity")
        .unwrap();
    m.set_objective(value).unwrap();
    m
}

#[test]
fn knapsacks_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for items in [3, 6, 9, 12] {
        for _ in 0..5 {
            check_against_oracle(&knapsack(&mut rng, items));
        }
    }
}

#[test]
fn random_models_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for k in 0..120 {
        let bins = 1 + k % 12;
        let m = random_model(&mut rng, bins, 4, 3 + k % 6);
        check_against_oracle(&m);
    }
}

#[test]
fn trace_respects_bound_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let m = knapsack(&mut rng, 12);
        let s = solve_milp(&m, &SolveOptions::default()).unwrap();
        assert!(!s.trace.is_empty());
        for p in &s.trace {
            assert!(p.bound <= p.objective + 1e-9, "{p:?}");
        }
        assert_eq!(s.trace.last().unwrap().nodes, s.nodes);
    }
}

#[test]
fn node_limit_keeps_incumbent_and_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m = knapsack(&mut rng, 16);
    let full = solve_milp(&m, &SolveOptions::default()).unwrap();
    let opts = SolveOptions {
        node_limit: Some(3),
        ..SolveOptions::default()
    };
    let s = solve_milp(&m, &opts).unwrap();
    assert!(s.nodes <= 3);
    assert!(s.bound <= full.objective + 1e-9);
    match s.status {
        MilpStatus::Feasible | MilpStatus::Optimal => {
            assert!(s.objective >= full.objective - 1e-9);
            assert!(m.max_violation(&s.values) <= 1e-6);
        }
        MilpStatus::Limit => assert!(s.values.is_empty()),
        other => panic!("unexpected status {other}"),
    }
}

#[test]
fn binaries_are_reported_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let m = random_model(&mut rng, 10, 5, 6);
    let s = solve_milp(&m, &SolveOptions::default()).unwrap();
    if s.status.has_incumbent() {
        for (v, x) in m.variables().iter().zip(&s.values) {
            if v.is_binary() {
                assert!(*x == 0.0 || *x == 1.0);
            }
        }
    }
    const { assert!(INTEGRALITY_TOL <= 1e-6) };
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn backend_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, 8, 4, 6);
        let opts = SolveOptions::default();
        let a = EmbeddedBackend.solve(&m, &opts).unwrap();
        let b = EmbeddedBackend.solve(&m, &opts).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.nodes, b.nodes);
        prop_assert_eq!(a.values, b.values);
        prop_assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }

    #[test]
    fn oracle_equivalence(seed in any::<u64>(), bins in 1usize..=12, rows in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, bins, 3, rows);
        let s = solve_milp(&m, &SolveOptions::default()).unwrap();
        match enumerate_binaries(&to_dense(&m)) {
            Outcome::Optimal { objective, .. } => {
                prop_assert_eq!(s.status, MilpStatus::Optimal);
                prop_assert!(rel_close(s.objective, objective, 1e-6));
            }
            Outcome::Infeasible => prop_assert_eq!(s.status, MilpStatus::Infeasible),
            Outcome::Unbounded => prop_assert_eq!(s.status, MilpStatus::Unbounded),
        }
    }
}
