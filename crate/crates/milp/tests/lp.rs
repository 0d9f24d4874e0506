mod common;

use common::{random_model, rel_close, to_dense};
use ies_milp::{certificate_slack, solve_lp, LinExpr, LpStatus, MilpModel, Relation};
use ies_oracles::{solve_dense_lp, Outcome};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const INF: f64 = f64::INFINITY;

#[test]
fn single_lower_bound_row() {
    let mut m = MilpModel::new("t");
    let x = m.continuous("x", f64::NEG_INFINITY, INF).unwrap();
    m.add_constraint(x, Relation::Ge, 3.0, "lb").unwrap();
    m.set_objective(x).unwrap();
    let s = solve_lp(&m).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.value(x) - 3.0).abs() < 1e-9);
    assert!((s.objective - 3.0).abs() < 1e-9);
    assert!((s.duals[0] - 1.0).abs() < 1e-9);
}

#[test]
fn simplex_edge() {
    let mut m = MilpModel::new("t");
    let x = m.continuous("x", 0.0, INF).unwrap();
    let y = m.continuous("y", 0.0, INF).unwrap();
    m.add_constraint(x + y, Relation::Le, 1.0, "cap").unwrap();
    m.set_objective(-1.0 * x - y).unwrap();
    let s = solve_lp(&m).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective + 1.0).abs() < 1e-9);
    assert!((s.value(x) + s.value(y) - 1.0).abs() < 1e-9);
}

#[test]
fn contradictory_bounds_give_certificate() {
    let mut m = MilpModel::new("t");
    let x = m.continuous("x", f64::NEG_INFINITY, INF).unwrap();
    m.add_constraint(x, Relation::Ge, 1.0, "lo").unwrap();
    m.add_constraint(x, Relation::Le, 0.0, "hi").unwrap();
    m.set_objective(x).unwrap();
    let s = solve_lp(&m).unwrap();
    assert_eq!(s.status, LpStatus::Infeasible);
    let y = s.farkas.expect("certificate");
    assert!(certificate_slack(&m, &y) < -1e-9);
}

#[test]
fn unbounded_ray() {
    let mut m = MilpModel::new("t");
    let x = m.continuous("x", 0.0, INF).unwrap();
    let y = m.continuous("y", 0.0, INF).unwrap();
    m.add_constraint(x - y, Relation::Le, 1.0, "r").unwrap();
    m.set_objective(-1.0 * x).unwrap();
    assert_eq!(solve_lp(&m).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn empty_row_infeasible() {
    let mut m = MilpModel::new("t");
    let x = m.continuous("x", 0.0, 1.0).unwrap();
    m.add_constraint(LinExpr::new(), Relation::Ge, 1.0, "zero").unwrap();
    m.set_objective(x).unwrap();
    assert_eq!(solve_lp(&m).unwrap().status, LpStatus::Infeasible);
}

/// Beale's example, which cycles under the textbook largest-coefficient rule.
#[test]
fn beale_cycling_example() {
    let mut m = MilpModel::new("beale");
    let x: Vec<_> = (0..4)
        .map(|i| m.continuous(format!("x{i}"), 0.0, INF).unwrap())
        .collect();
    m.add_constraint(0.25 * x[0] - 8.0 * x[1] - 1.0 * x[2] + 9.0 * x[3], Relation::Le, 0.0, "a")
        .unwrap();
    m.add_constraint(0.5 * x[0] - 12.0 * x[1] - 0.5 * x[2] + 3.0 * x[3], Relation::Le, 0.0, "b")
        .unwrap();
    m.add_constraint(LinExpr::from(x[2]), Relation::Le, 1.0, "c").unwrap();
    m.set_objective(-0.75 * x[0] + 20.0 * x[1] - 0.5 * x[2] + 6.0 * x[3])
        .unwrap();
    let s = solve_lp(&m).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective + 1.25).abs() < 1e-9);
}

fn check_kkt(m: &MilpModel, s: &ies_milp::LpSolution) {
    let rhs_norm = m.constraints().iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
    assert!(m.max_violation(&s.primal) <= 1e-7 * (1.0 + rhs_norm));
    let dual = s.dual_objective(m);
    assert!(
        (dual - s.objective).abs() <= 1e-7 * (1.0 + s.objective.abs()),
        "primal {} dual {}",
        s.objective,
        dual
    );
    // Complementary slackness on rows and bounds.
    for (c, &y) in m.constraints().iter().zip(&s.duals) {
        let act = c.expr.eval(&s.primal);
        assert!((y * (act - c.rhs)).abs() <= 1e-6, "row {}: y={y}", c.name);
        match c.relation {
            Relation::Le => assert!(y <= 1e-9),
            Relation::Ge => assert!(y >= -1e-9),
            Relation::Eq => {}
        }
    }
    for (j, v) in m.variables().iter().enumerate() {
        let d = s.reduced_costs[j];
        let x = s.primal[j];
        if d > 1e-9 {
            assert!((x - v.lower).abs() * d <= 1e-6);
        } else if d < -1e-9 {
            assert!((v.upper - x).abs() * d.abs() <= 1e-6);
        }
    }
}

#[test]
fn random_lps_match_oracle_and_satisfy_duality() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut optimal = 0;
    for _ in 0..300 {
        let m = random_model(&mut rng, 0, 8, 6);
        let s = solve_lp(&m).unwrap();
        match solve_dense_lp(&to_dense(&m)) {
            Outcome::Optimal { objective, .. } => {
                assert_eq!(s.status, LpStatus::Optimal);
                assert!(rel_close(s.objective, objective, 1e-7));
                check_kkt(&m, &s);
                optimal += 1;
            }
            Outcome::Infeasible => {
                assert_eq!(s.status, LpStatus::Infeasible);
                let y = s.farkas.as_ref().expect("certificate");
                assert!(certificate_slack(&m, y) < 0.0);
            }
            Outcome::Unbounded => assert_eq!(s.status, LpStatus::Unbounded),
        }
    }
    assert!(optimal > 100);
}

#[test]
fn relaxation_of_binaries() {
    let mut m = MilpModel::new("t");
    let b = m.binary("b").unwrap();
    m.add_constraint(2.0 * b, Relation::Ge, 1.0, "half").unwrap();
    m.set_objective(b).unwrap();
    let s = solve_lp(&m).unwrap();
    assert!((s.value(b) - 0.5).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_determinism(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, 0, 10, 8);
        let a = solve_lp(&m).unwrap();
        let b = solve_lp(&m).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.iterations, b.iterations);
        prop_assert_eq!(a.primal, b.primal);
    }

    #[test]
    fn badly_scaled_lp_matches_oracle(seed in any::<u64>(), exp in 0i32..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random_model(&mut rng, 0, 6, 5);
        // Rescale row 0 and the objective by powers of ten.
        let mut m = MilpModel::new("scaled");
        for v in base.variables() {
            m.continuous(v.name.clone(), v.lower, v.upper).unwrap();
        }
        let f = 10f64.powi(exp);
        for (i, c) in base.constraints().iter().enumerate() {
            let k = if i == 0 { f } else { 1.0 };
            m.add_constraint(c.expr.scaled(k), c.relation, c.rhs * k, c.name.clone()).unwrap();
        }
        m.set_objective(base.objective().scaled(1.0 / f)).unwrap();
        let s = solve_lp(&m).unwrap();
        match solve_dense_lp(&to_dense(&m)) {
            Outcome::Optimal { objective, .. } => {
                prop_assert_eq!(s.status, LpStatus::Optimal);
                prop_assert!(rel_close(s.objective * f, objective * f, 1e-7), "{} vs {}", s.objective * f, objective * f);
            }
            Outcome::Infeasible => prop_assert_eq!(s.status, LpStatus::Infeasible),
            Outcome::Unbounded => prop_assert_eq!(s.status, LpStatus::Unbounded),
        }
    }
}
