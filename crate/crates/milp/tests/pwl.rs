use ies_milp::{
    bigm_indicator, pwl_convex, pwl_general, solve_milp, ConvexPwl, LinExpr, MilpModel,
    MilpStatus, ModelError, Quadratic, Relation, SolveOptions,
};
use proptest::prelude::*;

/// Minimizes the surrogate with `x` pinned to `at`; returns the surrogate value.
fn surrogate_at(quad: Quadratic, x_max: f64, n: usize, at: f64) -> f64 {
    let mut m = MilpModel::new("pwl");
    let x = m.continuous("x", 0.0, x_max).unwrap();
    let y = pwl_convex(&mut m, x, quad, x_max, n, "y").unwrap();
    m.add_constraint(x, Relation::Eq, at, "pin").unwrap();
    m.set_objective(y).unwrap();
    let s = solve_milp(&m, &SolveOptions::default()).unwrap();
    assert_eq!(s.status, MilpStatus::Optimal);
    s.value(y)
}

#[test]
fn square_on_two_segments_worst_points() {
    let q = Quadratic::new(0.0, 0.0, 1.0);
    for at in [2.5, 7.5] {
        let y = surrogate_at(q, 10.0, 2, at);
        assert!((y - at * at - 6.25).abs() < 1e-9);
    }
}

#[test]
fn square_on_ten_segments() {
    let q = Quadratic::new(0.0, 0.0, 1.0);
    let y = surrogate_at(q, 10.0, 10, 0.5);
    assert!((y - 0.25 - 0.25).abs() < 1e-9);
}

#[test]
fn affine_is_exact() {
    let q = Quadratic::new(3.0, 0.7, 0.0);
    for n in [1, 3, 8] {
        for at in [0.0, 1.3, 9.9] {
            assert!((surrogate_at(q, 10.0, n, at) - q.eval(at)).abs() < 1e-9);
        }
    }
}

#[test]
fn concave_is_rejected() {
    let mut m = MilpModel::new("pwl");
    let x = m.continuous("x", 0.0, 1.0).unwrap();
    let err = pwl_convex(&mut m, x, Quadratic::new(0.0, 0.0, -1.0), 1.0, 4, "y").unwrap_err();
    assert!(matches!(err, ModelError::NotConvex(_)));
}

#[test]
fn general_pwl_hat_function() {
    for (at, expected) in [(1.5, 0.5), (1.0, 1.0), (0.0, 0.0), (2.0, 0.0)] {
        for sense in [1.0, -1.0] {
            let mut m = MilpModel::new("hat");
            let x = m.continuous("x", 0.0, 2.0).unwrap();
            let y = pwl_general(&mut m, x, &[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0], "y").unwrap();
            m.add_constraint(x, Relation::Eq, at, "pin").unwrap();
            m.set_objective(sense * y).unwrap();
            let s = solve_milp(&m, &SolveOptions::default()).unwrap();
            assert!((s.value(y) - expected).abs() < 1e-9);
        }
    }
}

#[test]
fn general_pwl_two_points_has_no_binaries() {
    let mut m = MilpModel::new("line");
    let x = m.continuous("x", 0.0, 4.0).unwrap();
    pwl_general(&mut m, x, &[0.0, 4.0], &[1.0, 9.0], "y").unwrap();
    assert_eq!(m.num_binaries(), 0);
}

#[test]
fn general_pwl_range_checked() {
    let mut m = MilpModel::new("range");
    let x = m.continuous("x", -1.0, 4.0).unwrap();
    let err = pwl_general(&mut m, x, &[0.0, 4.0], &[1.0, 9.0], "y").unwrap_err();
    assert!(matches!(err, ModelError::OutOfRange { .. }));
}

#[test]
fn indicator_forces_zero() {
    let mut m = MilpModel::new("ind");
    let f = m.binary("f").unwrap();
    let x = m.continuous("x", 0.0, 5.0).unwrap();
    bigm_indicator(&mut m, f, x, 5.0, "link").unwrap();
    m.add_constraint(f, Relation::Eq, 0.0, "off").unwrap();
    m.set_objective(-1.0 * x).unwrap();
    let s = solve_milp(&m, &SolveOptions::default()).unwrap();
    assert_eq!(s.value(x), 0.0);

    let mut m = MilpModel::new("ind");
    let f = m.binary("f").unwrap();
    let x = m.continuous("x", 0.0, 5.0).unwrap();
    bigm_indicator(&mut m, f, x, 5.0, "link").unwrap();
    m.set_objective(LinExpr::from(f) - 2.0 * x).unwrap();
    let s = solve_milp(&m, &SolveOptions::default()).unwrap();
    assert!((s.value(x) - 5.0).abs() < 1e-9);

    let mut m = MilpModel::new("ind");
    let f = m.binary("f").unwrap();
    let x = m.continuous("x", 0.0, 5.0).unwrap();
    assert!(matches!(
        bigm_indicator(&mut m, f, x, 2.5, "link"),
        Err(ModelError::BigMTooSmall { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn convex_surrogate_error_within_bound(
        a in -5.0f64..5.0,
        b in -3.0f64..3.0,
        c in 0.0f64..2.0,
        x_max in 0.5f64..50.0,
        n in 1usize..=32,
        t in 0.0f64..=1.0,
    ) {
        let q = Quadratic::new(a, b, c);
        let at = t * x_max;
        let y = surrogate_at(q, x_max, n, at);
        let bound = ConvexPwl::new(q, x_max, n).unwrap().error_bound();
        let err = y - q.eval(at);
        prop_assert!(err >= -1e-9 * (1.0 + y.abs()));
        prop_assert!(err <= bound + 1e-9 * (1.0 + y.abs()), "err {} bound {}", err, bound);
    }

    #[test]
    fn general_pwl_is_exact(
        values in proptest::collection::vec(-10.0f64..10.0, 2..7),
        t in 0.0f64..=1.0,
        maximize in any::<bool>(),
    ) {
        let bps: Vec<f64> = (0..values.len()).map(|i| i as f64 * 1.5).collect();
        let end = *bps.last().unwrap();
        let at = t * end;
        let k = ((at / 1.5).floor() as usize).min(values.len() - 2);
        let w = (at - bps[k]) / 1.5;
        let expected = values[k] + w * (values[k + 1] - values[k]);

        let mut m = MilpModel::new("general");
        let x = m.continuous("x", 0.0, end).unwrap();
        let y = pwl_general(&mut m, x, &bps, &values, "y").unwrap();
        m.add_constraint(x, Relation::Eq, at, "pin").unwrap();
        m.set_objective(if maximize { -1.0 * y } else { LinExpr::from(y) }).unwrap();
        let s = solve_milp(&m, &SolveOptions::default()).unwrap();
        prop_assert_eq!(s.status, MilpStatus::Optimal);
        prop_assert!((s.value(y) - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
    }
}
