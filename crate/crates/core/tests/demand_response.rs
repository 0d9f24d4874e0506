mod common;

use common::{spec, truncated, with_loads};
use ies_dispatch::case::{AdjustBounds, PerCarrier};
use ies_dispatch::demand_response::DrKind;
use ies_dispatch::{build_dr_blocks, decompose_loads, satisfaction_index, Carrier, Mechanism};
use ies_milp::{solve_milp, LinExpr, MilpModel, MilpStatus, Relation, SolveOptions};
use proptest::prelude::*;

fn flat(e: f64, g: f64, h: f64, periods: usize) -> PerCarrier<Vec<f64>> {
    PerCarrier {
        electric: vec![e; periods],
        gas: vec![g; periods],
        heat: vec![h; periods],
    }
}

#[test]
fn decomposition_examples() {
    let mut case = with_loads(flat(100.0, 0.0, 100.0, 2), vec![0.0; 2]);
    let d = decompose_loads(&case);
    assert_eq!(
        (d.fixed.electric[0], d.shiftable.electric[0], d.substitutable.electric[0]),
        (85.0, 10.0, 5.0)
    );
    assert_eq!(
        (d.fixed.gas[1], d.shiftable.gas[1], d.substitutable.gas[1]),
        (0.0, 0.0, 0.0)
    );

    case.dr.shiftable_fraction = PerCarrier::splat(0.0);
    case.dr.substitutable_fraction = PerCarrier::splat(0.0);
    let d = decompose_loads(&case);
    assert_eq!(d.fixed.heat, vec![100.0, 100.0]);
    assert!(d.shiftable.heat.iter().chain(&d.substitutable.heat).all(|&x| x == 0.0));

    let loads: Vec<f64> = (1..200).map(|i| f64::from(i) * 0.37 + 0.1).collect();
    let mut case = with_loads(
        PerCarrier { electric: loads.clone(), gas: loads.clone(), heat: loads.clone() },
        vec![0.0; loads.len()],
    );
    case.dr.shiftable_fraction = PerCarrier::splat(0.7);
    case.dr.substitutable_fraction = PerCarrier::splat(0.3);
    let d = decompose_loads(&case);
    for (t, &p) in loads.iter().enumerate() {
        assert!(d.fixed.electric[t] >= 0.0 && d.fixed.electric[t] <= 1e-12 * p);
        assert!(d.substitutable.electric[t] >= 0.0);
        assert_eq!(d.total(Carrier::Electric, t), p);
    }
}

proptest! {
    #[test]
    fn decomposition_sums_back_exactly(
        loads in prop::collection::vec(0.0f64..5000.0, 1..24),
        p in 0.0f64..=1.0,
        share in 0.0f64..=1.0,
    ) {
        let c = share * (1.0 - p);
        let n = loads.len();
        let mut case = with_loads(
            PerCarrier { electric: loads.clone(), gas: loads.iter().map(|x| x * 0.3).collect(), heat: loads.clone() },
            vec![0.0; n],
        );
        case.dr.shiftable_fraction = PerCarrier::splat(p);
        case.dr.substitutable_fraction = PerCarrier::splat(c);
        let d = decompose_loads(&case);
        for carrier in Carrier::ALL {
            for t in 0..n {
                let parts = [d.fixed.get(carrier)[t], d.shiftable.get(carrier)[t], d.substitutable.get(carrier)[t]];
                prop_assert!(parts.iter().all(|&x| x >= 0.0), "{parts:?}");
                prop_assert_eq!(d.total(carrier, t), case.loads.get(carrier)[t]);
            }
        }
    }
}

#[test]
fn disabled_dr_adds_nothing() {
    let case = truncated(4);
    let mut model = MilpModel::new("dr");
    let d = decompose_loads(&case);
    let map = build_dr_blocks(&case, &spec("x", Mechanism::Tiered, true, false, false), &d, &mut model).unwrap();
    assert!(map.is_empty());
    assert_eq!(model.num_variables(), 0);
    for c in Carrier::ALL {
        for (t, e) in map.adjusted.get(c).iter().enumerate() {
            assert!(e.is_constant());
            assert_eq!(e.constant_term(), case.loads.get(c)[t]);
        }
    }
}

/// Optimizes `sense * ΔP(0)` over a two-period electric shift block.
fn two_period_shift(sense: f64) -> (f64, f64) {
    let mut case = with_loads(flat(100.0, 50.0, 80.0, 2), vec![0.0; 2]);
    case.dr.shift_enabled = PerCarrier { electric: true, gas: false, heat: false };
    case.dr.shift_bounds.insert(Carrier::Electric, AdjustBounds { min: -10.0, max: 10.0 });
    let mut model = MilpModel::new("shift");
    let d = decompose_loads(&case);
    let map = build_dr_blocks(&case, &spec("x", Mechanism::None, false, true, false), &d, &mut model).unwrap();
    let b = map.block(Carrier::Electric, DrKind::Shift).unwrap();
    model.set_objective(b.delta(0).scaled(sense)).unwrap();
    let sol = solve_milp(&model, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, MilpStatus::Optimal);
    (b.delta(0).eval(&sol.values), b.delta(1).eval(&sol.values))
}

#[test]
fn two_period_shift_is_antisymmetric() {
    let (d0, d1) = two_period_shift(1.0);
    assert!((d0 + 10.0).abs() < 1e-9 && (d1 - 10.0).abs() < 1e-9, "{d0} {d1}");
    let (d0, d1) = two_period_shift(-1.0);
    assert!((d0 - 10.0).abs() < 1e-9 && (d1 + 10.0).abs() < 1e-9, "{d0} {d1}");
}

/// Fixes `ΔP(0) = target` on a one-period substitution block with the
/// given bounds and reports whether that is feasible.
fn attainable(lo: f64, hi: f64, target: f64) -> bool {
    let mut case = with_loads(flat(100.0, 50.0, 80.0, 1), vec![0.0]);
    case.dr.subst_enabled = PerCarrier { electric: true, gas: false, heat: false };
    case.dr.subst_bounds.insert(Carrier::Electric, AdjustBounds { min: lo, max: hi });
    // Only the block's own limits are under test.
    case.dr.literal_eq2 = true;
    case.dr.satisfaction_min = 0.0;
    let mut model = MilpModel::new("bigm");
    let d = decompose_loads(&case);
    let map = build_dr_blocks(&case, &spec("x", Mechanism::None, false, false, true), &d, &mut model).unwrap();
    let b = map.block(Carrier::Electric, DrKind::Substitute).unwrap();
    // The horizon net-zero row would pin a one-period block to zero, so
    // copy the model without it.
    let mut relaxed = MilpModel::new("bigm-free");
    for v in model.variables() {
        relaxed.add_variable(v.kind, v.lower, v.upper, v.name.clone()).unwrap();
    }
    for c in model.constraints() {
        if c.name != "dr_subst_net_zero[electric]" {
            relaxed.add_constraint(c.expr.clone(), c.relation, c.rhs, c.name.clone()).unwrap();
        }
    }
    assert_eq!(relaxed.num_constraints() + 1, model.num_constraints());
    relaxed.add_constraint(b.delta(0), Relation::Eq, target, "fix").unwrap();
    let sol = solve_milp(&relaxed, &SolveOptions::default()).unwrap();
    if sol.status != MilpStatus::Optimal {
        return false;
    }
    // Exclusivity: one direction at a time and |Δ| = in + out.
    let (pi, po) = (sol.value(b.p_in[0]), sol.value(b.p_out[0]));
    let (vi, vo) = (sol.value(b.v_in[0]), sol.value(b.v_out[0]));
    assert!(vi * vo == 0.0 && (vi + vo - 1.0).abs() < 1e-9);
    assert!((b.magnitude(0).eval(&sol.values) - (pi - po).abs()).abs() < 1e-9);
    true
}

#[test]
fn big_m_reaches_the_whole_interval() {
    for &(lo, hi) in &[(-3.0, 7.0), (-8.0, 2.0), (0.0, 5.0), (-4.0, 0.0), (1.5, 6.0)] {
        for i in 0..=20 {
            let target = lo + (hi - lo) * f64::from(i) / 20.0;
            assert!(attainable(lo, hi, target), "[{lo}, {hi}] misses {target}");
        }
        assert!(!attainable(lo, hi, hi + 0.01), "[{lo}, {hi}] exceeds max");
        assert!(!attainable(lo, hi, lo - 0.01), "[{lo}, {hi}] exceeds min");
    }
}

#[test]
fn satisfaction_values() {
    let original = flat(100.0, 40.0, 60.0, 4);
    assert_eq!(satisfaction_index(&original, &original).unwrap(), 1.0);

    // Ten percent of the electric energy moved between periods.
    let mut adjusted = original.clone();
    adjusted.electric[0] -= 20.0;
    adjusted.electric[1] += 20.0;
    let i = satisfaction_index(&original, &adjusted).unwrap();
    assert!((i - (1.0 - 0.10 / 3.0)).abs() < 1e-12, "{i}");
    assert!((i - 0.9667).abs() < 1e-4);

    let scaled = |v: &Vec<f64>| -> Vec<f64> {
        let shift = 0.45 * v.iter().sum::<f64>() / 2.0;
        let mut w = v.clone();
        w[0] -= shift;
        w[1] += shift;
        w
    };
    let every = original.map(|_, v| scaled(v));
    let i = satisfaction_index(&original, &every).unwrap();
    assert!((i - 0.55).abs() < 1e-12, "{i}");
    assert!(i < 0.85);
}

#[test]
fn idle_carrier_counts_as_satisfied() {
    let original = flat(100.0, 0.0, 60.0, 2);
    assert_eq!(satisfaction_index(&original, &original).unwrap(), 1.0);
    let mut bad = original.clone();
    bad.gas[0] = 1.0;
    assert!(satisfaction_index(&original, &bad).is_err());
    let short = flat(100.0, 0.0, 60.0, 3);
    assert!(satisfaction_index(&original, &short).is_err());
}

#[test]
fn satisfaction_row_caps_total_deviation() {
    // Shift everything it can; the row must stop it at I = I_min.
    let mut case = with_loads(flat(100.0, 50.0, 80.0, 2), vec![0.0; 2]);
    case.dr.shift_bounds.insert(Carrier::Electric, AdjustBounds { min: -100.0, max: 100.0 });
    case.dr.shift_enabled = PerCarrier { electric: true, gas: false, heat: false };
    let mut model = MilpModel::new("sat");
    let d = decompose_loads(&case);
    let map = build_dr_blocks(&case, &spec("x", Mechanism::None, false, true, false), &d, &mut model).unwrap();
    let b = map.block(Carrier::Electric, DrKind::Shift).unwrap();
    model.set_objective(LinExpr::from(b.p_in[0]).scaled(-1.0)).unwrap();
    let sol = solve_milp(&model, &SolveOptions::default()).unwrap();
    let adjusted = map.adjusted.map(|_, v| v.iter().map(|e| e.eval(&sol.values)).collect());
    let i = satisfaction_index(&case.loads, &adjusted).unwrap();
    assert!((i - case.dr.satisfaction_min).abs() < 1e-9, "{i}");
}
