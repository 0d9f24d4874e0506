use ies_dispatch::carbon::{carbon_cost, tier_cost_with, ShareRange};
use ies_dispatch::case::{CarbonPolicy, QuadCoeffs};
use ies_dispatch::{
    actual_emissions, emission_account, encode_carbon_cost, quota_total, tier_cost,
    traditional_cost, CaseData, EmissionInputs, Mechanism,
};
use ies_milp::{solve_milp, LinExpr, MilpModel, MilpStatus, SolveOptions};
use proptest::prelude::*;

const T: usize = 24;

fn policy() -> CarbonPolicy {
    CaseData::default_case().carbon
}

/// A policy with the printed prices and a tier width of 2000 kg.
fn printed() -> CarbonPolicy {
    let mut p = policy();
    p.lambda_base = 0.251;
    p.alpha_growth = 0.25;
    p.interval_d = 2000.0;
    p.extra_tiers = 0;
    p
}

struct Flows {
    e_buy: Vec<f64>,
    gt_e: Vec<f64>,
    gt_h: Vec<f64>,
    gb_h: Vec<f64>,
    gas_load: Vec<f64>,
    p2g_gas: Vec<f64>,
}

impl Flows {
    fn zero() -> Self {
        Self {
            e_buy: vec![0.0; T],
            gt_e: vec![0.0; T],
            gt_h: vec![0.0; T],
            gb_h: vec![0.0; T],
            gas_load: vec![0.0; T],
            p2g_gas: vec![0.0; T],
        }
    }

    fn inputs(&self) -> EmissionInputs<'_> {
        EmissionInputs {
            step_hours: 1.0,
            e_buy: &self.e_buy,
            gt_e: &self.gt_e,
            gt_h: &self.gt_h,
            gb_h: &self.gb_h,
            gas_load: &self.gas_load,
            p2g_gas: &self.p2g_gas,
        }
    }
}

#[test]
fn quota_examples() {
    let p = policy();
    let mut f = Flows::zero();
    let q = quota_total(&f.inputs(), &p);
    assert_eq!((q.e_buy, q.gt, q.gb, q.gas_load, q.total), (0.0, 0.0, 0.0, 0.0, 0.0));

    f.e_buy = vec![100.0; T];
    f.gb_h = vec![50.0; T];
    let q = quota_total(&f.inputs(), &p);
    assert!((q.e_buy - 1915.2).abs() < 1e-9, "{}", q.e_buy);
    assert!((q.gb - 462.0).abs() < 1e-9, "{}", q.gb);
    assert_eq!(q.total, q.e_buy + q.gt + q.gb + q.gas_load);
}

#[test]
fn gas_turbine_quota_converts_electricity_to_heat() {
    let p = policy();
    let mut f = Flows::zero();
    f.gt_e = vec![10.0; T];
    f.gt_h = vec![20.0; T];
    let q = quota_total(&f.inputs(), &p);
    let expected = p.sigma_h * (p.sigma_eh * 10.0 + 20.0) * T as f64;
    assert!((q.gt - expected).abs() < 1e-9);
}

#[test]
fn actual_emission_examples() {
    let mut p = policy();
    p.coal_quad = QuadCoeffs { a: 0.0, b: 1.0, c: 0.0 };
    p.gas_quad = QuadCoeffs { a: 0.0, b: 0.0, c: 0.0 };
    p.theta_p2g = 0.2;
    let mut f = Flows::zero();
    assert_eq!(actual_emissions(&f.inputs(), &p).total, 0.0);

    f.e_buy = vec![10.0; T];
    f.p2g_gas = vec![100.0; T];
    let a = actual_emissions(&f.inputs(), &p);
    assert!((a.e_buy - 240.0).abs() < 1e-9);
    assert!((a.p2g - 480.0).abs() < 1e-9);
    assert!((a.total - (240.0 - 480.0)).abs() < 1e-9);
}

#[test]
fn account_identities_hold() {
    let p = policy();
    let mut f = Flows::zero();
    for t in 0..T {
        let x = t as f64;
        f.e_buy[t] = 300.0 + 10.0 * x;
        f.gt_e[t] = 100.0 + x;
        f.gt_h[t] = 260.0 + 2.0 * x;
        f.gb_h[t] = 400.0 - 5.0 * x;
        f.gas_load[t] = 200.0;
        f.p2g_gas[t] = 30.0;
    }
    let acc = emission_account(&f.inputs(), &p);
    assert!(acc.identity_residual() <= 1e-9 * acc.actual.total.abs());
    assert_eq!(acc.share, acc.actual.total - acc.quota.total);
}

#[test]
fn tier_cost_spot_values() {
    let p = printed();
    for (e, c) in [(0.0, 0.0), (2000.0, 502.0), (5000.0, 1506.0), (-1000.0, -251.0)] {
        assert!((tier_cost(e, &p) - c).abs() < 1e-9, "E = {e}: {}", tier_cost(e, &p));
    }
    for (e, c) in [(0.0, 0.0), (5000.0, 1255.0), (-1000.0, -251.0)] {
        assert!((traditional_cost(e, &p) - c).abs() < 1e-9);
    }
    assert_eq!(carbon_cost(Mechanism::None, 5000.0, &p), 0.0);
}

#[test]
fn tier_cost_is_continuous_at_the_knees() {
    let p = printed();
    for k in 1..=5 {
        let e = k as f64 * p.interval_d;
        let left = tier_cost(e.next_down(), &p);
        let right = tier_cost(e.next_up(), &p);
        assert!((left - right).abs() <= 1e-9, "knee {k}: {left} vs {right}");
    }
}

#[test]
fn extra_tiers_extend_the_staircase() {
    let mut p = printed();
    p.extra_tiers = 2;
    let d = p.interval_d;
    // Slope in tier 7 is λ(1 + 7α).
    let slope = (tier_cost(7.5 * d, &p) - tier_cost(7.25 * d, &p)) / (0.25 * d);
    assert!((slope - p.lambda_base * (1.0 + 7.0 * p.alpha_growth)).abs() < 1e-9);
    assert!((tier_cost(6.0 * d - 1e-7, &p) - tier_cost(6.0 * d + 1e-7, &p)).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tier_cost_scales_with_lambda(e in -5000.0f64..20000.0, c in 0.1f64..10.0) {
        let a = tier_cost_with(e, 0.251 * c, 0.25, 2000.0, 6);
        let b = c * tier_cost_with(e, 0.251, 0.25, 2000.0, 6);
        prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
    }
}

#[test]
fn tier_cost_sweep_dominates_and_increases() {
    let p = printed();
    let mut prev = f64::NEG_INFINITY;
    for i in 0..10_000 {
        let e = -2000.0 + 16_000.0 * f64::from(i) / 9_999.0;
        let c = tier_cost(e, &p);
        assert!(c > prev, "not increasing at {e}");
        prev = c;
        if e >= 0.0 {
            let base = traditional_cost(e, &p);
            assert!(c >= base - 1e-9, "below λE at {e}");
            if e > p.interval_d + 1e-6 {
                assert!(c > base, "equal to λE past the first tier at {e}");
            } else {
                assert!((c - base).abs() < 1e-9);
            }
        }
    }
}

/// Minimizes the encoded cost with the share pinned to `share`.
fn encoded_cost(policy: &CarbonPolicy, mechanism: Mechanism, share: f64) -> f64 {
    let mut m = MilpModel::new("carbon");
    let range = ShareRange {
        quota_max: 8000.0,
        emission_max: 16000.0,
    };
    let enc = encode_carbon_cost(&mut m, policy, mechanism, &LinExpr::constant(share), range).unwrap();
    m.set_objective(enc.cost.clone()).unwrap();
    let sol = solve_milp(&m, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, MilpStatus::Optimal, "share {share}");
    enc.cost.eval(&sol.values)
}

#[test]
fn encoding_matches_evaluator_at_the_knees() {
    let p = printed();
    assert!((encoded_cost(&p, Mechanism::Tiered, 5000.0) - 1506.0).abs() < 1e-6);
    for k in 0..=6 {
        let e = k as f64 * p.interval_d;
        let c = encoded_cost(&p, Mechanism::Tiered, e);
        assert!((c - tier_cost(e, &p)).abs() < 1e-6, "knee {k}: {c}");
    }
    assert!((encoded_cost(&p, Mechanism::Traditional, 5000.0) - 1255.0).abs() < 1e-6);
}

#[test]
fn no_mechanism_encodes_nothing() {
    let mut m = MilpModel::new("none");
    let range = ShareRange {
        quota_max: 1.0,
        emission_max: 1.0,
    };
    let enc = encode_carbon_cost(&mut m, &printed(), Mechanism::None, &LinExpr::constant(3.0), range).unwrap();
    assert!(enc.share.is_none() && enc.cost.is_constant() && enc.cost.constant_term() == 0.0);
    assert_eq!(m.num_variables(), 0);
}

#[test]
fn unbounded_share_range_is_rejected() {
    let mut m = MilpModel::new("inf");
    let range = ShareRange {
        quota_max: 1.0,
        emission_max: f64::INFINITY,
    };
    assert!(encode_carbon_cost(&mut m, &printed(), Mechanism::Tiered, &LinExpr::new(), range).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn encoding_fidelity(share in -8000.0f64..16000.0) {
        let p = printed();
        let c = encoded_cost(&p, Mechanism::Tiered, share);
        prop_assert!((c - tier_cost(share, &p)).abs() < 1e-6, "{} vs {}", c, tier_cost(share, &p));
    }
}
