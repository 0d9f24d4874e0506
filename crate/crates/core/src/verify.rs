//! Independent check of a dispatch solution against the case it solves.
//!
//! Everything is recomputed from the schedule alone: balances, device
//! couplings, storage, demand response, satisfaction and every cost.

use std::fmt;

use serde::Serialize;

use crate::carbon::{actual_emissions, carbon_cost, quota_total, tier_cost};
use crate::case::{CaseData, Carrier, Mechanism};
use crate::demand_response::{adjustment_bounds, decompose_loads, satisfaction_index, DrKind};
use crate::dispatch::{recomputed_objective, DeviceLimits, DispatchSolution};
use crate::scenario::ScenarioSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Largest violation found.
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Where the largest violation occurred.
    pub location: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}: residual {:.3e} (tolerance {:.3e}){}",
                if c.pass { "ok  " } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance,
                if c.location.is_empty() {
                    String::new()
                } else {
                    format!(" at {}", c.location)
                }
            )?;
        }
        Ok(())
    }
}

/// Tracks the worst residual of one named check.
struct Tracker {
    name: String,
    tolerance: f64,
    worst: f64,
    location: String,
}

impl Tracker {
    fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            tolerance,
            worst: 0.0,
            location: String::new(),
        }
    }

    fn see(&mut self, residual: f64, location: impl FnOnce() -> String) {
        let r = if residual.is_nan() { f64::INFINITY } else { residual };
        if r > self.worst {
            self.worst = r;
            self.location = location();
        }
    }

    fn finish(self) -> Check {
        Check {
            pass: self.worst <= self.tolerance,
            name: self.name,
            residual: self.worst,
            tolerance: self.tolerance,
            location: self.location,
        }
    }
}

/// Amount by which `x` leaves `[lo, hi]`.
fn outside(x: f64, lo: f64, hi: f64) -> f64 {
    (lo - x).max(x - hi).max(0.0)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

pub fn verify_solution(
    case: &CaseData,
    scenario: &ScenarioSpec,
    sol: &DispatchSolution,
) -> VerificationReport {
    let mut checks = Vec::new();
    let s = &sol.schedule;
    let periods = case.periods();
    let h = case.step();
    let limits = DeviceLimits::from_case(case);

    let shape_ok = s.periods() == periods && (sol.step_hours - h).abs() <= 1e-12;
    let mut shape = Tracker::new("horizon", 0.0);
    if !shape_ok {
        shape.see(f64::INFINITY, || format!("{} periods", s.periods()));
        checks.push(shape.finish());
        return VerificationReport {
            checks,
            pass: false,
        };
    }
    checks.push(shape.finish());

    let peak = |c: Carrier| case.loads.get(c).iter().copied().fold(1.0, f64::max);
    let flow_scale = [
        peak(Carrier::Electric),
        peak(Carrier::Gas),
        peak(Carrier::Heat),
        limits.e_buy_max,
        limits.g_buy_max,
        limits.gt_max,
        limits.gb_max,
        limits.p2g_max,
    ]
    .into_iter()
    .fold(1.0, f64::max);
    let tol = 1e-6 * flow_scale;

    // Balances, with the adjusted load rebuilt from the DR deltas.
    let dr_delta = |c: Carrier, t: usize| s.dr.get(c).shift(t) + s.dr.get(c).subst(t);
    let net = |c: Carrier, t: usize| s.storage.get(c).discharge[t] - s.storage.get(c).charge[t];
    for c in Carrier::ALL {
        let mut tr = Tracker::new(format!("{c} balance"), 1e-6 * peak(c));
        for t in 0..periods {
            let load = case.loads.get(c)[t] + dr_delta(c, t);
            let supply = match c {
                Carrier::Electric => s.e_buy[t] + s.wind[t] + s.gt_e[t] - s.p2g_in[t],
                Carrier::Gas => s.g_buy[t] + s.p2g_gas[t] - s.gt_gas[t] - s.gb_gas[t],
                Carrier::Heat => s.gt_h[t] + s.gb_h[t],
            } + net(c, t);
            tr.see((supply - load).abs(), || format!("period {t}"));
        }
        checks.push(tr.finish());
        let mut adj = Tracker::new(format!("{c} adjusted load"), tol);
        for t in 0..periods {
            let load = case.loads.get(c)[t] + dr_delta(c, t);
            adj.see((load - s.adjusted_load.get(c)[t]).abs(), || format!("period {t}"));
        }
        checks.push(adj.finish());
    }

    let mut bounds = Tracker::new("flow bounds", tol);
    for t in 0..periods {
        let at = || format!("period {t}");
        bounds.see(outside(s.e_buy[t], 0.0, limits.e_buy_max), || format!("e_buy {}", at()));
        bounds.see(outside(s.g_buy[t], 0.0, limits.g_buy_max), || format!("g_buy {}", at()));
        bounds.see(outside(s.wind[t], 0.0, limits.wind[t]), || format!("wind {}", at()));
        bounds.see(
            outside(s.p2g_in[t], limits.p2g_min.min(limits.p2g_max), limits.p2g_max),
            || format!("p2g {}", at()),
        );
        bounds.see(outside(s.gt_gas[t], limits.gt_min, limits.gt_max), || {
            format!("gt {}", at())
        });
        bounds.see(
            outside(s.gb_gas[t], limits.gb_min.min(limits.gb_max), limits.gb_max),
            || format!("gb {}", at()),
        );
        for v in [s.gt_e[t], s.gt_h[t]] {
            bounds.see(-v, || format!("chp output {}", at()));
        }
    }
    checks.push(bounds.finish());

    let mut coupling = Tracker::new("device coupling", tol);
    for t in 0..periods {
        let at = || format!("period {t}");
        coupling.see((s.p2g_gas[t] - limits.p2g_eff * s.p2g_in[t]).abs(), || {
            format!("p2g {}", at())
        });
        coupling.see((s.gb_h[t] - limits.gb_eff * s.gb_gas[t]).abs(), || format!("gb {}", at()));
        let e_fuel = limits.eps_e * s.gt_gas[t];
        let h_fuel = limits.eps_h * s.gt_gas[t];
        if case.chp.extraction_mode {
            coupling.see(s.gt_e[t] - e_fuel, || format!("chp electric {}", at()));
            coupling.see(s.gt_h[t] - h_fuel, || format!("chp heat {}", at()));
        } else {
            coupling.see((s.gt_e[t] - e_fuel).abs(), || format!("chp electric {}", at()));
            coupling.see((s.gt_h[t] - h_fuel).abs(), || format!("chp heat {}", at()));
        }
        coupling.see(case.chp.omega_min * s.gt_e[t] - s.gt_h[t], || {
            format!("chp ratio min {}", at())
        });
        coupling.see(s.gt_h[t] - case.chp.omega_max * s.gt_e[t], || {
            format!("chp ratio max {}", at())
        });
    }
    checks.push(coupling.finish());

    let mut ramp = Tracker::new("ramp limits", tol);
    for t in 1..periods {
        for (name, x, limit) in [
            ("p2g", &s.p2g_in, limits.p2g_ramp),
            ("gt", &s.gt_gas, limits.gt_ramp),
            ("gb", &s.gb_gas, limits.gb_ramp),
        ] {
            ramp.see((x[t] - x[t - 1]).abs() - limit, || format!("{name} period {t}"));
        }
    }
    checks.push(ramp.finish());

    let mut soc_rec = Tracker::new("storage recursion", tol);
    let mut soc_term = Tracker::new("storage terminal", tol);
    let mut soc_bounds = Tracker::new("storage bounds", tol);
    let mut exclusive = Tracker::new("storage exclusivity", tol);
    for c in Carrier::ALL {
        let st = s.storage.get(c);
        match case.storage(c) {
            Some(p) => {
                let mut prev = p.soc_initial_kwh();
                for t in 0..periods {
                    let expect =
                        prev + p.charge_eff * st.charge[t] * h - st.discharge[t] * h / p.discharge_eff;
                    soc_rec.see((st.soc[t] - expect).abs(), || format!("{c} period {t}"));
                    soc_bounds.see(
                        outside(
                            st.soc[t],
                            p.soc_min_frac * p.capacity_kwh,
                            p.soc_max_frac * p.capacity_kwh,
                        ),
                        || format!("{c} soc period {t}"),
                    );
                    for v in [st.charge[t], st.discharge[t]] {
                        soc_bounds.see(outside(v, 0.0, p.power_limit_kw()), || {
                            format!("{c} power period {t}")
                        });
                    }
                    exclusive.see(st.charge[t].min(st.discharge[t]), || format!("{c} period {t}"));
                    prev = st.soc[t];
                }
                soc_term.see((prev - p.soc_initial_kwh()).abs(), || c.to_string());
            }
            None => {
                for t in 0..periods {
                    let v = st.charge[t].abs().max(st.discharge[t].abs());
                    soc_bounds.see(v, || format!("{c} has no storage"));
                }
            }
        }
    }
    checks.extend([
        soc_rec.finish(),
        soc_term.finish(),
        soc_bounds.finish(),
        exclusive.finish(),
    ]);

    checks.extend(verify_dr(case, scenario, sol, tol));

    // Costs and emissions.
    let cost_tol = |x: f64| 1e-6 * (1.0 + x.abs());
    let mut purchase = 0.0;
    for t in 0..periods {
        purchase += (case.tariffs.electricity[t] * s.e_buy[t]
            + case.tariffs.gas_per_kwh(t) * s.g_buy[t])
            * h;
    }
    let mut pc = Tracker::new("purchase cost", cost_tol(purchase));
    pc.see((purchase - sol.costs.purchase).abs(), String::new);
    checks.push(pc.finish());

    let mut dr_cost = 0.0;
    for c in Carrier::ALL {
        let d = s.dr.get(c);
        for t in 0..periods {
            dr_cost += (case.dr.mu_shift * (d.shift(t).abs())
                + case.dr.mu_subst * (d.subst(t).abs()))
                * h;
        }
    }
    let mut dc = Tracker::new("dr cost", cost_tol(dr_cost) + tol * h);
    dc.see((dr_cost - sol.costs.dr).abs(), String::new);
    checks.push(dc.finish());

    let inputs = s.emission_inputs(h);
    let quota = quota_total(&inputs, &case.carbon);
    let actual = actual_emissions(&inputs, &case.carbon);
    let mut acc = Tracker::new("emission account", 1e-9 * (1.0 + actual.total.abs()));
    acc.see((quota.total - sol.emissions.quota.total).abs(), || "quota".into());
    acc.see((actual.total - sol.emissions.actual.total).abs(), || "actual".into());
    acc.see(sol.emissions.identity_residual(), || "exact identities".into());
    acc.see(sol.emissions_surrogate.identity_residual(), || "surrogate identities".into());
    checks.push(acc.finish());

    // The surrogate lies above the exact curve by at most the PWL bound.
    let gap = sol.emissions_surrogate.actual.total - sol.emissions.actual.total;
    let eps = 1e-9 * (1.0 + actual.total.abs());
    let mut pwl = Tracker::new("pwl carbon gap", sol.pwl_error_bound + eps);
    pwl.see(gap.max(0.0), || format!("gap {gap:.6} kg"));
    pwl.see(if gap < -eps { f64::INFINITY } else { 0.0 }, || "surrogate below exact".into());
    checks.push(pwl.finish());

    let expect_carbon = carbon_cost(scenario.mechanism, sol.emissions_surrogate.share, &case.carbon);
    let expect_exact = carbon_cost(scenario.mechanism, sol.emissions.share, &case.carbon);
    let mut cc = Tracker::new("carbon cost", cost_tol(expect_carbon));
    cc.see((expect_carbon - sol.costs.carbon).abs(), || "surrogate".into());
    cc.see((expect_exact - sol.costs.carbon_exact).abs(), || "exact".into());
    if scenario.mechanism == Mechanism::Tiered {
        let direct = tier_cost(sol.emissions_surrogate.share, &case.carbon);
        cc.see((direct - sol.costs.carbon).abs(), || "tier evaluator".into());
    }
    checks.push(cc.finish());

    let c = &sol.costs;
    let sum = c.purchase + c.carbon + c.dr + c.maintenance;
    let mut bd = Tracker::new("cost breakdown", 1e-6);
    bd.see(rel(sum, c.total), String::new);
    checks.push(bd.finish());

    let mut obj = Tracker::new("objective consistency", 1e-6);
    obj.see(rel(recomputed_objective(sol), sol.solver.objective), || {
        format!(
            "solver {:.6} vs recomputed {:.6}",
            sol.solver.objective,
            recomputed_objective(sol)
        )
    });
    checks.push(obj.finish());

    let pass = checks.iter().all(|c| c.pass);
    VerificationReport { checks, pass }
}

fn verify_dr(
    case: &CaseData,
    scenario: &ScenarioSpec,
    sol: &DispatchSolution,
    tol: f64,
) -> Vec<Check> {
    let s = &sol.schedule;
    let periods = case.periods();
    let dr = &case.dr;
    let decomposition = decompose_loads(case);
    let mut bounds = Tracker::new("dr bounds", tol);
    let mut exclusive = Tracker::new("dr exclusivity", tol);
    let mut net_zero = Tracker::new(
        "dr shift net zero",
        1e-6 * Carrier::ALL
            .iter()
            .map(|&c| case.loads.get(c).iter().sum::<f64>())
            .fold(1.0, f64::max),
    );
    let mut subst_balance = Tracker::new("dr substitution balance", tol);

    for c in Carrier::ALL {
        let d = s.dr.get(c);
        for kind in [DrKind::Shift, DrKind::Substitute] {
            let (enabled, base, configured, p_in, p_out) = match kind {
                DrKind::Shift => (
                    scenario.dr_shift && *dr.shift_enabled.get(c),
                    decomposition.shiftable.get(c),
                    dr.shift_bounds.get(&c),
                    &d.shift_in,
                    &d.shift_out,
                ),
                DrKind::Substitute => (
                    scenario.dr_substitute && *dr.subst_enabled.get(c),
                    decomposition.substitutable.get(c),
                    dr.subst_bounds.get(&c),
                    &d.subst_in,
                    &d.subst_out,
                ),
            };
            let limits = if enabled {
                adjustment_bounds(configured, base, c, kind)
                    .unwrap_or_else(|_| vec![(0.0, 0.0); periods])
            } else {
                vec![(0.0, 0.0); periods]
            };
            for t in 0..periods {
                let at = || format!("{c} {} period {t}", kind.as_str());
                let delta = p_in[t] - p_out[t];
                bounds.see(outside(delta, limits[t].0, limits[t].1), at);
                bounds.see((-p_in[t]).max(-p_out[t]), at);
                exclusive.see(p_in[t].min(p_out[t]), at);
            }
            let net: f64 = (0..periods).map(|t| p_in[t] - p_out[t]).sum();
            if kind == DrKind::Shift || dr.literal_eq2 {
                net_zero.see(net.abs(), || format!("{c} {}", kind.as_str()));
            }
        }
    }
    if !dr.literal_eq2 {
        for t in 0..periods {
            let sum: f64 = Carrier::ALL
                .iter()
                .map(|&c| dr.subst_conversion.get(c) * s.dr.get(c).subst(t))
                .sum();
            subst_balance.see(sum.abs(), || format!("period {t}"));
        }
    }

    let mut sat = Tracker::new("satisfaction index", 1e-9);
    match satisfaction_index(&case.loads, &s.adjusted_load) {
        Ok(i) => {
            let floor = if scenario.has_dr() { dr.satisfaction_min } else { 1.0 };
            sat.see(floor - i, || format!("I = {i:.6}"));
            sat.see((i - sol.satisfaction).abs(), || "reported value".into());
        }
        Err(e) => sat.see(f64::INFINITY, || e.to_string()),
    }

    vec![
        bounds.finish(),
        exclusive.finish(),
        net_zero.finish(),
        subst_balance.finish(),
        sat.finish(),
    ]
}
