//! Assembly of the day-ahead dispatch MILP and extraction of its solution.

use std::time::Duration;

use ies_milp::{
    bigm_indicator, bigm_indicator_complement, pwl_convex_with, solve_lp, ConvexPwl, LinExpr,
    LpStatus, MilpModel, MilpSolution, MilpStatus, Relation, SolveOptions, SolverBackend, VarId,
};
use serde::{Serialize, Serializer};

use crate::carbon::{
    actual_emissions, actual_emissions_with, carbon_cost, encode_carbon_cost, quota_total,
    CarbonEncoding, EmissionAccount, EmissionInputs, ShareRange,
};
use crate::case::{CaseData, Carrier, ConverterKind, PerCarrier};
use crate::demand_response::{
    build_dr_blocks, decompose_loads, satisfaction_index, DrKind, DrVarMap, LoadDecomposition,
};
use crate::error::DispatchError;
use crate::scenario::ScenarioSpec;
use crate::verify::verify_solution;

/// Operating envelope of every device, derived from the case.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceLimits {
    pub p2g_max: f64,
    pub p2g_min: f64,
    pub p2g_eff: f64,
    pub p2g_ramp: f64,
    /// CHP gas input limits; the WHB rating caps the exhaust heat.
    pub gt_max: f64,
    pub gt_min: f64,
    pub gt_ramp: f64,
    /// Gas to electricity.
    pub eps_e: f64,
    /// Gas to useful heat through the WHB.
    pub eps_h: f64,
    pub gb_max: f64,
    pub gb_min: f64,
    pub gb_eff: f64,
    pub gb_ramp: f64,
    pub wind: Vec<f64>,
    pub e_buy_max: f64,
    pub g_buy_max: f64,
}

impl DeviceLimits {
    pub fn from_case(case: &CaseData) -> Self {
        let conv = |k| case.converter(k);
        let (p2g_max, p2g_min, p2g_eff, p2g_ramp) = match conv(ConverterKind::P2G) {
            Some(c) => (c.capacity_kw, c.min_output_kw, c.efficiency(Carrier::Gas), c.ramp_kw()),
            None => (0.0, 0.0, 0.0, 0.0),
        };
        let (gt_max, gt_min, gt_ramp, eps_e, eps_h) =
            match (conv(ConverterKind::GT), conv(ConverterKind::WHB)) {
                (Some(gt), Some(whb)) => {
                    let exhaust = gt.efficiency(Carrier::Heat);
                    let recovered = whb.efficiency(Carrier::Heat);
                    // WHB limits apply to the exhaust heat it receives.
                    let gt_max = gt.capacity_kw.min(whb.capacity_kw / exhaust);
                    let gt_min = gt.min_output_kw.max(whb.min_output_kw / exhaust);
                    let ramp = gt.ramp_kw().min(whb.ramp_kw() / exhaust);
                    (gt_max, gt_min.min(gt_max), ramp, gt.efficiency(Carrier::Electric), exhaust * recovered)
                }
                _ => (0.0, 0.0, 0.0, 0.0, 0.0),
            };
        let (gb_max, gb_min, gb_eff, gb_ramp) = match conv(ConverterKind::GB) {
            Some(c) => (c.capacity_kw, c.min_output_kw, c.efficiency(Carrier::Heat), c.ramp_kw()),
            None => (0.0, 0.0, 0.0, 0.0),
        };
        Self {
            p2g_max,
            p2g_min,
            p2g_eff,
            p2g_ramp,
            gt_max,
            gt_min,
            gt_ramp,
            eps_e,
            eps_h,
            gb_max,
            gb_min,
            gb_eff,
            gb_ramp,
            wind: (0..case.periods()).map(|t| case.wind.available(t)).collect(),
            e_buy_max: case.purchase_caps.electricity_kw,
            g_buy_max: case.purchase_caps.gas_kw,
        }
    }

    /// Largest combined useful output of the gas units.
    pub fn gas_unit_output_max(&self) -> f64 {
        (self.eps_e + self.eps_h) * self.gt_max + self.gb_eff * self.gb_max
    }
}

/// The two piecewise-linear emission curves of a case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionCurves {
    pub coal: ConvexPwl,
    pub gas: ConvexPwl,
}

impl EmissionCurves {
    pub fn from_case(case: &CaseData, limits: &DeviceLimits) -> Result<Self, DispatchError> {
        let n = case.carbon.pwl_segments;
        // A zero-width domain still needs a valid interpolant.
        let coal = ConvexPwl::new(case.carbon.coal_quad.as_quadratic(), limits.e_buy_max.max(1.0), n)?;
        let gas = ConvexPwl::new(
            case.carbon.gas_quad.as_quadratic(),
            limits.gas_unit_output_max().max(1.0),
            n,
        )?;
        Ok(Self { coal, gas })
    }

    /// Bound on surrogate minus exact emissions over the horizon, kg.
    pub fn error_bound(&self, periods: usize, step_hours: f64) -> f64 {
        (self.coal.error_bound() + self.gas.error_bound()) * periods as f64 * step_hours
    }
}

#[derive(Debug, Clone)]
pub struct StorageVars {
    pub charge: Vec<VarId>,
    pub discharge: Vec<VarId>,
    /// Stored energy at the end of each period.
    pub soc: Vec<VarId>,
    /// 1 while charging.
    pub charging: Vec<VarId>,
}

/// Handles to every model variable and cost expression.
#[derive(Debug, Clone)]
pub struct VarMap {
    pub e_buy: Vec<VarId>,
    pub g_buy: Vec<VarId>,
    pub wind: Vec<VarId>,
    pub p2g_in: Vec<VarId>,
    pub gt_gas: Vec<VarId>,
    pub gt_e: Vec<VarId>,
    pub gt_h: Vec<VarId>,
    pub gb_gas: Vec<VarId>,
    /// Combined useful output of GT and GB.
    pub gas_unit_out: Vec<VarId>,
    pub storage: PerCarrier<Option<StorageVars>>,
    pub dr: DrVarMap,
    /// Surrogate emissions per period, present when carbon is charged.
    pub coal_emission: Vec<VarId>,
    pub gas_emission: Vec<VarId>,
    pub carbon: CarbonEncoding,
    pub purchase_cost: LinExpr,
    pub maintenance_cost: LinExpr,
    pub dr_cost: LinExpr,
}

/// Rejects cases whose demand cannot be met in some period no matter how
/// the devices run. Returns the violated balance families.
pub fn screen_case(
    case: &CaseData,
    scenario: &ScenarioSpec,
    decomposition: &LoadDecomposition,
    limits: &DeviceLimits,
) -> Result<(), DispatchError> {
    let dr = &case.dr;
    let reducible = |c: Carrier, t: usize| -> f64 {
        let mut down = 0.0;
        if scenario.dr_shift && *dr.shift_enabled.get(c) {
            down += match dr.shift_bounds.get(&c) {
                Some(b) => (-b.min).max(0.0),
                None => decomposition.shiftable.get(c)[t],
            };
        }
        if scenario.dr_substitute && *dr.subst_enabled.get(c) {
            down += match dr.subst_bounds.get(&c) {
                Some(b) => (-b.min).max(0.0),
                None => decomposition.substitutable.get(c)[t],
            };
        }
        down
    };
    let discharge = |c: Carrier| case.storage(c).map_or(0.0, |s| s.power_limit_kw());
    let mut problems = Vec::new();
    let mut families = Vec::new();
    for c in Carrier::ALL {
        let family = format!("{c} balance");
        for t in 0..case.periods() {
            let need = case.loads.get(c)[t] - reducible(c, t);
            let supply = match c {
                Carrier::Electric => {
                    limits.e_buy_max + limits.wind[t] + limits.eps_e * limits.gt_max
                }
                Carrier::Gas => limits.g_buy_max + limits.p2g_eff * limits.p2g_max,
                Carrier::Heat => limits.eps_h * limits.gt_max + limits.gb_eff * limits.gb_max,
            } + discharge(c);
            if need > supply * (1.0 + 1e-9) + 1e-9 {
                problems.push(format!(
                    "period {t}: {c} demand {need:.3} kW exceeds the largest supply {supply:.3} kW"
                ));
                if !families.contains(&family) {
                    families.push(family.clone());
                }
            }
        }
    }
    if families.is_empty() {
        Ok(())
    } else {
        Err(DispatchError::Infeasible {
            families,
            detail: problems.join("; "),
        })
    }
}

fn per_period(
    model: &mut MilpModel,
    name: &str,
    periods: usize,
    mut bounds: impl FnMut(usize) -> (f64, f64),
) -> Result<Vec<VarId>, DispatchError> {
    (0..periods)
        .map(|t| {
            let (lo, hi) = bounds(t);
            Ok(model.continuous(format!("{name}[{t}]"), lo, hi)?)
        })
        .collect()
}

fn add_ramp(
    model: &mut MilpModel,
    name: &str,
    vars: &[VarId],
    limit: f64,
) -> Result<(), DispatchError> {
    for t in 1..vars.len() {
        let step = LinExpr::from(vars[t]) - vars[t - 1];
        model.add_constraint(step.clone(), Relation::Le, limit, format!("{name}_ramp_up[{t}]"))?;
        model.add_constraint(step, Relation::Ge, -limit, format!("{name}_ramp_down[{t}]"))?;
    }
    Ok(())
}

/// Builds the dispatch model of `scenario`.
pub fn build_model(
    case: &CaseData,
    scenario: &ScenarioSpec,
) -> Result<(MilpModel, VarMap), DispatchError> {
    let periods = case.periods();
    let h = case.step();
    let limits = DeviceLimits::from_case(case);
    let decomposition = decompose_loads(case);
    screen_case(case, scenario, &decomposition, &limits)?;

    let mut model = MilpModel::new(format!("dispatch_{}", scenario.id));
    let m = &mut model;

    let e_buy = per_period(m, "e_buy", periods, |_| (0.0, limits.e_buy_max))?;
    let g_buy = per_period(m, "g_buy", periods, |_| (0.0, limits.g_buy_max))?;
    let wind = per_period(m, "wind", periods, |t| (0.0, limits.wind[t]))?;
    let p2g_lo = limits.p2g_min.min(limits.p2g_max);
    let p2g_in = per_period(m, "p2g_in", periods, |_| (p2g_lo, limits.p2g_max))?;
    let gt_gas = per_period(m, "gt_gas", periods, |_| (limits.gt_min, limits.gt_max))?;
    let gt_e = per_period(m, "gt_e", periods, |_| (0.0, limits.eps_e * limits.gt_max))?;
    let gt_h = per_period(m, "gt_h", periods, |_| (0.0, limits.eps_h * limits.gt_max))?;
    let gb_lo = limits.gb_min.min(limits.gb_max);
    let gb_gas = per_period(m, "gb_gas", periods, |_| (gb_lo, limits.gb_max))?;
    let q_max = limits.gas_unit_output_max();
    let gas_unit_out = per_period(m, "gas_unit_out", periods, |_| (0.0, q_max))?;

    add_ramp(m, "p2g_in", &p2g_in, limits.p2g_ramp)?;
    add_ramp(m, "gt_gas", &gt_gas, limits.gt_ramp)?;
    add_ramp(m, "gb_gas", &gb_gas, limits.gb_ramp)?;

    let chp_rel = if case.chp.extraction_mode {
        Relation::Le
    } else {
        Relation::Eq
    };
    for t in 0..periods {
        m.add_constraint(
            LinExpr::from(gt_e[t]) - limits.eps_e * gt_gas[t],
            chp_rel,
            0.0,
            format!("chp_electric[{t}]"),
        )?;
        m.add_constraint(
            LinExpr::from(gt_h[t]) - limits.eps_h * gt_gas[t],
            chp_rel,
            0.0,
            format!("chp_heat[{t}]"),
        )?;
        m.add_constraint(
            LinExpr::from(gt_h[t]) - case.chp.omega_min * gt_e[t],
            Relation::Ge,
            0.0,
            format!("chp_ratio_min[{t}]"),
        )?;
        m.add_constraint(
            LinExpr::from(gt_h[t]) - case.chp.omega_max * gt_e[t],
            Relation::Le,
            0.0,
            format!("chp_ratio_max[{t}]"),
        )?;
        m.add_constraint(
            LinExpr::from(gas_unit_out[t]) - gt_e[t] - gt_h[t] - limits.gb_eff * gb_gas[t],
            Relation::Eq,
            0.0,
            format!("gas_unit_output[{t}]"),
        )?;
    }

    let mut storage = PerCarrier::from_fn(|_| None);
    for s in &case.storages {
        let c = s.carrier;
        let p_max = s.power_limit_kw();
        let charge = per_period(m, &format!("{c}_charge"), periods, |_| (0.0, p_max))?;
        let discharge = per_period(m, &format!("{c}_discharge"), periods, |_| (0.0, p_max))?;
        let soc = per_period(m, &format!("{c}_soc"), periods, |_| {
            (s.soc_min_frac * s.capacity_kwh, s.soc_max_frac * s.capacity_kwh)
        })?;
        let mut charging = Vec::with_capacity(periods);
        for t in 0..periods {
            let u = m.binary(format!("{c}_charging[{t}]"))?;
            bigm_indicator(m, u, charge[t], p_max, &format!("{c}_charge_link[{t}]"))?;
            bigm_indicator_complement(m, u, discharge[t], p_max, &format!("{c}_discharge_link[{t}]"))?;
            // soc[t] = soc[t-1] + η_c ch h - dis h / η_d
            let mut expr = LinExpr::from(soc[t]);
            expr.add_term(charge[t], -s.charge_eff * h)
                .add_term(discharge[t], h / s.discharge_eff);
            let prev = if t == 0 {
                s.soc_initial_kwh()
            } else {
                expr.add_term(soc[t - 1], -1.0);
                0.0
            };
            m.add_constraint(expr, Relation::Eq, prev, format!("{c}_soc_balance[{t}]"))?;
            charging.push(u);
        }
        m.add_constraint(
            LinExpr::from(soc[periods - 1]),
            Relation::Eq,
            s.soc_initial_kwh(),
            format!("{c}_soc_terminal"),
        )?;
        *storage.get_mut(c) = Some(StorageVars {
            charge,
            discharge,
            soc,
            charging,
        });
    }

    let dr = build_dr_blocks(case, scenario, &decomposition, m)?;

    let net_storage = |c: Carrier, t: usize| -> LinExpr {
        match storage.get(c) {
            Some(sv) => LinExpr::from(sv.discharge[t]) - sv.charge[t],
            None => LinExpr::new(),
        }
    };
    for t in 0..periods {
        let mut el = LinExpr::from(e_buy[t]) + wind[t] + gt_e[t] - p2g_in[t];
        el.add_scaled(&net_storage(Carrier::Electric, t), 1.0)
            .add_scaled(&dr.adjusted.electric[t], -1.0);
        m.add_constraint(el, Relation::Eq, 0.0, format!("electric_balance[{t}]"))?;

        let mut gas = LinExpr::from(g_buy[t]) - gt_gas[t] - gb_gas[t];
        gas.add_term(p2g_in[t], limits.p2g_eff)
            .add_scaled(&net_storage(Carrier::Gas, t), 1.0)
            .add_scaled(&dr.adjusted.gas[t], -1.0);
        m.add_constraint(gas, Relation::Eq, 0.0, format!("gas_balance[{t}]"))?;

        let mut heat = LinExpr::from(gt_h[t]);
        heat.add_term(gb_gas[t], limits.gb_eff)
            .add_scaled(&net_storage(Carrier::Heat, t), 1.0)
            .add_scaled(&dr.adjusted.heat[t], -1.0);
        m.add_constraint(heat, Relation::Eq, 0.0, format!("heat_balance[{t}]"))?;
    }

    let mut purchase_cost = LinExpr::new();
    let mut maintenance_cost = LinExpr::new();
    let maint = |k| case.converter(k).map_or(0.0, |c| c.maintenance_cost);
    for t in 0..periods {
        purchase_cost
            .add_term(e_buy[t], case.tariffs.electricity[t] * h)
            .add_term(g_buy[t], case.tariffs.gas_per_kwh(t) * h);
        maintenance_cost
            .add_term(wind[t], case.wind.maintenance_cost * h)
            .add_term(p2g_in[t], maint(ConverterKind::P2G) * limits.p2g_eff * h)
            .add_term(gt_e[t], maint(ConverterKind::GT) * h)
            .add_term(gt_h[t], maint(ConverterKind::GT) * h)
            .add_term(gb_gas[t], maint(ConverterKind::GB) * limits.gb_eff * h);
        for s in &case.storages {
            if let Some(sv) = storage.get(s.carrier) {
                maintenance_cost.add_term(sv.discharge[t], s.maintenance_cost * h);
            }
        }
    }
    let mut dr_cost = LinExpr::new();
    for b in &dr.blocks {
        let mu = match b.kind {
            DrKind::Shift => case.dr.mu_shift,
            DrKind::Substitute => case.dr.mu_subst,
        };
        for t in 0..periods {
            dr_cost.add_scaled(&b.magnitude(t), mu * h);
        }
    }

    let mut coal_emission = Vec::new();
    let mut gas_emission = Vec::new();
    let mut carbon = CarbonEncoding {
        share: None,
        segments: Vec::new(),
        fills: Vec::new(),
        cost: LinExpr::new(),
    };
    if scenario.charges_carbon() {
        let curves = EmissionCurves::from_case(case, &limits)?;
        let p = &case.carbon;
        let mut share = LinExpr::new();
        for t in 0..periods {
            let y_e = pwl_convex_with(m, e_buy[t], &curves.coal, &format!("coal_emission[{t}]"))?;
            let y_g =
                pwl_convex_with(m, gas_unit_out[t], &curves.gas, &format!("gas_emission[{t}]"))?;
            coal_emission.push(y_e);
            gas_emission.push(y_g);
            // actual: y_e + y_g + δ L*_g - θ P2G_g; quota: σ_e e_buy +
            // σ_h (σ_eh gt_e + gt_h) + σ_h gb_h + σ_gload L*_g
            share
                .add_term(y_e, h)
                .add_term(y_g, h)
                .add_term(p2g_in[t], -p.theta_p2g * limits.p2g_eff * h)
                .add_term(e_buy[t], -p.sigma_e * h)
                .add_term(gt_e[t], -p.sigma_h * p.sigma_eh * h)
                .add_term(gt_h[t], -p.sigma_h * h)
                .add_term(gb_gas[t], -p.sigma_h * limits.gb_eff * h)
                .add_scaled(&dr.adjusted.gas[t], (p.delta_gasload - p.sigma_gload) * h);
        }
        let range = share_range(case, scenario, &decomposition, &limits, &curves);
        carbon = encode_carbon_cost(m, p, scenario.mechanism, &share, range)?;
    }

    let mut objective = purchase_cost.clone();
    objective
        .add_scaled(&maintenance_cost, 1.0)
        .add_scaled(&dr_cost, 1.0)
        .add_scaled(&carbon.cost, 1.0);
    m.set_objective(objective)?;

    if let Some(&id) = model.trivially_infeasible().first() {
        let name = model.constraint(id).name.clone();
        return Err(DispatchError::Infeasible {
            families: vec![family_of(&name)],
            detail: format!("constraint {name} has no variables and cannot hold"),
        });
    }

    let vars = VarMap {
        e_buy,
        g_buy,
        wind,
        p2g_in,
        gt_gas,
        gt_e,
        gt_h,
        gb_gas,
        gas_unit_out,
        storage,
        dr,
        coal_emission,
        gas_emission,
        carbon,
        purchase_cost,
        maintenance_cost,
        dr_cost,
    };
    Ok((model, vars))
}

/// Static bounds on quota and emissions with every device at full output.
pub fn share_range(
    case: &CaseData,
    scenario: &ScenarioSpec,
    decomposition: &LoadDecomposition,
    limits: &DeviceLimits,
    curves: &EmissionCurves,
) -> ShareRange {
    let p = &case.carbon;
    let h = case.step();
    let dr = &case.dr;
    let mut gas_load_max = 0.0;
    for t in 0..case.periods() {
        let mut up = 0.0;
        if scenario.dr_shift && dr.shift_enabled.gas {
            up += dr.shift_bounds.get(&Carrier::Gas).map_or(decomposition.shiftable.gas[t], |b| b.max);
        }
        if scenario.dr_substitute && dr.subst_enabled.gas {
            up += dr
                .subst_bounds
                .get(&Carrier::Gas)
                .map_or(decomposition.substitutable.gas[t], |b| b.max);
        }
        gas_load_max += case.loads.gas[t] + up;
    }
    let coal_max = curves.coal.quad.max_on(0.0, limits.e_buy_max);
    let gas_max = curves.gas.quad.max_on(0.0, limits.gas_unit_output_max());
    let total = h * case.periods() as f64;
    let emission_max =
        total * (coal_max.max(0.0) + gas_max.max(0.0)) + p.delta_gasload * gas_load_max * h;
    let quota_max = total
        * (p.sigma_e * limits.e_buy_max
            + p.sigma_h
                * (p.sigma_eh * limits.eps_e * limits.gt_max
                    + limits.eps_h * limits.gt_max
                    + limits.gb_eff * limits.gb_max))
        + p.sigma_gload * gas_load_max * h;
    ShareRange {
        quota_max,
        emission_max,
    }
}

/// `heat_balance[3]` -> `heat balance`.
pub fn family_of(name: &str) -> String {
    name.split('[').next().unwrap_or(name).replace('_', " ")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StorageSchedule {
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    /// Stored energy at the end of each period, kWh.
    pub soc: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DrSchedule {
    pub shift_in: Vec<f64>,
    pub shift_out: Vec<f64>,
    pub subst_in: Vec<f64>,
    pub subst_out: Vec<f64>,
}

impl DrSchedule {
    fn zeros(periods: usize) -> Self {
        Self {
            shift_in: vec![0.0; periods],
            shift_out: vec![0.0; periods],
            subst_in: vec![0.0; periods],
            subst_out: vec![0.0; periods],
        }
    }

    pub fn shift(&self, t: usize) -> f64 {
        self.shift_in[t] - self.shift_out[t]
    }

    pub fn subst(&self, t: usize) -> f64 {
        self.subst_in[t] - self.subst_out[t]
    }
}

/// Per-period flows, kW unless noted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub e_buy: Vec<f64>,
    pub g_buy: Vec<f64>,
    pub wind: Vec<f64>,
    pub p2g_in: Vec<f64>,
    pub p2g_gas: Vec<f64>,
    pub gt_gas: Vec<f64>,
    pub gt_e: Vec<f64>,
    pub gt_h: Vec<f64>,
    pub gb_gas: Vec<f64>,
    pub gb_h: Vec<f64>,
    pub storage: PerCarrier<StorageSchedule>,
    pub dr: PerCarrier<DrSchedule>,
    pub adjusted_load: PerCarrier<Vec<f64>>,
}

impl Schedule {
    pub fn periods(&self) -> usize {
        self.e_buy.len()
    }

    pub fn emission_inputs(&self, step_hours: f64) -> EmissionInputs<'_> {
        EmissionInputs {
            step_hours,
            e_buy: &self.e_buy,
            gt_e: &self.gt_e,
            gt_h: &self.gt_h,
            gb_h: &self.gb_h,
            gas_load: &self.adjusted_load.gas,
            p2g_gas: &self.p2g_gas,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub purchase: f64,
    /// Trading cost on the surrogate emissions the model optimizes.
    pub carbon: f64,
    /// Trading cost on the exact quadratic emissions.
    pub carbon_exact: f64,
    pub dr: f64,
    pub maintenance: f64,
    /// `purchase + carbon + dr + maintenance`.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverStats {
    #[serde(serialize_with = "status_str")]
    pub status: MilpStatus,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    #[serde(serialize_with = "seconds")]
    pub wall_time: Duration,
    pub variables: usize,
    pub constraints: usize,
    pub binaries: usize,
}

fn status_str<S: Serializer>(s: &MilpStatus, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(s.as_str())
}

fn seconds<S: Serializer>(d: &Duration, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_f64(d.as_secs_f64())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchSolution {
    pub scenario: ScenarioSpec,
    pub step_hours: f64,
    pub schedule: Schedule,
    pub costs: CostBreakdown,
    /// Emissions with the exact quadratic curves.
    pub emissions: EmissionAccount,
    /// Emissions with the piecewise-linear surrogate.
    pub emissions_surrogate: EmissionAccount,
    /// Guaranteed bound on surrogate minus exact actual emissions.
    pub pwl_error_bound: f64,
    pub satisfaction: f64,
    pub solver: SolverStats,
}

impl DispatchSolution {
    pub fn periods(&self) -> usize {
        self.schedule.periods()
    }
}

fn clean(v: f64) -> f64 {
    if v.abs() < 1e-9 {
        0.0
    } else {
        v
    }
}

/// Reads a schedule out of solver values and recomputes every reported
/// quantity from it.
pub fn extract_solution(
    case: &CaseData,
    scenario: &ScenarioSpec,
    model: &MilpModel,
    vars: &VarMap,
    sol: &MilpSolution,
) -> Result<DispatchSolution, DispatchError> {
    let periods = case.periods();
    let h = case.step();
    let limits = DeviceLimits::from_case(case);
    let read = |v: &[VarId]| -> Vec<f64> { v.iter().map(|&id| clean(sol.value(id))).collect() };
    let p2g_in = read(&vars.p2g_in);
    let gb_gas = read(&vars.gb_gas);
    let storage = PerCarrier::from_fn(|c| match vars.storage.get(c) {
        Some(sv) => StorageSchedule {
            charge: read(&sv.charge),
            discharge: read(&sv.discharge),
            soc: read(&sv.soc),
        },
        None => StorageSchedule {
            charge: vec![0.0; periods],
            discharge: vec![0.0; periods],
            soc: vec![0.0; periods],
        },
    });
    let mut dr = PerCarrier::from_fn(|_| DrSchedule::zeros(periods));
    for b in &vars.dr.blocks {
        let d = dr.get_mut(b.carrier);
        let (p_in, p_out) = match b.kind {
            DrKind::Shift => (&mut d.shift_in, &mut d.shift_out),
            DrKind::Substitute => (&mut d.subst_in, &mut d.subst_out),
        };
        *p_in = read(&b.p_in);
        *p_out = read(&b.p_out);
    }
    let adjusted_load = PerCarrier::from_fn(|c| {
        let d = dr.get(c);
        case.loads
            .get(c)
            .iter()
            .enumerate()
            .map(|(t, &p)| p + d.shift(t) + d.subst(t))
            .collect()
    });
    let schedule = Schedule {
        e_buy: read(&vars.e_buy),
        g_buy: read(&vars.g_buy),
        wind: read(&vars.wind),
        p2g_gas: p2g_in.iter().map(|&x| limits.p2g_eff * x).collect(),
        p2g_in,
        gt_gas: read(&vars.gt_gas),
        gt_e: read(&vars.gt_e),
        gt_h: read(&vars.gt_h),
        gb_h: gb_gas.iter().map(|&x| limits.gb_eff * x).collect(),
        gb_gas,
        storage,
        dr,
        adjusted_load,
    };
    let solver = SolverStats {
        status: sol.status,
        objective: sol.objective,
        bound: sol.bound,
        gap: sol.gap,
        nodes: sol.nodes,
        lp_iterations: sol.lp_iterations,
        wall_time: sol.wall_time,
        variables: model.num_variables(),
        constraints: model.num_constraints(),
        binaries: model.num_binaries(),
    };
    evaluate_schedule(case, scenario, schedule, solver, h)
}

/// Costs, emissions and satisfaction of a schedule.
pub fn evaluate_schedule(
    case: &CaseData,
    scenario: &ScenarioSpec,
    schedule: Schedule,
    solver: SolverStats,
    step_hours: f64,
) -> Result<DispatchSolution, DispatchError> {
    let limits = DeviceLimits::from_case(case);
    let curves = EmissionCurves::from_case(case, &limits)?;
    let h = step_hours;
    let policy = &case.carbon;
    let periods = schedule.periods();

    let inputs = schedule.emission_inputs(h);
    let quota = quota_total(&inputs, policy);
    let emissions = EmissionAccount::new(quota, actual_emissions(&inputs, policy));
    let coal = |p: f64| curves.coal.eval(p.clamp(0.0, curves.coal.x_max));
    let gas = |q: f64| curves.gas.eval(q.clamp(0.0, curves.gas.x_max));
    let emissions_surrogate =
        EmissionAccount::new(quota, actual_emissions_with(&inputs, policy, coal, gas));

    let mut purchase = 0.0;
    let mut maintenance = 0.0;
    let maint = |k| case.converter(k).map_or(0.0, |c| c.maintenance_cost);
    for t in 0..periods {
        purchase += (case.tariffs.electricity[t] * schedule.e_buy[t]
            + case.tariffs.gas_per_kwh(t) * schedule.g_buy[t])
            * h;
        let mut m = case.wind.maintenance_cost * schedule.wind[t]
            + maint(ConverterKind::P2G) * schedule.p2g_gas[t]
            + maint(ConverterKind::GT) * (schedule.gt_e[t] + schedule.gt_h[t])
            + maint(ConverterKind::GB) * schedule.gb_h[t];
        for s in &case.storages {
            m += s.maintenance_cost * schedule.storage.get(s.carrier).discharge[t];
        }
        maintenance += m * h;
    }
    let mut dr_cost = 0.0;
    for c in Carrier::ALL {
        let d = schedule.dr.get(c);
        for t in 0..periods {
            dr_cost += case.dr.mu_shift * (d.shift_in[t] + d.shift_out[t]) * h;
            dr_cost += case.dr.mu_subst * (d.subst_in[t] + d.subst_out[t]) * h;
        }
    }
    let carbon = carbon_cost(scenario.mechanism, emissions_surrogate.share, policy);
    let carbon_exact = carbon_cost(scenario.mechanism, emissions.share, policy);
    let costs = CostBreakdown {
        purchase,
        carbon,
        carbon_exact,
        dr: dr_cost,
        maintenance,
        total: purchase + carbon + dr_cost + maintenance,
    };
    let satisfaction = satisfaction_index(&case.loads, &schedule.adjusted_load)?;
    Ok(DispatchSolution {
        scenario: scenario.clone(),
        step_hours: h,
        pwl_error_bound: curves.error_bound(periods, h),
        schedule,
        costs,
        emissions,
        emissions_surrogate,
        satisfaction,
        solver,
    })
}

/// The objective the model minimizes, recomputed from a solution.
pub fn recomputed_objective(sol: &DispatchSolution) -> f64 {
    let c = &sol.costs;
    let carbon = if sol.scenario.charges_carbon() {
        c.carbon
    } else {
        0.0
    };
    c.purchase + c.maintenance + c.dr + carbon
}

/// Names the constraint families an infeasible model's relaxation blames.
fn diagnose_infeasible(model: &MilpModel) -> DispatchError {
    match solve_lp(model) {
        Ok(lp) if lp.status == LpStatus::Infeasible => {
            let mut families: Vec<String> = Vec::new();
            if let Some(y) = &lp.farkas {
                let ymax = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                for (c, &yi) in model.constraints().iter().zip(y) {
                    let family = family_of(&c.name);
                    if yi.abs() > 1e-7 * ymax && !families.contains(&family) {
                        families.push(family);
                    }
                }
            }
            DispatchError::Infeasible {
                families,
                detail: "the continuous relaxation is infeasible".into(),
            }
        }
        _ => DispatchError::Infeasible {
            families: vec!["integrality".into()],
            detail: "the relaxation is feasible but no integer assignment is".into(),
        },
    }
}

/// Builds, solves, extracts and verifies one scenario.
pub fn run_scenario(
    case: &CaseData,
    scenario: &ScenarioSpec,
    backend: &dyn SolverBackend,
    opts: &SolveOptions,
) -> Result<DispatchSolution, DispatchError> {
    let (model, vars) = build_model(case, scenario)?;
    let sol = backend.solve(&model, opts)?;
    match sol.status {
        MilpStatus::Optimal | MilpStatus::Feasible => {}
        MilpStatus::Infeasible => return Err(diagnose_infeasible(&model)),
        MilpStatus::Unbounded => return Err(DispatchError::Unbounded),
        MilpStatus::Limit => return Err(DispatchError::NoSolution { status: sol.status }),
    }
    let solution = extract_solution(case, scenario, &model, &vars, &sol)?;
    let report = verify_solution(case, scenario, &solution);
    if !report.pass {
        return Err(DispatchError::Verification(Box::new(report)));
    }
    Ok(solution)
}
