//! Carbon accounting: free quota, actual emissions, trading share and the
//! trading cost, as exact evaluators and as a MILP encoding.

use ies_milp::{LinExpr, MilpModel, Relation, VarId};
use serde::Serialize;

use crate::case::{CarbonPolicy, Mechanism};
use crate::error::{CarbonError, DispatchError};

/// Per-period flows that emissions depend on, in kW.
#[derive(Debug, Clone, Copy)]
pub struct EmissionInputs<'a> {
    pub step_hours: f64,
    pub e_buy: &'a [f64],
    pub gt_e: &'a [f64],
    pub gt_h: &'a [f64],
    pub gb_h: &'a [f64],
    pub gas_load: &'a [f64],
    pub p2g_gas: &'a [f64],
}

impl EmissionInputs<'_> {
    fn energy(&self, series: &[f64]) -> f64 {
        series.iter().sum::<f64>() * self.step_hours
    }

    /// Combined useful output of the gas units in period `t`.
    pub fn gas_unit_output(&self, t: usize) -> f64 {
        self.gt_e[t] + self.gt_h[t] + self.gb_h[t]
    }
}

/// Free allowance, kg.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Quota {
    pub e_buy: f64,
    pub gt: f64,
    pub gb: f64,
    pub gas_load: f64,
    pub total: f64,
}

/// Actual emissions, kg. `p2g` is the amount absorbed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Actual {
    pub e_buy: f64,
    pub gtgb: f64,
    pub gas_load: f64,
    pub p2g: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EmissionAccount {
    pub quota: Quota,
    pub actual: Actual,
    /// Actual minus quota; negative when allowance is left to sell.
    pub share: f64,
}

impl EmissionAccount {
    pub fn new(quota: Quota, actual: Actual) -> Self {
        Self {
            quota,
            actual,
            share: actual.total - quota.total,
        }
    }

    /// Largest violation of the three account identities.
    pub fn identity_residual(&self) -> f64 {
        let q = &self.quota;
        let a = &self.actual;
        let r1 = (q.e_buy + q.gt + q.gb + q.gas_load - q.total).abs();
        let r2 = (a.e_buy + a.gtgb + a.gas_load - a.p2g - a.total).abs();
        let r3 = (a.total - q.total - self.share).abs();
        r1.max(r2).max(r3)
    }
}

pub fn quota_total(inputs: &EmissionInputs<'_>, policy: &CarbonPolicy) -> Quota {
    let h = inputs.step_hours;
    let e_buy = policy.sigma_e * inputs.energy(inputs.e_buy);
    let gt = policy.sigma_h
        * inputs
            .gt_e
            .iter()
            .zip(inputs.gt_h)
            .map(|(e, q)| policy.sigma_eh * e + q)
            .sum::<f64>()
        * h;
    let gb = policy.sigma_h * inputs.energy(inputs.gb_h);
    let gas_load = policy.sigma_gload * inputs.energy(inputs.gas_load);
    Quota {
        e_buy,
        gt,
        gb,
        gas_load,
        total: e_buy + gt + gb + gas_load,
    }
}

/// Exact emissions with the quadratic curves.
pub fn actual_emissions(inputs: &EmissionInputs<'_>, policy: &CarbonPolicy) -> Actual {
    actual_emissions_with(
        inputs,
        policy,
        |p| policy.coal_quad.eval(p),
        |q| policy.gas_quad.eval(q),
    )
}

/// Emissions with the per-period curves supplied by the caller, e.g. a
/// piecewise-linear surrogate.
pub fn actual_emissions_with(
    inputs: &EmissionInputs<'_>,
    policy: &CarbonPolicy,
    coal: impl Fn(f64) -> f64,
    gas: impl Fn(f64) -> f64,
) -> Actual {
    let h = inputs.step_hours;
    let e_buy = inputs.e_buy.iter().map(|&p| coal(p)).sum::<f64>() * h;
    let gtgb = (0..inputs.gt_e.len())
        .map(|t| gas(inputs.gas_unit_output(t)))
        .sum::<f64>()
        * h;
    let gas_load = policy.delta_gasload * inputs.energy(inputs.gas_load);
    let p2g = policy.theta_p2g * inputs.energy(inputs.p2g_gas);
    Actual {
        e_buy,
        gtgb,
        gas_load,
        p2g,
        total: e_buy + gtgb + gas_load - p2g,
    }
}

pub fn emission_account(inputs: &EmissionInputs<'_>, policy: &CarbonPolicy) -> EmissionAccount {
    EmissionAccount::new(quota_total(inputs, policy), actual_emissions(inputs, policy))
}

/// Cost accumulated up to the start of tier `k`: `λ d (k + α k(k-1)/2)`.
fn tier_start_cost(k: usize, lambda: f64, alpha: f64, d: f64) -> f64 {
    let k = k as f64;
    lambda * d * (k + alpha * k * (k - 1.0) / 2.0)
}

/// Price of tier `k`: `λ (1 + k α)`.
fn tier_price(k: usize, lambda: f64, alpha: f64) -> f64 {
    lambda * (1.0 + k as f64 * alpha)
}

/// Tiered trading cost with `tiers` intervals of width `d`; shares up to `d`
/// (including negative ones, which earn a subsidy) trade at `λ`.
pub fn tier_cost_with(share: f64, lambda: f64, alpha: f64, d: f64, tiers: usize) -> f64 {
    if share <= d || tiers <= 1 {
        return lambda * share;
    }
    let k = ((share / d).floor() as usize).clamp(1, tiers - 1);
    tier_start_cost(k, lambda, alpha, d) + tier_price(k, lambda, alpha) * (share - k as f64 * d)
}

pub fn tier_cost(share: f64, policy: &CarbonPolicy) -> f64 {
    tier_cost_with(
        share,
        policy.lambda_base,
        policy.alpha_growth,
        policy.interval_d,
        policy.tiers(),
    )
}

pub fn traditional_cost(share: f64, policy: &CarbonPolicy) -> f64 {
    policy.lambda_base * share
}

pub fn carbon_cost(mechanism: Mechanism, share: f64, policy: &CarbonPolicy) -> f64 {
    match mechanism {
        Mechanism::None => 0.0,
        Mechanism::Traditional => traditional_cost(share, policy),
        Mechanism::Tiered => tier_cost(share, policy),
    }
}

/// Static limits of the trading share: it cannot fall below minus the
/// largest attainable quota or exceed the largest attainable emissions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShareRange {
    pub quota_max: f64,
    pub emission_max: f64,
}

#[derive(Debug, Clone)]
pub struct CarbonEncoding {
    /// The trading share variable, absent for `Mechanism::None`.
    pub share: Option<VarId>,
    /// Tier selectors, one per tier when tiered.
    pub segments: Vec<VarId>,
    /// Position inside each tier.
    pub fills: Vec<VarId>,
    pub cost: LinExpr,
}

/// Adds the trading cost of `share_expr` under `mechanism` and returns it as
/// an affine expression that is exact at the minimum.
pub fn encode_carbon_cost(
    model: &mut MilpModel,
    policy: &CarbonPolicy,
    mechanism: Mechanism,
    share_expr: &LinExpr,
    range: ShareRange,
) -> Result<CarbonEncoding, DispatchError> {
    let mut enc = CarbonEncoding {
        share: None,
        segments: Vec::new(),
        fills: Vec::new(),
        cost: LinExpr::new(),
    };
    if mechanism == Mechanism::None {
        return Ok(enc);
    }
    if !(range.emission_max.is_finite() && range.quota_max.is_finite()) {
        return Err(CarbonError::UnboundedEmissions(format!(
            "emission bound {} and quota bound {}",
            range.emission_max, range.quota_max
        ))
        .into());
    }
    let (m_q, m_e) = (range.quota_max.max(0.0), range.emission_max.max(0.0));
    let share = model.continuous("carbon_share", -m_q, m_e)?;
    model.add_constraint(
        LinExpr::from(share) - share_expr.clone(),
        Relation::Eq,
        0.0,
        "carbon_share_def",
    )?;
    enc.share = Some(share);
    let lambda = policy.lambda_base;
    if mechanism == Mechanism::Traditional {
        enc.cost = LinExpr::term(share, lambda);
        return Ok(enc);
    }

    let (alpha, d) = (policy.alpha_growth, policy.interval_d);
    let tiers = policy.tiers();
    let mut pick = LinExpr::new();
    let mut position = LinExpr::from(share);
    for k in 0..tiers {
        let z = model.binary(format!("carbon_tier[{k}]"))?;
        let (lo, hi) = if k == 0 {
            (-m_q, d)
        } else if k + 1 == tiers {
            (0.0, (m_e - k as f64 * d).max(0.0))
        } else {
            (0.0, d)
        };
        let s = model.continuous(format!("carbon_fill[{k}]"), lo.min(0.0), hi)?;
        model.add_constraint(
            LinExpr::from(s) - hi * z,
            Relation::Le,
            0.0,
            format!("carbon_fill_hi[{k}]"),
        )?;
        if lo < 0.0 {
            model.add_constraint(
                LinExpr::from(s) - lo * z,
                Relation::Ge,
                0.0,
                format!("carbon_fill_lo[{k}]"),
            )?;
        }
        pick.add_term(z, 1.0);
        position.add_term(z, -(k as f64) * d).add_term(s, -1.0);
        enc.cost
            .add_term(z, tier_start_cost(k, lambda, alpha, d))
            .add_term(s, tier_price(k, lambda, alpha));
        enc.segments.push(z);
        enc.fills.push(s);
    }
    model.add_constraint(pick, Relation::Eq, 1.0, "carbon_tier_pick")?;
    model.add_constraint(position, Relation::Eq, 0.0, "carbon_tier_position")?;
    Ok(enc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_costs_match_printed_constants() {
        let (l, a, d) = (0.3, 0.25, 1000.0);
        assert_eq!(tier_start_cost(0, l, a, d), 0.0);
        let printed = [1.0, 2.0 + a, 3.0 + 3.0 * a, 4.0 + 6.0 * a, 5.0 + 10.0 * a];
        for (k, c) in printed.iter().enumerate() {
            assert!((tier_start_cost(k + 1, l, a, d) - l * c * d).abs() < 1e-9);
        }
    }

    #[test]
    fn single_tier_is_linear() {
        assert_eq!(tier_cost_with(9000.0, 0.2, 0.5, 1000.0, 1), 1800.0);
    }
}
