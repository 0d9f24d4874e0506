//! Load decomposition, shift and substitution blocks, and the consumer
//! satisfaction index.

use ies_milp::{bigm_indicator, LinExpr, MilpModel, Relation, VarId};
use serde::Serialize;

use crate::case::{AdjustBounds, CaseData, Carrier, PerCarrier};
use crate::error::{DispatchError, DrError};
use crate::scenario::ScenarioSpec;

/// Split of every load into fixed, shiftable and substitutable parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadDecomposition {
    pub fixed: PerCarrier<Vec<f64>>,
    pub shiftable: PerCarrier<Vec<f64>>,
    pub substitutable: PerCarrier<Vec<f64>>,
}

impl LoadDecomposition {
    /// Reassembles the load of `carrier` in period `t`, summing as
    /// `fixed + (shiftable + substitutable)`.
    pub fn total(&self, carrier: Carrier, t: usize) -> f64 {
        self.fixed.get(carrier)[t]
            + (self.shiftable.get(carrier)[t] + self.substitutable.get(carrier)[t])
    }
}

/// Returns `r` with `r + part == total` in floating point, if one exists
/// within a few ulps of `total - part`.
fn exact_remainder(total: f64, part: f64) -> Option<f64> {
    let mut r = total - part;
    // The rounded difference is off by at most an ulp or two.
    for _ in 0..4 {
        let sum = r + part;
        if sum == total {
            return Some(r);
        }
        r = if sum < total { r.next_up() } else { r.next_down() };
    }
    None
}

/// Splits `total` into `rest + (a' + b')` exactly, where the larger of the
/// two parts is moved by as few ulps as needed. Halfway ties can make an
/// exact `rest` impossible for the unmodified parts.
fn split_exact(total: f64, a: f64, b: f64) -> (f64, f64, f64) {
    let (mut a, mut b) = (a, b);
    for _ in 0..16 {
        if let Some(r) = exact_remainder(total, a + b) {
            return (r, a, b);
        }
        if a >= b {
            a = a.next_down();
        } else {
            b = b.next_down();
        }
    }
    unreachable!("no exact split of {total}")
}

pub fn decompose_loads(case: &CaseData) -> LoadDecomposition {
    let dr = &case.dr;
    let mut shiftable: PerCarrier<Vec<f64>> = case
        .loads
        .map(|c, load| load.iter().map(|&p| dr.shiftable_fraction.get(c) * p).collect());
    let mut substitutable: PerCarrier<Vec<f64>> = case.loads.map(|c, load| {
        load.iter()
            .map(|&p| dr.substitutable_fraction.get(c) * p)
            .collect()
    });
    let mut fixed = PerCarrier::splat(Vec::new());
    for c in Carrier::ALL {
        for (t, &p) in case.loads.get(c).iter().enumerate() {
            let (mut f, mut s, mut sub) =
                split_exact(p, shiftable.get(c)[t], substitutable.get(c)[t]);
            if f < 0.0 {
                // Fractions summing to one: the fixed part is empty and the
                // substitutable part takes what the shiftable part leaves.
                f = 0.0;
                let (rest, _, shift) = split_exact(p, 0.0, s);
                (s, sub) = (shift, rest);
            }
            shiftable.get_mut(c)[t] = s.max(0.0);
            substitutable.get_mut(c)[t] = sub.max(0.0);
            fixed.get_mut(c).push(f);
        }
    }
    LoadDecomposition {
        fixed,
        shiftable,
        substitutable,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DrKind {
    Shift,
    Substitute,
}

impl DrKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DrKind::Shift => "shift",
            DrKind::Substitute => "subst",
        }
    }
}

/// Variables of one (carrier, kind) adjustment over the horizon.
#[derive(Debug, Clone)]
pub struct DrBlock {
    pub carrier: Carrier,
    pub kind: DrKind,
    pub p_in: Vec<VarId>,
    pub p_out: Vec<VarId>,
    pub v_in: Vec<VarId>,
    pub v_out: Vec<VarId>,
    /// Per-period `(min, max)` of the signed adjustment.
    pub bounds: Vec<(f64, f64)>,
}

impl DrBlock {
    /// `ΔP(t) = P_in(t) - P_out(t)`.
    pub fn delta(&self, t: usize) -> LinExpr {
        LinExpr::from(self.p_in[t]) - self.p_out[t]
    }

    /// `|ΔP(t)|` surrogate `P_in(t) + P_out(t)`.
    pub fn magnitude(&self, t: usize) -> LinExpr {
        LinExpr::from(self.p_in[t]) + self.p_out[t]
    }
}

#[derive(Debug, Clone)]
pub struct DrVarMap {
    pub blocks: Vec<DrBlock>,
    /// Adjusted load `P*(t)` per carrier.
    pub adjusted: PerCarrier<Vec<LinExpr>>,
}

impl DrVarMap {
    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block(&self, carrier: Carrier, kind: DrKind) -> Option<&DrBlock> {
        self.blocks
            .iter()
            .find(|b| b.carrier == carrier && b.kind == kind)
    }
}

/// Per-period signed limits for one (carrier, kind).
pub fn adjustment_bounds(
    configured: Option<&AdjustBounds>,
    base: &[f64],
    carrier: Carrier,
    kind: DrKind,
) -> Result<Vec<(f64, f64)>, DrError> {
    match configured {
        Some(b) => {
            let err = |reason: &str| DrError::Bounds {
                carrier: carrier.to_string(),
                kind: kind.as_str(),
                reason: reason.into(),
            };
            if b.max < 0.0 {
                return Err(err("maximum is negative"));
            }
            if b.min > b.max {
                return Err(err("minimum exceeds maximum"));
            }
            Ok(vec![(b.min, b.max); base.len()])
        }
        None => Ok(base.iter().map(|&p| (-p, p)).collect()),
    }
}

/// Adds the shift and substitution blocks the scenario enables and the
/// satisfaction constraint, and returns the adjusted load expressions.
pub fn build_dr_blocks(
    case: &CaseData,
    scenario: &ScenarioSpec,
    decomposition: &LoadDecomposition,
    model: &mut MilpModel,
) -> Result<DrVarMap, DispatchError> {
    let periods = case.periods();
    let dr = &case.dr;
    let mut adjusted = case
        .loads
        .map(|_, load| load.iter().map(|&p| LinExpr::constant(p)).collect::<Vec<_>>());
    let mut blocks = Vec::new();

    let mut wanted = Vec::new();
    if scenario.dr_shift {
        for c in Carrier::ALL {
            if *dr.shift_enabled.get(c) {
                wanted.push((c, DrKind::Shift));
            }
        }
    }
    if scenario.dr_substitute {
        for c in Carrier::ALL {
            if *dr.subst_enabled.get(c) {
                wanted.push((c, DrKind::Substitute));
            }
        }
    }

    for (carrier, kind) in wanted {
        let (base, configured) = match kind {
            DrKind::Shift => (
                decomposition.shiftable.get(carrier),
                dr.shift_bounds.get(&carrier),
            ),
            DrKind::Substitute => (
                decomposition.substitutable.get(carrier),
                dr.subst_bounds.get(&carrier),
            ),
        };
        let bounds = adjustment_bounds(configured, base, carrier, kind)?;
        let block = add_block(model, carrier, kind, bounds)?;
        for t in 0..periods {
            adjusted.get_mut(carrier)[t].add_scaled(&block.delta(t), 1.0);
        }
        blocks.push(block);
    }

    // Shift conserves energy per carrier over the horizon.
    for b in blocks.iter().filter(|b| b.kind == DrKind::Shift) {
        let sum: LinExpr = (0..periods).map(|t| b.delta(t)).sum();
        model.add_constraint(sum, Relation::Eq, 0.0, format!("dr_shift_net_zero[{}]", b.carrier))?;
    }

    let subst: Vec<&DrBlock> = blocks
        .iter()
        .filter(|b| b.kind == DrKind::Substitute)
        .collect();
    if dr.literal_eq2 {
        for b in &subst {
            let sum: LinExpr = (0..periods).map(|t| b.delta(t)).sum();
            model.add_constraint(
                sum,
                Relation::Eq,
                0.0,
                format!("dr_subst_net_zero[{}]", b.carrier),
            )?;
        }
    } else if !subst.is_empty() {
        for t in 0..periods {
            let mut balance = LinExpr::new();
            for b in &subst {
                balance.add_scaled(&b.delta(t), *dr.subst_conversion.get(b.carrier));
            }
            model.add_constraint(balance, Relation::Eq, 0.0, format!("dr_subst_balance[{t}]"))?;
        }
    }

    if !blocks.is_empty() {
        // (1/3) Σ_i (1 - Σ_t |ΔP_i| / Σ_t P_i) >= I_min, with the absolute
        // value bounded by the in + out magnitudes of both kinds.
        let mut deviation = LinExpr::new();
        for b in &blocks {
            let energy: f64 = case.loads.get(b.carrier).iter().sum();
            if energy <= 0.0 {
                continue;
            }
            for t in 0..periods {
                deviation.add_scaled(&b.magnitude(t), 1.0 / energy);
            }
        }
        model.add_constraint(
            deviation,
            Relation::Le,
            3.0 * (1.0 - dr.satisfaction_min),
            "dr_satisfaction",
        )?;
    }

    Ok(DrVarMap { blocks, adjusted })
}

fn add_block(
    model: &mut MilpModel,
    carrier: Carrier,
    kind: DrKind,
    bounds: Vec<(f64, f64)>,
) -> Result<DrBlock, DispatchError> {
    let n = bounds.len();
    let tag = format!("{}_{}", kind.as_str(), carrier);
    let mut block = DrBlock {
        carrier,
        kind,
        p_in: Vec::with_capacity(n),
        p_out: Vec::with_capacity(n),
        v_in: Vec::with_capacity(n),
        v_out: Vec::with_capacity(n),
        bounds: bounds.clone(),
    };
    for (t, &(lo, hi)) in bounds.iter().enumerate() {
        let big_m = lo.abs().max(hi);
        let p_in = model.continuous(format!("{tag}_in[{t}]"), 0.0, hi.max(0.0))?;
        let p_out = model.continuous(format!("{tag}_out[{t}]"), 0.0, (-lo).max(0.0))?;
        let v_in = model.binary(format!("{tag}_vin[{t}]"))?;
        let v_out = model.binary(format!("{tag}_vout[{t}]"))?;
        bigm_indicator(model, v_in, p_in, big_m, &format!("{tag}_in_link[{t}]"))?;
        bigm_indicator(model, v_out, p_out, big_m, &format!("{tag}_out_link[{t}]"))?;
        model.add_constraint(
            LinExpr::from(v_in) + v_out,
            Relation::Eq,
            1.0,
            format!("{tag}_direction[{t}]"),
        )?;
        // The variable bounds already give lo <= ΔP <= hi unless the
        // adjustment is forced upwards.
        if lo > 0.0 {
            model.add_constraint(
                LinExpr::from(p_in) - p_out,
                Relation::Ge,
                lo,
                format!("{tag}_min[{t}]"),
            )?;
        }
        block.p_in.push(p_in);
        block.p_out.push(p_out);
        block.v_in.push(v_in);
        block.v_out.push(v_out);
    }
    Ok(block)
}

/// `I = (1/3) Σ_i (1 - Σ_t |P*_i - P_i| / Σ_t P_i)`. A carrier without load
/// has nothing to deviate from and contributes 1.
pub fn satisfaction_index(
    original: &PerCarrier<Vec<f64>>,
    adjusted: &PerCarrier<Vec<f64>>,
) -> Result<f64, DrError> {
    let mut total = 0.0;
    for c in Carrier::ALL {
        let (p, q) = (original.get(c), adjusted.get(c));
        if p.len() != q.len() {
            return Err(DrError::Horizon(p.len(), q.len()));
        }
        let energy: f64 = p.iter().sum();
        let deviation: f64 = p.iter().zip(q).map(|(a, b)| (b - a).abs()).sum();
        if energy <= 0.0 {
            if deviation > 0.0 {
                return Err(DrError::Degenerate(c.to_string()));
            }
            total += 1.0;
        } else {
            total += 1.0 - deviation / energy;
        }
    }
    Ok(total / 3.0)
}
