#![allow(dead_code)]

use ies_dispatch::case::PerCarrier;
use ies_dispatch::{CaseData, Mechanism, ScenarioSpec};

/// The bundled case cut down to its first `periods` periods.
pub fn truncated(periods: usize) -> CaseData {
    let mut c = CaseData::default_case();
    let cut = |v: &mut Vec<f64>| v.truncate(periods);
    c.horizon.periods = periods;
    for v in [
        &mut c.loads.electric,
        &mut c.loads.gas,
        &mut c.loads.heat,
        &mut c.wind.profile,
        &mut c.tariffs.electricity,
        &mut c.tariffs.gas,
    ] {
        cut(v);
    }
    c
}

/// A case with explicit loads and wind, all other data from the bundled case.
pub fn with_loads(loads: PerCarrier<Vec<f64>>, wind: Vec<f64>) -> CaseData {
    let mut c = truncated(wind.len());
    c.loads = loads;
    c.wind.profile = wind;
    c
}

pub fn spec(id: &str, mechanism: Mechanism, carbon: bool, shift: bool, subst: bool) -> ScenarioSpec {
    ScenarioSpec {
        id: id.into(),
        carbon_in_objective: carbon,
        mechanism,
        dr_shift: shift,
        dr_substitute: subst,
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
