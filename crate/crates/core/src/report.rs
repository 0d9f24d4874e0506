//! CSV and JSON renderings. Numbers use six decimals, `-0` is printed as
//! `0`, lines end in LF.

use std::fmt::Write;

use crate::case::Carrier;
use crate::dispatch::DispatchSolution;
use crate::study::{ScenarioRow, SweepParam, SweepPoint};

pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    let s = format!("{v:.6}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Column order of the per-period schedule CSV.
pub fn schedule_header() -> Vec<String> {
    let mut cols: Vec<String> = [
        "t", "e_buy", "g_buy", "wind", "gt_e", "gt_h", "gb_h", "p2g_gas",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for c in Carrier::ALL {
        for f in ["charge", "discharge", "soc"] {
            cols.push(format!("{c}_{f}"));
        }
    }
    for c in Carrier::ALL {
        cols.push(format!("{c}_shift"));
    }
    for c in Carrier::ALL {
        cols.push(format!("{c}_subst"));
    }
    cols
}

pub fn schedule_csv(sol: &DispatchSolution) -> String {
    let s = &sol.schedule;
    let mut out = schedule_header().join(",");
    out.push('\n');
    for t in 0..s.periods() {
        let mut row = vec![
            t.to_string(),
            fmt_num(s.e_buy[t]),
            fmt_num(s.g_buy[t]),
            fmt_num(s.wind[t]),
            fmt_num(s.gt_e[t]),
            fmt_num(s.gt_h[t]),
            fmt_num(s.gb_h[t]),
            fmt_num(s.p2g_gas[t]),
        ];
        for c in Carrier::ALL {
            let st = s.storage.get(c);
            row.extend([st.charge[t], st.discharge[t], st.soc[t]].map(fmt_num));
        }
        for c in Carrier::ALL {
            row.push(fmt_num(s.dr.get(c).shift(t)));
        }
        for c in Carrier::ALL {
            row.push(fmt_num(s.dr.get(c).subst(t)));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub const SCENARIO_HEADER: &str =
    "scenario,status,total_cost,purchase_cost,carbon_cost,maintenance_cost,dr_cost,actual_emissions_kg";

pub fn scenario_csv(rows: &[ScenarioRow]) -> String {
    let mut out = String::from(SCENARIO_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.scenario,
            r.status,
            fmt_num(r.total_cost),
            fmt_num(r.purchase_cost),
            fmt_num(r.carbon_cost),
            fmt_num(r.maintenance_cost),
            fmt_num(r.dr_cost),
            fmt_num(r.emissions),
        );
    }
    out
}

pub fn sweep_csv(param: SweepParam, points: &[SweepPoint]) -> String {
    let mut out = format!(
        "{},status,actual_emissions_kg,carbon_cost,total_cost\n",
        param.as_str()
    );
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_num(p.value),
            p.status,
            fmt_num(p.emissions),
            fmt_num(p.carbon_cost),
            fmt_num(p.total_cost),
        );
    }
    out
}

pub fn solution_json(sol: &DispatchSolution) -> String {
    let mut s = serde_json::to_string_pretty(sol).expect("solution serializes");
    s.push('\n');
    s
}
