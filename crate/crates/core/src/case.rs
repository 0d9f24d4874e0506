//! Problem instance: profiles, devices, storage, tariffs and policies.
//!
//! Cases are read from a JSON document with unknown keys rejected. Gas is
//! carried in kW of thermal power throughout; tariffs quote gas per m³ and
//! are converted with `tariffs.gas_kwh_per_m3`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CaseError;

/// Bundled default case document.
pub const DEFAULT_CASE_JSON: &str = include_str!("../cases/default.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Carrier {
    Electric,
    Gas,
    Heat,
}

impl Carrier {
    pub const ALL: [Carrier; 3] = [Carrier::Electric, Carrier::Gas, Carrier::Heat];

    pub fn as_str(self) -> &'static str {
        match self {
            Carrier::Electric => "electric",
            Carrier::Gas => "gas",
            Carrier::Heat => "heat",
        }
    }
}

impl fmt::Display for Carrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One value per carrier.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerCarrier<T> {
    pub electric: T,
    pub gas: T,
    pub heat: T,
}

impl<T> PerCarrier<T> {
    pub fn splat(value: T) -> Self
    where
        T: Clone,
    {
        Self {
            electric: value.clone(),
            gas: value.clone(),
            heat: value,
        }
    }

    pub fn from_fn(mut f: impl FnMut(Carrier) -> T) -> Self {
        Self {
            electric: f(Carrier::Electric),
            gas: f(Carrier::Gas),
            heat: f(Carrier::Heat),
        }
    }

    pub fn get(&self, carrier: Carrier) -> &T {
        match carrier {
            Carrier::Electric => &self.electric,
            Carrier::Gas => &self.gas,
            Carrier::Heat => &self.heat,
        }
    }

    pub fn get_mut(&mut self, carrier: Carrier) -> &mut T {
        match carrier {
            Carrier::Electric => &mut self.electric,
            Carrier::Gas => &mut self.gas,
            Carrier::Heat => &mut self.heat,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Carrier, &T) -> U) -> PerCarrier<U> {
        PerCarrier::from_fn(|c| f(c, self.get(c)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Carrier, &T)> {
        Carrier::ALL.into_iter().map(move |c| (c, self.get(c)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizon {
    pub periods: usize,
    pub step_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wind {
    /// Forecast available output per period, kW.
    pub profile: Vec<f64>,
    pub max_kw: f64,
    /// Maintenance price per kWh of wind used.
    #[serde(default)]
    pub maintenance_cost: f64,
}

impl Wind {
    /// Upper limit on wind used in period `t`.
    pub fn available(&self, t: usize) -> f64 {
        self.profile[t].min(self.max_kw)
    }
}

fn default_gas_kwh_per_m3() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tariffs {
    /// Price per kWh bought from the grid.
    pub electricity: Vec<f64>,
    /// Price per m³ of gas bought from the network.
    pub gas: Vec<f64>,
    #[serde(default = "default_gas_kwh_per_m3")]
    pub gas_kwh_per_m3: f64,
}

impl Tariffs {
    /// Gas price per kWh of thermal power in period `t`.
    pub fn gas_per_kwh(&self, t: usize) -> f64 {
        self.gas[t] / self.gas_kwh_per_m3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConverterKind {
    P2G,
    GT,
    WHB,
    GB,
}

impl ConverterKind {
    pub const ALL: [ConverterKind; 4] = [
        ConverterKind::P2G,
        ConverterKind::GT,
        ConverterKind::WHB,
        ConverterKind::GB,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConverterKind::P2G => "P2G",
            ConverterKind::GT => "GT",
            ConverterKind::WHB => "WHB",
            ConverterKind::GB => "GB",
        }
    }

    /// Output carriers that must have an efficiency entry.
    pub fn outputs(self) -> &'static [Carrier] {
        match self {
            ConverterKind::P2G => &[Carrier::Gas],
            ConverterKind::GT => &[Carrier::Electric, Carrier::Heat],
            ConverterKind::WHB => &[Carrier::Heat],
            ConverterKind::GB => &[Carrier::Heat],
        }
    }
}

impl fmt::Display for ConverterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A conversion device. `capacity_kw`, `min_output_kw` and the ramp limit
/// all refer to the device's input: electricity for P2G, gas for GT and GB,
/// and recovered exhaust heat for WHB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverterParams {
    pub name: ConverterKind,
    pub capacity_kw: f64,
    pub efficiencies: BTreeMap<Carrier, f64>,
    pub ramp_fraction: f64,
    #[serde(default)]
    pub min_output_kw: f64,
    /// Maintenance price per kWh of useful output.
    #[serde(default)]
    pub maintenance_cost: f64,
}

impl ConverterParams {
    pub fn efficiency(&self, carrier: Carrier) -> f64 {
        self.efficiencies.get(&carrier).copied().unwrap_or(0.0)
    }

    pub fn ramp_kw(&self) -> f64 {
        self.ramp_fraction * self.capacity_kw
    }
}

fn default_storage_eff() -> f64 {
    0.95
}

fn default_soc_initial() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageParams {
    pub carrier: Carrier,
    pub capacity_kwh: f64,
    pub soc_min_frac: f64,
    pub soc_max_frac: f64,
    /// Charge and discharge power limit as a fraction of capacity.
    pub power_limit_fraction: f64,
    #[serde(default = "default_storage_eff")]
    pub charge_eff: f64,
    #[serde(default = "default_storage_eff")]
    pub discharge_eff: f64,
    #[serde(default = "default_soc_initial")]
    pub soc_initial_frac: f64,
    /// Maintenance price per kWh discharged.
    #[serde(default)]
    pub maintenance_cost: f64,
}

impl StorageParams {
    pub fn power_limit_kw(&self) -> f64 {
        self.power_limit_fraction * self.capacity_kwh
    }

    pub fn soc_initial_kwh(&self) -> f64 {
        self.soc_initial_frac * self.capacity_kwh
    }
}

/// Which carbon cost the objective charges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    None,
    Traditional,
    #[default]
    Tiered,
}

impl Mechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::None => "none",
            Mechanism::Traditional => "traditional",
            Mechanism::Tiered => "tiered",
        }
    }
}

/// Coefficients of `a + b x + c x²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadCoeffs {
    pub fn eval(&self, x: f64) -> f64 {
        self.a + x * (self.b + self.c * x)
    }

    pub fn as_quadratic(&self) -> ies_milp::Quadratic {
        ies_milp::Quadratic::new(self.a, self.b, self.c)
    }
}

fn default_pwl_segments() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarbonPolicy {
    #[serde(default)]
    pub mechanism: Mechanism,
    /// Free quota per kWh bought from the grid.
    pub sigma_e: f64,
    /// Free quota per kWh of heat.
    pub sigma_h: f64,
    /// Free quota per kWh of gas load.
    pub sigma_gload: f64,
    /// Converts gas turbine electricity into heat-equivalent for its quota.
    pub sigma_eh: f64,
    pub lambda_base: f64,
    pub alpha_growth: f64,
    pub interval_d: f64,
    /// Emissions of purchased power, kg per period as a function of kW.
    pub coal_quad: QuadCoeffs,
    /// Emissions of the gas units as a function of their combined output.
    pub gas_quad: QuadCoeffs,
    /// Emissions per kWh of gas load.
    pub delta_gasload: f64,
    /// CO₂ absorbed per kWh of gas produced by P2G.
    pub theta_p2g: f64,
    #[serde(default = "default_pwl_segments")]
    pub pwl_segments: usize,
    /// Tiers beyond the standard six, each adding `alpha_growth` to the slope.
    #[serde(default)]
    pub extra_tiers: usize,
}

impl CarbonPolicy {
    pub fn tiers(&self) -> usize {
        6 + self.extra_tiers
    }
}

/// Signed per-period adjustment limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjustBounds {
    pub min: f64,
    pub max: f64,
}

fn default_satisfaction_min() -> f64 {
    0.85
}

fn default_true() -> PerCarrier<bool> {
    PerCarrier::splat(true)
}

fn default_conversion() -> PerCarrier<f64> {
    PerCarrier::splat(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrPolicy {
    pub shiftable_fraction: PerCarrier<f64>,
    pub substitutable_fraction: PerCarrier<f64>,
    /// Compensation per kWh of shifted load, counted on both ends.
    pub mu_shift: f64,
    /// Compensation per kWh of substituted load, counted on every carrier.
    pub mu_subst: f64,
    #[serde(default = "default_satisfaction_min")]
    pub satisfaction_min: f64,
    /// Carriers whose shiftable load may move.
    #[serde(default = "default_true")]
    pub shift_enabled: PerCarrier<bool>,
    /// Carriers taking part in substitution.
    #[serde(default = "default_true")]
    pub subst_enabled: PerCarrier<bool>,
    /// Fixed shift limits; a missing carrier uses ± its shiftable load.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub shift_bounds: BTreeMap<Carrier, AdjustBounds>,
    /// Fixed substitution limits; a missing carrier uses ± its substitutable load.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub subst_bounds: BTreeMap<Carrier, AdjustBounds>,
    /// Weights of the per-period substitution balance `Σ φ_k ΔP_k = 0`.
    #[serde(default = "default_conversion")]
    pub subst_conversion: PerCarrier<f64>,
    /// Replace the per-period substitution balance by a per-carrier
    /// net-zero-over-horizon constraint.
    #[serde(default)]
    pub literal_eq2: bool,
}

fn default_omega_min() -> f64 {
    1.0
}

fn default_omega_max() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChpSettings {
    /// Lower limit on heat / electricity output.
    #[serde(default = "default_omega_min")]
    pub omega_min: f64,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    /// Outputs bounded by fuel instead of fixed by it.
    #[serde(default)]
    pub extraction_mode: bool,
}

impl Default for ChpSettings {
    fn default() -> Self {
        Self {
            omega_min: default_omega_min(),
            omega_max: default_omega_max(),
            extraction_mode: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PurchaseCaps {
    pub electricity_kw: f64,
    pub gas_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseData {
    pub horizon: Horizon,
    pub loads: PerCarrier<Vec<f64>>,
    pub wind: Wind,
    pub tariffs: Tariffs,
    pub converters: Vec<ConverterParams>,
    pub storages: Vec<StorageParams>,
    pub carbon: CarbonPolicy,
    pub dr: DrPolicy,
    pub purchase_caps: PurchaseCaps,
    #[serde(default)]
    pub chp: ChpSettings,
    /// Dotted paths of values that are modelling assumptions rather than
    /// published parameters.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assumed: Vec<String>,
}

impl CaseData {
    pub fn periods(&self) -> usize {
        self.horizon.periods
    }

    pub fn step(&self) -> f64 {
        self.horizon.step_hours
    }

    pub fn converter(&self, kind: ConverterKind) -> Option<&ConverterParams> {
        self.converters.iter().find(|c| c.name == kind)
    }

    pub fn storage(&self, carrier: Carrier) -> Option<&StorageParams> {
        self.storages.iter().find(|s| s.carrier == carrier)
    }

    /// The bundled case.
    pub fn default_case() -> CaseData {
        from_json(DEFAULT_CASE_JSON).expect("bundled case is valid")
    }

    /// Halves the number of periods by averaging consecutive pairs and
    /// drops to four carbon PWL segments.
    pub fn reduced(&self) -> Result<CaseData, CaseError> {
        if self.periods() % 2 != 0 {
            return Err(CaseError::Schema(format!(
                "reduced mode needs an even number of periods, got {}",
                self.periods()
            )));
        }
        let pairs = |v: &Vec<f64>| -> Vec<f64> {
            v.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
        };
        let mut out = self.clone();
        out.horizon.periods /= 2;
        out.horizon.step_hours *= 2.0;
        out.loads = self.loads.map(|_, v| pairs(v));
        out.wind.profile = pairs(&self.wind.profile);
        out.tariffs.electricity = pairs(&self.tariffs.electricity);
        out.tariffs.gas = pairs(&self.tariffs.gas);
        out.carbon.pwl_segments = 4;
        Ok(out)
    }
}

/// Parses and validates a case document.
pub fn from_json(text: &str) -> Result<CaseData, CaseError> {
    let case: CaseData = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Syntax | Category::Eof | Category::Io => CaseError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
            Category::Data => CaseError::Schema(e.to_string()),
        }
    })?;
    let report = validate_case(&case);
    if !report.is_ok() {
        return Err(CaseError::Invalid(report));
    }
    Ok(case)
}

pub fn load_case(path: impl AsRef<Path>) -> Result<CaseData, CaseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json(&text)
}

pub fn to_json(case: &CaseData) -> String {
    let mut text = serde_json::to_string_pretty(case).expect("case serializes");
    text.push('\n');
    text
}

pub fn save_case(case: &CaseData, path: impl AsRef<Path>) -> Result<(), CaseError> {
    let path = path.as_ref();
    std::fs::write(path, to_json(case)).map_err(|source| CaseError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    /// Field locator such as `converters[GT].capacity_kw`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Issue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Issue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn non_negative(&mut self, path: impl Into<String>, v: f64) {
        if !(v.is_finite() && v >= 0.0) {
            self.error(path, format!("must be a finite non-negative number, got {v}"));
        }
    }

    fn positive(&mut self, path: impl Into<String>, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.error(path, format!("must be positive, got {v}"));
        }
    }

    fn fraction(&mut self, path: impl Into<String>, v: f64) {
        if !(0.0..=1.0).contains(&v) {
            self.error(path, format!("must lie in [0, 1], got {v}"));
        }
    }

    fn open_fraction(&mut self, path: impl Into<String>, v: f64) {
        if !(v > 0.0 && v <= 1.0) {
            self.error(path, format!("must lie in (0, 1], got {v}"));
        }
    }

    fn series(&mut self, path: &str, values: &[f64], periods: usize) {
        if values.len() != periods {
            self.error(
                path,
                format!("has {} values, horizon has {periods} periods", values.len()),
            );
        }
        if let Some((t, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            self.error(format!("{path}[{t}]"), format!("must be non-negative, got {v}"));
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Checks every invariant of a case. Problems are returned, not raised.
pub fn validate_case(case: &CaseData) -> ValidationReport {
    let mut r = ValidationReport::default();
    let t = case.horizon.periods;
    if t == 0 {
        r.error("horizon.periods", "must be at least 1");
    }
    r.positive("horizon.step_hours", case.horizon.step_hours);

    for (carrier, values) in case.loads.iter() {
        r.series(&format!("loads.{carrier}"), values, t);
    }
    r.series("wind.profile", &case.wind.profile, t);
    r.non_negative("wind.max_kw", case.wind.max_kw);
    r.non_negative("wind.maintenance_cost", case.wind.maintenance_cost);
    r.series("tariffs.electricity", &case.tariffs.electricity, t);
    r.series("tariffs.gas", &case.tariffs.gas, t);
    r.positive("tariffs.gas_kwh_per_m3", case.tariffs.gas_kwh_per_m3);

    validate_converters(case, &mut r);
    validate_storages(case, &mut r);
    validate_carbon(&case.carbon, &mut r);
    validate_dr(case, &mut r);

    r.non_negative("purchase_caps.electricity_kw", case.purchase_caps.electricity_kw);
    r.non_negative("purchase_caps.gas_kw", case.purchase_caps.gas_kw);

    let chp = &case.chp;
    r.non_negative("chp.omega_min", chp.omega_min);
    r.non_negative("chp.omega_max", chp.omega_max);
    if chp.omega_min > chp.omega_max {
        r.error("chp.omega_min", "heat-to-power ratio bounds inverted");
    }

    if r.is_ok() {
        warnings(case, &mut r);
    }
    r
}

fn validate_converters(case: &CaseData, r: &mut ValidationReport) {
    for kind in ConverterKind::ALL {
        let count = case.converters.iter().filter(|c| c.name == kind).count();
        if count > 1 {
            r.error(format!("converters[{kind}]"), "listed more than once");
        }
    }
    if case.converter(ConverterKind::GT).is_some() != case.converter(ConverterKind::WHB).is_some()
    {
        r.error(
            "converters",
            "GT and WHB form one CHP unit and must be listed together",
        );
    }
    for c in &case.converters {
        let base = format!("converters[{}]", c.name);
        r.positive(format!("{base}.capacity_kw"), c.capacity_kw);
        r.open_fraction(format!("{base}.ramp_fraction"), c.ramp_fraction);
        r.non_negative(format!("{base}.maintenance_cost"), c.maintenance_cost);
        if !(c.min_output_kw >= 0.0 && c.min_output_kw <= c.capacity_kw) {
            r.error(
                format!("{base}.min_output_kw"),
                format!("must lie in [0, capacity_kw], got {}", c.min_output_kw),
            );
        }
        for carrier in c.name.outputs() {
            match c.efficiencies.get(carrier) {
                Some(&eta) => r.open_fraction(format!("{base}.efficiencies.{carrier}"), eta),
                None => r.error(
                    format!("{base}.efficiencies.{carrier}"),
                    "missing efficiency",
                ),
            }
        }
        for carrier in c.efficiencies.keys() {
            if !c.name.outputs().contains(carrier) {
                r.error(
                    format!("{base}.efficiencies.{carrier}"),
                    format!("{} has no {carrier} output", c.name),
                );
            }
        }
    }
}

fn validate_storages(case: &CaseData, r: &mut ValidationReport) {
    for carrier in Carrier::ALL {
        if case.storages.iter().filter(|s| s.carrier == carrier).count() > 1 {
            r.error(format!("storages[{carrier}]"), "listed more than once");
        }
    }
    for s in &case.storages {
        let base = format!("storages[{}]", s.carrier);
        r.positive(format!("{base}.capacity_kwh"), s.capacity_kwh);
        r.fraction(format!("{base}.soc_min_frac"), s.soc_min_frac);
        r.fraction(format!("{base}.soc_max_frac"), s.soc_max_frac);
        if s.soc_min_frac >= s.soc_max_frac {
            r.error(format!("{base}.soc_min_frac"), "soc bounds inverted");
        } else if !(s.soc_initial_frac >= s.soc_min_frac && s.soc_initial_frac <= s.soc_max_frac)
        {
            r.error(
                format!("{base}.soc_initial_frac"),
                "initial state of charge outside the soc bounds",
            );
        }
        r.open_fraction(format!("{base}.power_limit_fraction"), s.power_limit_fraction);
        r.open_fraction(format!("{base}.charge_eff"), s.charge_eff);
        r.open_fraction(format!("{base}.discharge_eff"), s.discharge_eff);
        r.non_negative(format!("{base}.maintenance_cost"), s.maintenance_cost);
    }
}

fn validate_carbon(p: &CarbonPolicy, r: &mut ValidationReport) {
    r.non_negative("carbon.sigma_e", p.sigma_e);
    r.non_negative("carbon.sigma_h", p.sigma_h);
    r.non_negative("carbon.sigma_gload", p.sigma_gload);
    r.non_negative("carbon.sigma_eh", p.sigma_eh);
    r.non_negative("carbon.lambda_base", p.lambda_base);
    r.non_negative("carbon.alpha_growth", p.alpha_growth);
    r.positive("carbon.interval_d", p.interval_d);
    r.non_negative("carbon.delta_gasload", p.delta_gasload);
    r.non_negative("carbon.theta_p2g", p.theta_p2g);
    for (name, q) in [("coal_quad", p.coal_quad), ("gas_quad", p.gas_quad)] {
        if ![q.a, q.b, q.c].iter().all(|v| v.is_finite()) {
            r.error(format!("carbon.{name}"), "coefficients must be finite");
        }
        if q.c < 0.0 {
            r.error(
                format!("carbon.{name}.c"),
                "quadratic coefficient must be non-negative (convex emissions)",
            );
        }
    }
    if p.pwl_segments == 0 {
        r.error("carbon.pwl_segments", "must be at least 1");
    }
}

fn validate_dr(case: &CaseData, r: &mut ValidationReport) {
    let dr = &case.dr;
    for carrier in Carrier::ALL {
        let p = *dr.shiftable_fraction.get(carrier);
        let c = *dr.substitutable_fraction.get(carrier);
        r.fraction(format!("dr.shiftable_fraction.{carrier}"), p);
        r.fraction(format!("dr.substitutable_fraction.{carrier}"), c);
        if p + c > 1.0 {
            r.error(
                format!("dr.substitutable_fraction.{carrier}"),
                "DR fractions exceed 1",
            );
        }
        r.positive(
            format!("dr.subst_conversion.{carrier}"),
            *dr.subst_conversion.get(carrier),
        );
    }
    r.non_negative("dr.mu_shift", dr.mu_shift);
    r.non_negative("dr.mu_subst", dr.mu_subst);
    r.fraction("dr.satisfaction_min", dr.satisfaction_min);
    for (name, map) in [("shift_bounds", &dr.shift_bounds), ("subst_bounds", &dr.subst_bounds)] {
        for (carrier, b) in map {
            let path = format!("dr.{name}.{carrier}");
            if !(b.min.is_finite() && b.max.is_finite()) {
                r.error(path, "bounds must be finite");
            } else if b.max < 0.0 {
                r.error(path, "maximum adjustment must be non-negative");
            } else if b.min > b.max {
                r.error(path, "minimum adjustment exceeds maximum");
            }
        }
    }
}

fn warnings(case: &CaseData, r: &mut ValidationReport) {
    let t = case.periods();
    if t > 0 && (0..t).all(|i| case.wind.available(i) > case.loads.electric[i]) {
        r.warn(
            "wind.profile",
            "wind exceeds the electric load in every period",
        );
    }
    if let (Some(gt), Some(whb)) = (
        case.converter(ConverterKind::GT),
        case.converter(ConverterKind::WHB),
    ) {
        let eps_e = gt.efficiency(Carrier::Electric);
        let eps_h = gt.efficiency(Carrier::Heat) * whb.efficiency(Carrier::Heat);
        let ratio = eps_h / eps_e;
        if !case.chp.extraction_mode
            && (ratio < case.chp.omega_min || ratio > case.chp.omega_max)
        {
            r.warn(
                "chp",
                format!(
                    "fixed heat-to-power ratio {ratio:.3} lies outside [{}, {}]; the CHP unit is forced off",
                    case.chp.omega_min, case.chp.omega_max
                ),
            );
        }
    }
}
