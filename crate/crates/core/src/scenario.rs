use std::fmt;

use serde::{Deserialize, Serialize};

use crate::case::{CaseData, Mechanism};
use crate::error::DispatchError;

/// What a dispatch run optimizes and which flexibility it may use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: String,
    /// Whether the carbon cost enters the objective. The emission account
    /// and the cost under `mechanism` are reported either way.
    pub carbon_in_objective: bool,
    pub mechanism: Mechanism,
    pub dr_shift: bool,
    pub dr_substitute: bool,
}

impl ScenarioSpec {
    fn new(id: &str, carbon: bool, mechanism: Mechanism, shift: bool, subst: bool) -> Self {
        Self {
            id: id.into(),
            carbon_in_objective: carbon,
            mechanism,
            dr_shift: shift,
            dr_substitute: subst,
        }
    }

    /// Cost-only dispatch; tiered carbon cost reported but not optimized.
    pub fn s1() -> Self {
        Self::new("S1", false, Mechanism::Tiered, false, false)
    }

    /// Single-price carbon trading.
    pub fn s2() -> Self {
        Self::new("S2", true, Mechanism::Traditional, false, false)
    }

    /// Tiered carbon trading.
    pub fn s3() -> Self {
        Self::new("S3", true, Mechanism::Tiered, false, false)
    }

    /// Tiered carbon trading with load shifting.
    pub fn s4() -> Self {
        Self::new("S4", true, Mechanism::Tiered, true, false)
    }

    /// Tiered carbon trading with load shifting and substitution.
    pub fn s5() -> Self {
        Self::new("S5", true, Mechanism::Tiered, true, true)
    }

    pub fn all() -> Vec<Self> {
        vec![Self::s1(), Self::s2(), Self::s3(), Self::s4(), Self::s5()]
    }

    /// The case's own mechanism with every demand response option.
    pub fn custom(case: &CaseData) -> Self {
        let mechanism = case.carbon.mechanism;
        Self::new("custom", mechanism != Mechanism::None, mechanism, true, true)
    }

    /// Parses `S1`..`S5` (case-insensitive) or `custom`.
    pub fn parse(id: &str, case: &CaseData) -> Result<Self, DispatchError> {
        match id.to_ascii_uppercase().as_str() {
            "S1" => Ok(Self::s1()),
            "S2" => Ok(Self::s2()),
            "S3" => Ok(Self::s3()),
            "S4" => Ok(Self::s4()),
            "S5" => Ok(Self::s5()),
            "CUSTOM" => Ok(Self::custom(case)),
            _ => Err(DispatchError::UnknownScenario(id.into())),
        }
    }

    pub fn has_dr(&self) -> bool {
        self.dr_shift || self.dr_substitute
    }

    /// Whether the model charges a carbon cost.
    pub fn charges_carbon(&self) -> bool {
        self.carbon_in_objective && self.mechanism != Mechanism::None
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}
