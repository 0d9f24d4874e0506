//! Day-ahead low-carbon dispatch of an electricity, gas and heat energy hub.
//!
//! A [`CaseData`] describes loads, wind, tariffs, converters (P2G, gas
//! turbine with waste-heat boiler, gas boiler), storage, the carbon trading
//! policy and the demand response policy. [`run_scenario`] builds the MILP
//! for a [`ScenarioSpec`], solves it with any [`ies_milp::SolverBackend`]
//! and verifies the schedule before returning it.

pub mod carbon;
pub mod case;
pub mod demand_response;
pub mod dispatch;
pub mod error;
pub mod report;
pub mod scenario;
pub mod study;
pub mod verify;

pub use carbon::{
    actual_emissions, emission_account, encode_carbon_cost, quota_total, tier_cost,
    traditional_cost, EmissionAccount, EmissionInputs,
};
pub use case::{
    from_json, load_case, save_case, to_json, validate_case, CaseData, Carrier, Mechanism,
    ValidationReport,
};
pub use demand_response::{build_dr_blocks, decompose_loads, satisfaction_index};
pub use dispatch::{build_model, run_scenario, DispatchSolution, VarMap};
pub use error::{CarbonError, CaseError, DispatchError, DrError};
pub use scenario::ScenarioSpec;
pub use study::{
    run_all_scenarios, sweep, sweep_interval, sweep_lambda, ScenarioReport, SweepParam,
    SweepPoint,
};
pub use verify::{verify_solution, VerificationReport};
