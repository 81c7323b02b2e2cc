//! Required DoE principles, rule-based design filtering, consistency checks
//! and research-question presets.

mod consistency;
mod filter;
mod model;
mod presets;
mod principles;

pub use consistency::{check_consistency, confounding_status, Axiom, Confounding, Inconsistency};
pub use filter::{
    block_column, filter_designs, Candidate, CandidateReport, Outcome, PrincipleSupport,
    ReportedInconsistency, RuleId, SelectionReport, TraceEntry, Verdict,
};
pub use model::{
    DesignRequirements, Effects, ExperimentalModel, NuisanceFactor, Response, Subject,
};
pub use presets::{plan_preset, scenario_id, Preset, MAX_CONCURRENT_INDICATORS};
pub use principles::{required_principles, RequiredPrinciples};
