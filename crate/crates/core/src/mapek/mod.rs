//! Single-loop MAPE-K managing system.
//!
//! Monitor, analyzer and executor operate on the emulator encoding of the
//! managed net; the planner ranks candidate plans by the plausibility of
//! their predicted side effects.

mod analyzer;
mod executor;
mod knowledge;
mod planner;
mod runtime;

use thiserror::Error;

use crate::emulator::EmulatorError;
use crate::hlpn::Value;

pub use analyzer::{adaptation_required, determine_influential_elements, verification, Verdict};
pub use executor::{apply, execute};
pub use knowledge::{
    monitor, Comparison, InfluentialElement, KnowledgeBase, MonitorReport, QualityRecord,
    Quantifier, Snapshot, Threshold,
};
pub use planner::{
    argmax, calculate_plans_plausibility, plausibility, select_candidate_plans,
    select_plausible_plan, Action, Plan, PlanSource, ScoredPlan, StaticPlans,
};
pub use runtime::{LoopConfig, LoopEvent, LoopStats, ManagingLoop, Zone};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapekError {
    #[error("no threshold for quality `{0}`")]
    MissingThreshold(String),
    #[error("quality `{quality}` has non-scalar value {value}")]
    NotComparable { quality: String, value: Value },
    #[error("no violation to attribute")]
    NoViolation,
    #[error("plan `{plan}` failed at action {index}: {source}")]
    Action {
        plan: String,
        index: usize,
        #[source]
        source: EmulatorError,
    },
    #[error(transparent)]
    Emulator(#[from] EmulatorError),
}
