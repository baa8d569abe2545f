//! Scenario runner: load a case, inject timed events, drive the managing
//! loop and export what happened.

mod config;
mod events;
mod runner;
mod trace;

use std::path::PathBuf;

use thiserror::Error;

use crate::aircraft::AircraftError;
use crate::emulator::EmulatorError;
use crate::mapek::MapekError;

pub use config::{load_model, load_plan, EventKind, PolicyKind, RunConfig, ScenarioEvent};
pub use events::apply_event;
pub use runner::{run_scenario, RunReport, Scenario};
pub use trace::{export_trace, plan_text, trace_text, PLAN_FILE, TRACE_FILE};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("event at step {at}: {message}")]
    Event { at: u64, message: String },
    #[error(transparent)]
    Aircraft(#[from] AircraftError),
    #[error(transparent)]
    Loop(#[from] MapekError),
    #[error(transparent)]
    Emulator(#[from] EmulatorError),
}
