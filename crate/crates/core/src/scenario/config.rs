//! Run configuration and timed events.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::aircraft::{
    read_table, Aircraft, CaseModel, ResourceId, ResourceState, SeparationTable,
};
use crate::hlpn::Time;
use crate::mapek::Threshold;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Always the first enabled firing in canonical order.
    #[default]
    First,
    /// A uniformly drawn enabled firing, seeded.
    Random,
}

/// What the environment does at a step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum EventKind {
    /// A planned aircraft enters the approach, optionally at another time.
    Arrival {
        aircraft: u32,
        #[serde(default)]
        ts: Option<Time>,
    },
    /// An aircraft reaches the sequencing point at `ts` instead.
    Delay { aircraft: u32, ts: Time },
    /// The wind turns; without `wind` the orientation flips.
    WindChange {
        #[serde(default)]
        wind: Option<i64>,
    },
    ResourceState {
        resource: ResourceId,
        state: ResourceState,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    /// Step index before which the event applies.
    pub at: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Airport, wind and aircraft progress (JSON).
    pub model: PathBuf,
    /// Planning table (delimited text).
    pub planning: PathBuf,
    pub steps: u64,
    #[serde(default = "one")]
    pub period: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub policy: PolicyKind,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Executions allowed per cycle; defaults to the fleet size.
    #[serde(default)]
    pub max_hops: Option<usize>,
    #[serde(default)]
    pub separation: SeparationTable,
    /// Replaces the model's opposite-runway pairs.
    #[serde(default)]
    pub opposites: Option<Vec<(u32, u32)>>,
    /// Overrides individual quality thresholds.
    #[serde(default)]
    pub thresholds: BTreeMap<String, Threshold>,
    #[serde(default)]
    pub events: Vec<ScenarioEvent>,
}

fn one() -> u64 {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))
    }

    /// Read a config file; relative paths inside it are taken from the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = read(path)?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.model, &mut cfg.planning, &mut cfg.out] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

pub(crate) fn read(path: &Path) -> Result<String, ScenarioError> {
    fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_model(path: &Path) -> Result<CaseModel, ScenarioError> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| ScenarioError::Config(format!("{}: {e}", path.display())))
}

pub fn load_plan(path: &Path) -> Result<Vec<Aircraft>, ScenarioError> {
    Ok(read_table(read(path)?.as_bytes())?)
}
