//! Knowledge zone: properties read from the managed system, quality records,
//! thresholds and the plan library.

use std::collections::BTreeMap;
use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use super::planner::Plan;
use super::MapekError;
use crate::emulator::EncodedNet;
use crate::hlpn::{Symbol, TokenMultiset, Value};
use crate::ppn::StateOfInformation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtLeast,
    AtMost,
    Above,
    Below,
}

/// A quality is satisfied when `value cmp bound` holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub cmp: Comparison,
    pub bound: f64,
}

impl Threshold {
    pub fn new(cmp: Comparison, bound: f64) -> Self {
        Threshold { cmp, bound }
    }

    pub fn satisfied(&self, v: f64) -> bool {
        match self.cmp {
            Comparison::AtLeast => v >= self.bound,
            Comparison::AtMost => v <= self.bound,
            Comparison::Above => v > self.bound,
            Comparison::Below => v < self.bound,
        }
    }

    /// Probability that a value drawn from `soi` satisfies the threshold.
    /// The boundary itself has zero measure.
    pub fn satisfying_mass(&self, soi: &StateOfInformation) -> f64 {
        let m = match self.cmp {
            Comparison::AtLeast | Comparison::Above => soi.mass_above(self.bound),
            Comparison::AtMost | Comparison::Below => soi.mass_below(self.bound),
        };
        m.clamp(0.0, 1.0)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.cmp {
            Comparison::AtLeast => ">=",
            Comparison::AtMost => "<=",
            Comparison::Above => ">",
            Comparison::Below => "<",
        };
        write!(f, "{op} {}", self.bound)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityRecord {
    pub name: String,
    pub value: Value,
    pub timestamp: u64,
}

/// The context item blamed for a violation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InfluentialElement {
    pub kind: Symbol,
    pub reference: Value,
}

impl InfluentialElement {
    pub fn new(kind: &str, reference: Value) -> Self {
        InfluentialElement {
            kind: Symbol::new(kind),
            reference,
        }
    }
}

impl fmt::Display for InfluentialElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.reference)
    }
}

/// Properties copied out of the managed system by the monitor.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: u64,
    pub sys: BTreeMap<String, TokenMultiset>,
    pub env: BTreeMap<String, TokenMultiset>,
}

impl Snapshot {
    /// Tokens of a system or environment property; empty when not watched.
    pub fn tokens(&self, place: &str) -> TokenMultiset {
        self.sys
            .get(place)
            .or_else(|| self.env.get(place))
            .cloned()
            .unwrap_or_default()
    }
}

/// Maps a snapshot to one quality value.
pub trait Quantifier {
    fn name(&self) -> &str;

    fn quantify(&self, snapshot: &Snapshot) -> Result<Value, String>;

    /// Context elements read by the last quantification that explain a
    /// violation. `None` means the quantifier cannot attribute.
    fn attribution(&self, _snapshot: &Snapshot) -> Option<Vec<InfluentialElement>> {
        None
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub sys_places: Vec<String>,
    pub env_places: Vec<String>,
    pub snapshot: Snapshot,
    pub plans: Vec<Plan>,
    pub quality: BTreeMap<String, QualityRecord>,
    pub thresholds: BTreeMap<String, Threshold>,
}

impl KnowledgeBase {
    pub fn new(
        sys_places: impl IntoIterator<Item = String>,
        env_places: impl IntoIterator<Item = String>,
        thresholds: BTreeMap<String, Threshold>,
    ) -> Self {
        KnowledgeBase {
            sys_places: sys_places.into_iter().collect(),
            env_places: env_places.into_iter().collect(),
            thresholds,
            ..Default::default()
        }
    }
}

/// Outcome of one monitor pass.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub refreshed: Vec<String>,
    /// Quantifiers that failed; their previous record is kept.
    pub failures: Vec<(String, String)>,
}

/// Refresh the snapshot through read primitives, then quantify.
pub fn monitor(
    kb: &mut KnowledgeBase,
    e: &EncodedNet,
    quantifiers: &[Box<dyn Quantifier>],
    step: u64,
) -> Result<MonitorReport, MapekError> {
    let mut snapshot = Snapshot {
        step,
        ..Default::default()
    };
    for p in &kb.sys_places {
        snapshot.sys.insert(p.clone(), e.get_tokens(p)?);
    }
    for p in &kb.env_places {
        snapshot.env.insert(p.clone(), e.get_tokens(p)?);
    }
    kb.snapshot = snapshot;
    let mut report = MonitorReport::default();
    for q in quantifiers {
        match q.quantify(&kb.snapshot) {
            Ok(value) => {
                kb.quality.insert(
                    q.name().to_string(),
                    QualityRecord {
                        name: q.name().to_string(),
                        value,
                        timestamp: step,
                    },
                );
                report.refreshed.push(q.name().to_string());
            }
            Err(msg) => {
                warn!("quantifier {} failed: {msg}", q.name());
                report.failures.push((q.name().to_string(), msg));
            }
        }
    }
    Ok(report)
}
