use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{load_model, load_plan, PolicyKind, RunConfig, ScenarioEvent};
use super::events::apply_event;
use super::ScenarioError;
use crate::aircraft::{
    build_arrival_net, default_quantifiers, default_thresholds, plan_safety, Aircraft,
    ArrivalPlanner, CaseModel, CaseView, Phase, SeparationTable, Violation, ENVIRONMENT_PLACES,
    SYSTEM_PLACES,
};
use crate::emulator::{EncodedNet, ExecutorPolicy};
use crate::hlpn::{Functions, Policy};
use crate::mapek::{
    KnowledgeBase, LoopConfig, LoopEvent, LoopStats, ManagingLoop, QualityRecord, Threshold, Zone,
};

/// Everything a run needs, already loaded.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub plan: Vec<Aircraft>,
    pub model: CaseModel,
    pub separation: SeparationTable,
    pub thresholds: BTreeMap<String, Threshold>,
    pub steps: u64,
    pub period: u64,
    pub seed: u64,
    pub policy: PolicyKind,
    pub max_hops: usize,
    pub events: Vec<ScenarioEvent>,
}

impl Scenario {
    /// Defaults: no steps, analysis after every move, first-enabled policy,
    /// up to one execution per aircraft in a cycle.
    pub fn new(plan: Vec<Aircraft>, model: CaseModel) -> Self {
        let max_hops = plan.len().max(1);
        Scenario {
            plan,
            model,
            separation: SeparationTable::default(),
            thresholds: default_thresholds(),
            steps: 0,
            period: 1,
            seed: 0,
            policy: PolicyKind::First,
            max_hops,
            events: Vec::new(),
        }
    }

    pub fn from_config(cfg: &RunConfig) -> Result<Self, ScenarioError> {
        let mut model = load_model(&cfg.model)?;
        if let Some(pairs) = &cfg.opposites {
            model.airport = model.airport.with_opposites(pairs)?;
        }
        let plan = load_plan(&cfg.planning)?;
        let mut s = Scenario::new(plan, model);
        s.separation = cfg.separation.clone();
        s.thresholds.extend(cfg.thresholds.clone());
        s.steps = cfg.steps;
        s.period = cfg.period;
        s.seed = cfg.seed;
        s.policy = cfg.policy;
        if let Some(h) = cfg.max_hops {
            s.max_hops = h;
        }
        s.events = cfg.events.clone();
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub header: serde_json::Value,
    pub events: Vec<LoopEvent>,
    pub stats: LoopStats,
    pub final_plan: Vec<Aircraft>,
    pub final_phases: BTreeMap<u32, Phase>,
    pub final_quality: BTreeMap<String, QualityRecord>,
    /// Violations already present in the input plan.
    pub baseline: Vec<Violation>,
    pub violations: Vec<Violation>,
    /// Final violations that were not in the input plan.
    pub unresolved: Vec<Violation>,
    pub final_encoding: EncodedNet,
}

impl RunReport {
    pub fn is_clean(&self) -> bool {
        self.unresolved.is_empty()
    }

    pub fn count(&self, kind: &str) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// The header as a trace record.
    pub fn header_record(&self) -> LoopEvent {
        LoopEvent {
            cycle: 0,
            zone: Zone::Run,
            kind: "header".into(),
            payload: self.header.clone(),
        }
    }
}

fn pair_key(v: &Violation) -> (crate::aircraft::Dim, crate::aircraft::ResourceId, u32, u32) {
    (v.phase, v.resource, v.leader, v.follower)
}

/// Drive the managing loop over the arrival net for `steps` move-steps,
/// applying each event just before the step it is scheduled for.
pub fn run_scenario(s: &Scenario) -> Result<RunReport, ScenarioError> {
    let mut events = s.events.clone();
    events.sort_by_key(|e| e.at);
    if let Some(late) = events.iter().find(|e| e.at >= s.steps) {
        return Err(ScenarioError::Event {
            at: late.at,
            message: format!("beyond the {}-step budget", s.steps),
        });
    }
    let net = build_arrival_net(&s.plan, &s.model)?;
    let baseline = plan_safety(&s.plan, &s.separation);
    let header = json!({
        "aircraft": s.plan.len(),
        "steps": s.steps,
        "period": s.period,
        "seed": s.seed,
        "policy": s.policy,
        "max_hops": s.max_hops,
        "separation": s.separation,
        "thresholds": s.thresholds,
        "events": events,
        "baseline": baseline,
    });

    let kb = KnowledgeBase::new(
        SYSTEM_PLACES.iter().map(|p| p.to_string()),
        ENVIRONMENT_PLACES.iter().map(|p| p.to_string()),
        s.thresholds.clone(),
    );
    let policy = match s.policy {
        PolicyKind::First => Policy::First,
        PolicyKind::Random => Policy::seeded(s.seed),
    };
    let mut lp = ManagingLoop::new(
        EncodedNet::encode(&net),
        kb,
        default_quantifiers(&s.separation),
        Box::new(ArrivalPlanner::new(s.separation.clone())),
        policy,
        Functions::standard(),
        LoopConfig {
            period: s.period,
            max_hops: s.max_hops,
            executor: ExecutorPolicy::default(),
        },
    );

    let mut pending = events.iter().peekable();
    for step in 0..s.steps {
        while let Some(ev) = pending.next_if(|e| e.at == step) {
            let next = apply_event(lp.encoding(), &ev.kind, ev.at)?;
            lp.perturb(event_name(ev), json!(ev), |_| Ok(next))?;
        }
        lp.step()?;
    }

    let view = CaseView::from_encoding(lp.encoding())?;
    let violations = plan_safety(&view.plan, &s.separation);
    let known: BTreeSet<_> = baseline.iter().map(pair_key).collect();
    let unresolved = violations
        .iter()
        .filter(|v| !known.contains(&pair_key(v)))
        .cloned()
        .collect();
    Ok(RunReport {
        header,
        events: lp.events().to_vec(),
        stats: lp.stats().clone(),
        final_plan: view.plan,
        final_phases: view.phases,
        final_quality: lp.knowledge().quality.clone(),
        baseline,
        violations,
        unresolved,
        final_encoding: lp.encoding().clone(),
    })
}

fn event_name(ev: &ScenarioEvent) -> &'static str {
    use super::config::EventKind::*;
    match ev.kind {
        Arrival { .. } => "arrival",
        Delay { .. } => "delay",
        WindChange { .. } => "wind-change",
        ResourceState { .. } => "resource-state",
    }
}
