//! The single control loop.
//!
//! Every `period` move-steps the loop runs monitor and analysis; planning
//! and execution follow only when analysis reports a violation. After an
//! execution the loop re-monitors within the same cycle and may plan again,
//! up to `max_hops` executions, so that knock-on replans land in the cycle
//! that caused them.

use std::collections::BTreeMap;
use std::mem;

use log::{debug, info};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::analyzer::{adaptation_required, determine_influential_elements, verification};
use super::executor::execute;
use super::knowledge::{monitor, KnowledgeBase, QualityRecord, Quantifier};
use super::planner::{
    calculate_plans_plausibility, select_candidate_plans, select_plausible_plan, Plan, PlanSource,
};
use super::MapekError;
use crate::emulator::{EncodedNet, ExecutorPolicy, MoveEvent};
use crate::hlpn::{Functions, Policy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopConfig {
    /// Move-steps between cycles.
    pub period: u64,
    /// Executions allowed per cycle.
    pub max_hops: usize,
    pub executor: ExecutorPolicy,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            period: 1,
            max_hops: 1,
            executor: ExecutorPolicy::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    /// Records written by whoever drives the loop, outside any cycle.
    Run,
    Managed,
    Environment,
    Monitor,
    Analyzer,
    Planner,
    Executor,
}

/// One trace record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopEvent {
    pub cycle: u64,
    pub zone: Zone,
    pub kind: String,
    pub payload: serde_json::Value,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopStats {
    pub steps: u64,
    pub cycles: u64,
    pub moves: u64,
    pub planner_invocations: u64,
    pub adaptations: u64,
}

pub struct ManagingLoop {
    encoding: EncodedNet,
    kb: KnowledgeBase,
    quantifiers: Vec<Box<dyn Quantifier>>,
    plan_source: Box<dyn PlanSource>,
    policy: Policy,
    fns: Functions,
    config: LoopConfig,
    init_m: Vec<MoveEvent>,
    analysis_zone: BTreeMap<String, QualityRecord>,
    plausible_plan: Option<Plan>,
    stats: LoopStats,
    log: Vec<LoopEvent>,
}

impl ManagingLoop {
    pub fn new(
        encoding: EncodedNet,
        kb: KnowledgeBase,
        quantifiers: Vec<Box<dyn Quantifier>>,
        plan_source: Box<dyn PlanSource>,
        policy: Policy,
        fns: Functions,
        config: LoopConfig,
    ) -> Self {
        ManagingLoop {
            encoding,
            kb,
            quantifiers,
            plan_source,
            policy,
            fns,
            config,
            init_m: Vec::new(),
            analysis_zone: BTreeMap::new(),
            plausible_plan: None,
            stats: LoopStats::default(),
            log: Vec::new(),
        }
    }

    pub fn encoding(&self) -> &EncodedNet {
        &self.encoding
    }

    pub fn knowledge(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn stats(&self) -> &LoopStats {
        &self.stats
    }

    pub fn events(&self) -> &[LoopEvent] {
        &self.log
    }

    pub fn plausible_plan(&self) -> Option<&Plan> {
        self.plausible_plan.as_ref()
    }

    /// Quality records held by the monitor and analyzer zones.
    pub fn quality_zones(
        &self,
    ) -> (
        &BTreeMap<String, QualityRecord>,
        &BTreeMap<String, QualityRecord>,
    ) {
        (&self.kb.quality, &self.analysis_zone)
    }

    /// Let the environment rewrite the managed system between steps.
    pub fn perturb<F>(
        &mut self,
        kind: &str,
        payload: serde_json::Value,
        f: F,
    ) -> Result<(), MapekError>
    where
        F: FnOnce(&EncodedNet) -> Result<EncodedNet, MapekError>,
    {
        self.encoding = f(&self.encoding)?;
        self.emit(Zone::Environment, kind, payload);
        Ok(())
    }

    fn emit(&mut self, zone: Zone, kind: &str, payload: serde_json::Value) {
        debug!("cycle {} {:?} {kind}", self.stats.cycles, zone);
        self.log.push(LoopEvent {
            cycle: self.stats.cycles,
            zone,
            kind: kind.to_string(),
            payload,
        });
    }

    pub fn iterate(&mut self, budget: u64) -> Result<(), MapekError> {
        for _ in 0..budget {
            self.step()?;
        }
        Ok(())
    }

    /// Run the cycle when due, then one move of the managed system.
    pub fn step(&mut self) -> Result<(), MapekError> {
        if self.stats.steps % self.config.period.max(1) == 0 {
            self.cycle()?;
        }
        let (next, fired) = self.encoding.fire_move(&mut self.policy, &self.fns)?;
        self.encoding = next;
        if let Some(ev) = fired {
            self.stats.moves += 1;
            self.emit(Zone::Managed, "move", json!(ev));
            self.init_m.push(ev);
        }
        self.stats.steps += 1;
        Ok(())
    }

    /// One monitor/analyze pass with planning and execution when required.
    pub fn cycle(&mut self) -> Result<(), MapekError> {
        let consumed = mem::take(&mut self.init_m).len();
        let mut hops = Vec::new();
        loop {
            let report = monitor(
                &mut self.kb,
                &self.encoding,
                &self.quantifiers,
                self.stats.steps,
            )?;
            self.emit(
                Zone::Monitor,
                "quality",
                json!({
                    "moves": consumed,
                    "records": self.kb.quality.values().collect::<Vec<_>>(),
                    "failures": report.failures,
                }),
            );

            // startA: records leave the monitor zone for the analyzer zone
            self.analysis_zone = mem::take(&mut self.kb.quality);
            let verdicts = verification(&self.analysis_zone, &self.kb.thresholds);
            let elems = match &verdicts {
                Ok(v) if adaptation_required(v) => Some(determine_influential_elements(
                    v,
                    &self.quantifiers,
                    &self.kb.snapshot,
                )),
                _ => None,
            };
            self.kb.quality = mem::take(&mut self.analysis_zone);
            let verdicts = verdicts?;
            let Some(elems) = elems.transpose()? else {
                break;
            };
            self.emit(
                Zone::Analyzer,
                "violation",
                json!({
                    "violated": verdicts.iter().filter(|v| v.violated).map(|v| &v.record).collect::<Vec<_>>(),
                    "elements": elems,
                }),
            );
            if hops.len() >= self.config.max_hops {
                self.emit(Zone::Planner, "hop-limit", json!({ "hops": hops.len() }));
                break;
            }

            // startP
            self.stats.planner_invocations += 1;
            self.kb.plans = self.plan_source.plans(&self.kb.snapshot, &elems);
            let cands = select_candidate_plans(&self.kb.plans, &elems, &self.fns);
            if cands.is_empty() {
                self.emit(Zone::Planner, "no-plan", json!({ "elements": elems }));
                break;
            }
            let scored = calculate_plans_plausibility(&cands, &self.kb.thresholds);
            let best = select_plausible_plan(&scored).expect("nonempty").clone();
            self.emit(
                Zone::Planner,
                "candidates",
                json!(scored
                    .iter()
                    .map(
                        |s| json!({ "plan": s.plan.id, "score": s.score, "defaulted": s.defaulted })
                    )
                    .collect::<Vec<_>>()),
            );
            self.plausible_plan = Some(best.plan.clone());

            match execute(&best.plan, &self.encoding, self.config.executor) {
                Ok(next) => {
                    info!("executed plan {} (score {})", best.plan.id, best.score);
                    self.encoding = next;
                    hops.push(json!({
                        "plan": best.plan.id,
                        "score": best.score,
                        "actions": best.plan.actions,
                    }));
                }
                Err(err) => {
                    self.emit(
                        Zone::Executor,
                        "rejected",
                        json!({ "plan": best.plan.id, "error": err.to_string() }),
                    );
                    break;
                }
            }
        }
        if !hops.is_empty() {
            self.stats.adaptations += 1;
            self.emit(Zone::Executor, "adaptation", json!({ "hops": hops }));
        }
        self.stats.cycles += 1;
        Ok(())
    }
}
