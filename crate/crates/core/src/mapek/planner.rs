//! Plan library, candidate selection and plausibility scoring.
//!
//! A plan's score is the product, over monitored qualities, of the mass its
//! predicted side-effect distribution puts on the satisfying side of the
//! threshold. A plan with no prediction for some quality gets factor 1 for
//! it and the quality is reported as defaulted.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use super::knowledge::{InfluentialElement, Snapshot, Threshold};
use crate::hlpn::{
    evaluate, Annotation, Binding, Direction, Expr, Functions, PlaceDecl, TokenMultiset, Value,
};
use crate::ppn::StateOfInformation;

/// One write primitive invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum Action {
    SetTokens {
        place: String,
        tokens: TokenMultiset,
    },
    AddToken {
        place: String,
        token: Value,
    },
    RemoveToken {
        place: String,
        token: Value,
    },
    SetArcAnnotation {
        place: String,
        transition: String,
        direction: Direction,
        annotation: Annotation,
    },
    AddPlace {
        decl: PlaceDecl,
    },
    RemovePlace {
        place: String,
    },
}

impl Action {
    pub fn is_structural(&self) -> bool {
        matches!(self, Action::AddPlace { .. } | Action::RemovePlace { .. })
    }
}

/// A condition/action rule. The condition sees one influential element at a
/// time through the variables `kind` and `ref`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub id: String,
    pub condition: Expr,
    pub actions: Vec<Action>,
    pub side_effects: BTreeMap<String, StateOfInformation>,
}

impl Plan {
    pub fn applies_to(&self, elem: &InfluentialElement, fns: &Functions) -> bool {
        let b = Binding::new()
            .with("kind", Value::Sym(elem.kind.clone()))
            .with("ref", elem.reference.clone());
        matches!(evaluate(&self.condition, &b, fns), Ok(Value::Bool(true)))
    }
}

/// Supplies the plan library for a cycle.
pub trait PlanSource {
    fn plans(&mut self, snapshot: &Snapshot, elems: &[InfluentialElement]) -> Vec<Plan>;
}

/// A fixed library.
#[derive(Clone, Debug, Default)]
pub struct StaticPlans(pub Vec<Plan>);

impl PlanSource for StaticPlans {
    fn plans(&mut self, _: &Snapshot, _: &[InfluentialElement]) -> Vec<Plan> {
        self.0.clone()
    }
}

/// Plans whose condition holds for some element, in id order.
pub fn select_candidate_plans(
    plans: &[Plan],
    elems: &[InfluentialElement],
    fns: &Functions,
) -> Vec<Plan> {
    let mut out: Vec<Plan> = plans
        .iter()
        .filter(|p| elems.iter().any(|e| p.applies_to(e, fns)))
        .cloned()
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    if out.is_empty() {
        warn!(
            "no applicable plan for {} influential element(s)",
            elems.len()
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredPlan {
    pub plan: Plan,
    pub score: f64,
    /// Monitored qualities the plan makes no prediction for.
    pub defaulted: Vec<String>,
}

pub fn plausibility(plan: &Plan, thresholds: &BTreeMap<String, Threshold>) -> (f64, Vec<String>) {
    let mut score = 1.0;
    let mut defaulted = Vec::new();
    for (q, th) in thresholds {
        match plan.side_effects.get(q) {
            Some(soi) => score *= th.satisfying_mass(soi),
            None => defaulted.push(q.clone()),
        }
    }
    (score.clamp(0.0, 1.0), defaulted)
}

pub fn calculate_plans_plausibility(
    cands: &[Plan],
    thresholds: &BTreeMap<String, Threshold>,
) -> Vec<ScoredPlan> {
    cands
        .iter()
        .map(|p| {
            let (score, defaulted) = plausibility(p, thresholds);
            ScoredPlan {
                plan: p.clone(),
                score,
                defaulted,
            }
        })
        .collect()
}

/// Highest score; ties go to the smaller id.
pub fn select_plausible_plan(scored: &[ScoredPlan]) -> Option<&ScoredPlan> {
    scored.iter().min_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.plan.id.cmp(&b.plan.id))
    })
}

/// Index of the argmax over raw scores with the same tie rule.
pub fn argmax(scores: &[(String, f64)]) -> Option<usize> {
    (0..scores.len()).min_by(|&i, &j| {
        let (a, b) = (&scores[i], &scores[j]);
        match b.1.total_cmp(&a.1) {
            Ordering::Equal => a.0.cmp(&b.0),
            o => o,
        }
    })
}
