//! Separation checks. Landing and taxi pairs are safe when the gap strictly
//! exceeds the required separation; a gate pair is safe when the follower
//! arrives strictly after the leader leaves.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::model::{Aircraft, Dim, ResourceId, SeparationTable};
use crate::hlpn::Time;

pub fn check_landing_safety(prev: &Aircraft, next: &Aircraft, sep: &SeparationTable) -> bool {
    next.tr.since(prev.tr) > i64::from(sep.get(prev.category, next.category).0)
}

pub fn check_taxi_safety(prev: &Aircraft, next: &Aircraft, sep: &SeparationTable) -> bool {
    next.tg.since(prev.tg) > i64::from(sep.get(prev.category, next.category).0)
}

pub fn check_gate_safety(prev: &Aircraft, next: &Aircraft) -> bool {
    next.tk > prev.tf
}

/// The time that orders aircraft on a resource of this kind.
pub fn entry_time(a: &Aircraft, dim: Dim) -> Time {
    match dim {
        Dim::Runway => a.tr,
        Dim::Gateway => a.tg,
        Dim::Gate => a.tk,
    }
}

/// `(gap, required)` for a leader/follower pair; safe iff `gap > required`.
pub fn pair_gap(prev: &Aircraft, next: &Aircraft, dim: Dim, sep: &SeparationTable) -> (i64, i64) {
    match dim {
        Dim::Runway => (
            next.tr.since(prev.tr),
            i64::from(sep.get(prev.category, next.category).0),
        ),
        Dim::Gateway => (
            next.tg.since(prev.tg),
            i64::from(sep.get(prev.category, next.category).0),
        ),
        Dim::Gate => (next.tk.since(prev.tf), 0),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub phase: Dim,
    pub resource: ResourceId,
    pub leader: u32,
    pub follower: u32,
    pub gap: i64,
    pub required: i64,
}

impl Violation {
    pub fn involves(&self, id: u32) -> bool {
        self.leader == id || self.follower == id
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.phase {
            Dim::Runway => "landing",
            Dim::Gateway => "taxi",
            Dim::Gate => "gate",
        };
        write!(
            f,
            "{what} on {}: aircraft {} -> {} gap {} min, need > {}",
            self.resource, self.leader, self.follower, self.gap, self.required
        )
    }
}

fn ordered(plan: &[Aircraft], r: ResourceId) -> Vec<&Aircraft> {
    let dim = r.dim();
    let mut on: Vec<&Aircraft> = plan.iter().filter(|a| a.resource(dim) == r).collect();
    on.sort_by_key(|a| (entry_time(a, dim), a.id));
    on
}

/// Check every consecutive pair on every resource.
pub fn plan_safety(plan: &[Aircraft], sep: &SeparationTable) -> Vec<Violation> {
    let mut out = Vec::new();
    for dim in Dim::ALL {
        let mut resources: Vec<ResourceId> = plan.iter().map(|a| a.resource(dim)).collect();
        resources.sort();
        resources.dedup();
        for r in resources {
            for pair in ordered(plan, r).windows(2) {
                let (gap, required) = pair_gap(pair[0], pair[1], dim, sep);
                if gap <= required {
                    out.push(Violation {
                        phase: dim,
                        resource: r,
                        leader: pair[0].id,
                        follower: pair[1].id,
                        gap,
                        required,
                    });
                }
            }
        }
    }
    out
}

/// Margins of `a` against its neighbours on its resource of kind `dim`,
/// with `others` holding the rest of the plan. Each entry is
/// `(neighbour id, gap - required)`; the pair is safe iff the margin is
/// positive.
pub fn neighbour_margins(
    a: &Aircraft,
    others: &[Aircraft],
    dim: Dim,
    sep: &SeparationTable,
) -> Vec<(u32, i64)> {
    let r = a.resource(dim);
    let key = (entry_time(a, dim), a.id);
    let mut pred: Option<&Aircraft> = None;
    let mut succ: Option<&Aircraft> = None;
    for o in others
        .iter()
        .filter(|o| o.id != a.id && o.resource(dim) == r)
    {
        let k = (entry_time(o, dim), o.id);
        if k < key {
            if pred.map_or(true, |p| (entry_time(p, dim), p.id) < k) {
                pred = Some(o);
            }
        } else if succ.map_or(true, |s| k < (entry_time(s, dim), s.id)) {
            succ = Some(o);
        }
    }
    let mut out = Vec::new();
    if let Some(p) = pred {
        let (gap, req) = pair_gap(p, a, dim, sep);
        out.push((p.id, gap - req));
    }
    if let Some(s) = succ {
        let (gap, req) = pair_gap(a, s, dim, sep);
        out.push((s.id, gap - req));
    }
    out
}

/// Smallest neighbour margin, or `None` when the resource is otherwise
/// unused.
pub fn margin(a: &Aircraft, others: &[Aircraft], dim: Dim, sep: &SeparationTable) -> Option<i64> {
    neighbour_margins(a, others, dim, sep)
        .into_iter()
        .map(|(_, m)| m)
        .min()
}
