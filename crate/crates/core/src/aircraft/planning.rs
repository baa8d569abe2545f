//! Release times, resource selection and plan rewrites.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::model::{Aircraft, Airport, Dim, GateId, ResourceId, ResourceState, SeparationTable};
use super::safety::entry_time;
use super::AircraftError;
use crate::hlpn::{Minutes, Time};

/// The most recent occupant of each resource before some incoming aircraft.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LastInRecord {
    pub runway: BTreeMap<u32, Aircraft>,
    pub gateway: BTreeMap<u32, Aircraft>,
    pub gate: BTreeMap<GateId, Aircraft>,
}

impl LastInRecord {
    /// Per resource, the latest other aircraft whose entry time does not
    /// exceed the incoming aircraft's entry time for that phase.
    pub fn derive(plan: &[Aircraft], incoming: &Aircraft) -> Self {
        let mut rec = LastInRecord::default();
        for a in plan.iter().filter(|a| a.id != incoming.id) {
            if a.tr <= incoming.tr {
                keep_latest(&mut rec.runway, a.runway, a, Dim::Runway);
            }
            if a.tg <= incoming.tg {
                keep_latest(&mut rec.gateway, a.gateway, a, Dim::Gateway);
            }
            if a.tk <= incoming.tk {
                keep_latest(&mut rec.gate, a.gate, a, Dim::Gate);
            }
        }
        rec
    }

    pub fn get(&self, r: ResourceId) -> Option<&Aircraft> {
        match r {
            ResourceId::Runway(x) => self.runway.get(&x),
            ResourceId::Gateway(x) => self.gateway.get(&x),
            ResourceId::Gate(x) => self.gate.get(&x),
        }
    }
}

fn keep_latest<K: Ord>(map: &mut BTreeMap<K, Aircraft>, key: K, a: &Aircraft, dim: Dim) {
    let newer = map.get(&key).map_or(true, |b| {
        (entry_time(b, dim), b.id) < (entry_time(a, dim), a.id)
    });
    if newer {
        map.insert(key, a.clone());
    }
}

/// Earliest time `r` can take `incoming`: `tr + s` for runways, `tg + s`
/// for gateways, the leader's exit time for gates. Unused resources are
/// free from midnight.
pub fn compute_release(
    r: ResourceId,
    last: &LastInRecord,
    sep: &SeparationTable,
    incoming: &Aircraft,
) -> Time {
    let Some(prev) = last.get(r) else {
        return Time::MIDNIGHT;
    };
    let s = sep.get(prev.category, incoming.category);
    let released = match r.dim() {
        Dim::Runway => prev.tr.checked_add(s),
        Dim::Gateway => prev.tg.checked_add(s),
        Dim::Gate => Some(prev.tf),
    };
    released.unwrap_or(Time::from_minutes(u32::MAX))
}

/// The time the incoming aircraft needs the resource, compared strictly
/// against the release time. For runways this is `ts + t`.
pub fn demand_time(a: &Aircraft, dim: Dim) -> Time {
    match dim {
        Dim::Runway => a.ts.checked_add(a.t).unwrap_or(a.tr),
        Dim::Gateway => a.tg,
        Dim::Gate => a.tk,
    }
}

/// Among operational resources released strictly before the aircraft needs
/// them, the one released earliest; ties go to the smaller id.
pub fn select_resource(
    incoming: &Aircraft,
    candidates: &[ResourceId],
    airport: &Airport,
    last: &LastInRecord,
    sep: &SeparationTable,
) -> Option<ResourceId> {
    candidates
        .iter()
        .filter(|r| {
            airport
                .state(**r)
                .is_some_and(|s| s != ResourceState::Inoperative)
        })
        .map(|r| (compute_release(*r, last, sep, incoming), *r))
        .filter(|(f, r)| demand_time(incoming, r.dim()) > *f)
        .min()
        .map(|(_, r)| r)
}

pub fn select_runway(
    incoming: &Aircraft,
    airport: &Airport,
    last: &LastInRecord,
    sep: &SeparationTable,
) -> Option<u32> {
    match select_resource(
        incoming,
        &airport.resources(Dim::Runway),
        airport,
        last,
        sep,
    )? {
        ResourceId::Runway(r) => Some(r),
        _ => None,
    }
}

pub fn select_gateway(
    incoming: &Aircraft,
    airport: &Airport,
    last: &LastInRecord,
    sep: &SeparationTable,
) -> Option<u32> {
    match select_resource(
        incoming,
        &airport.resources(Dim::Gateway),
        airport,
        last,
        sep,
    )? {
        ResourceId::Gateway(g) => Some(g),
        _ => None,
    }
}

pub fn select_gate(
    incoming: &Aircraft,
    airport: &Airport,
    last: &LastInRecord,
    sep: &SeparationTable,
) -> Option<GateId> {
    match select_resource(incoming, &airport.resources(Dim::Gate), airport, last, sep)? {
        ResourceId::Gate(g) => Some(g),
        _ => None,
    }
}

fn offset(later: Time, earlier: Time, id: u32) -> Result<Minutes, AircraftError> {
    u32::try_from(later.since(earlier))
        .map(Minutes)
        .map_err(|_| AircraftError::TimeOrder(id))
}

/// Move `a` to new resources with sequencing time `now`. Every later time
/// keeps its original offset from the one before it, so each occupancy
/// interval keeps its length.
pub fn apply_reassignment(
    a: &Aircraft,
    resources: &[ResourceId],
    now: Time,
) -> Result<Aircraft, AircraftError> {
    let to_tr = offset(a.tr, a.ts, a.id)?;
    let to_tg = offset(a.tg, a.tr, a.id)?;
    let to_tk = offset(a.tk, a.tg, a.id)?;
    let to_tf = offset(a.tf, a.tk, a.id)?;
    let overflow = || AircraftError::TimeOrder(a.id);
    let mut out = a.clone();
    for r in resources {
        out = out.with_resource(*r);
    }
    out.ts = now;
    out.tr = now.checked_add(to_tr).ok_or_else(overflow)?;
    out.tg = out.tr.checked_add(to_tg).ok_or_else(overflow)?;
    out.tk = out.tg.checked_add(to_tk).ok_or_else(overflow)?;
    out.tf = out.tk.checked_add(to_tf).ok_or_else(overflow)?;
    out.check_order()?;
    Ok(out)
}

/// The aircraft shows up at the sequencing point at `ts` instead.
pub fn delay(a: &Aircraft, ts: Time) -> Result<Aircraft, AircraftError> {
    apply_reassignment(a, &[], ts)
}

/// Swap every not-yet-landed aircraft onto the opposite runway.
pub fn wind_change<F>(
    plan: &[Aircraft],
    not_yet_landed: F,
    airport: &Airport,
) -> Result<Vec<Aircraft>, AircraftError>
where
    F: Fn(&Aircraft) -> bool,
{
    plan.iter()
        .map(|a| {
            if !not_yet_landed(a) {
                return Ok(a.clone());
            }
            let er = airport
                .opposite(a.runway)
                .ok_or(AircraftError::MissingOpposite(a.runway))?;
            Ok(a.with_resource(ResourceId::Runway(er)))
        })
        .collect()
}
