//! Environment perturbations applied to the encoded arrival net.

use super::config::EventKind;
use super::ScenarioError;
use crate::aircraft::places::*;
use crate::aircraft::{
    changed_token, delay, gate_token, gateway_token, runway_token, CaseView, Dim, Phase, ResourceId,
};
use crate::emulator::EncodedNet;
use crate::hlpn::Value;

fn event_err(at: u64, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Event {
        at,
        message: message.into(),
    }
}

/// Apply one event at step `at`. Rescheduled aircraft are marked in
/// `Changed` for every resource kind still ahead of them.
pub fn apply_event(e: &EncodedNet, kind: &EventKind, at: u64) -> Result<EncodedNet, ScenarioError> {
    let v = CaseView::from_encoding(e)?;
    match kind {
        EventKind::Delay { aircraft, ts } => {
            let a = v
                .aircraft(*aircraft)
                .ok_or_else(|| event_err(at, format!("unknown aircraft {aircraft}")))?;
            if !v.pending(a.id, Dim::Runway) {
                return Err(event_err(
                    at,
                    format!("aircraft {aircraft} has already landed"),
                ));
            }
            let moved = delay(a, *ts)?;
            reschedule(e, &v, a.to_value(), moved.to_value(), a.id)
        }
        EventKind::Arrival { aircraft, ts } => {
            let a = v
                .aircraft(*aircraft)
                .ok_or_else(|| event_err(at, format!("unknown aircraft {aircraft}")))?;
            if v.phase(a.id) != Phase::Planned {
                return Err(event_err(
                    at,
                    format!("aircraft {aircraft} is already under way"),
                ));
            }
            let e = e.add_token(APPROACH, Value::int(i64::from(a.id)))?;
            match ts {
                Some(ts) => {
                    let moved = delay(a, *ts)?;
                    reschedule(&e, &v, a.to_value(), moved.to_value(), a.id)
                }
                None => Ok(e),
            }
        }
        EventKind::WindChange { wind } => {
            let next = wind.unwrap_or(if v.wind == 0 { 1 } else { 0 });
            Ok(e.set_tokens(WIND, [Value::int(next)].into_iter().collect())?)
        }
        EventKind::ResourceState { resource, state } => {
            let mut ap = v.airport.clone();
            ap.set_state(*resource, *state)
                .map_err(|err| event_err(at, err.to_string()))?;
            let (place, tokens) = match resource {
                ResourceId::Runway(_) => (RUNWAYS, ap.runways.iter().map(runway_token).collect()),
                ResourceId::Gateway(_) => {
                    (GATEWAYS, ap.gateways.iter().map(gateway_token).collect())
                }
                ResourceId::Gate(_) => (GATES, ap.gates.iter().map(gate_token).collect()),
            };
            Ok(e.set_tokens(place, tokens)?)
        }
    }
}

fn reschedule(
    e: &EncodedNet,
    v: &CaseView,
    old: Value,
    new: Value,
    id: u32,
) -> Result<EncodedNet, ScenarioError> {
    let mut e = e.remove_token(PLANNING, &old)?.add_token(PLANNING, new)?;
    for dim in Dim::ALL {
        if v.pending(id, dim) && !v.changed.contains(&(id, dim)) {
            e = e.add_token(CHANGED, changed_token(id, dim))?;
        }
    }
    Ok(e)
}
