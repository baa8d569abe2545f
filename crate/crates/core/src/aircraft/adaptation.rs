//! Quality quantifiers and the replanning library for the arrival net.
//!
//! Safety qualities are margins in minutes (gap minus required separation,
//! or follower entry minus leader exit for gates), taken over aircraft
//! marked in `Changed` that still have the resource kind ahead of them. A
//! quality is satisfied when its margin is positive. With nothing marked the
//! value is the cap, one day.
//!
//! Predictions for candidate plans are point values wrapped as Dirac states
//! on a one-minute grid over `[-cap, cap]`.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;

use super::model::{
    id_of, Aircraft, Airport, Dim, Phase, ResourceId, ResourceState, SeparationTable,
};
use super::net::places::*;
use super::net::{
    airport_from, changed_token, clearance, clearance_place, clearance_token, phases_from,
    plan_from_tokens,
};
use super::planning::{compute_release, wind_change, LastInRecord};
use super::safety::{margin, neighbour_margins};
use super::AircraftError;
use crate::emulator::EncodedNet;
use crate::hlpn::{Expr, TokenMultiset, Value};
use crate::mapek::{
    Action, Comparison, InfluentialElement, Plan, PlanSource, Quantifier, Snapshot, Threshold,
};
use crate::ppn::{Grid, StateOfInformation};

/// One day in minutes: the largest margin a quality reports.
pub const MARGIN_CAP: i64 = 1440;

pub const RESOURCE_AVAILABILITY: &str = "resource-availability";
pub const WIND_ALIGNMENT: &str = "wind-alignment";
pub const MIN_LANDING_GAP: &str = "min-landing-gap";
pub const WIND_SWAP: &str = "wind-swap";

/// Places the monitor copies from the managed net.
pub const SYSTEM_PLACES: [&str; 11] = [
    PLANNING, APPROACH, APPROACHED, SEQUENCED, LANDED, TAXIED, PARKED, PLANED_RW, PLANED_GW,
    PLANED_G, CHANGED,
];
/// Places the monitor copies from the environment.
pub const ENVIRONMENT_PLACES: [&str; 5] = [RUNWAYS, GATEWAYS, GATES, WIND, PLANNED_WIND];

pub fn margin_grid() -> Grid {
    Grid::new(
        -(MARGIN_CAP as f64),
        MARGIN_CAP as f64,
        2 * MARGIN_CAP as usize,
    )
    .expect("static grid is valid")
}

pub fn point(x: i64) -> StateOfInformation {
    StateOfInformation::dirac(margin_grid(), clamp(x) as f64)
}

fn clamp(x: i64) -> i64 {
    x.clamp(-MARGIN_CAP, MARGIN_CAP)
}

/// Thresholds for the default quantifier set.
pub fn default_thresholds() -> BTreeMap<String, Threshold> {
    let mut t = BTreeMap::new();
    for dim in Dim::ALL {
        t.insert(
            dim.quality().to_string(),
            Threshold::new(Comparison::Above, 0.0),
        );
    }
    t.insert(
        RESOURCE_AVAILABILITY.to_string(),
        Threshold::new(Comparison::AtMost, 0.0),
    );
    t.insert(
        WIND_ALIGNMENT.to_string(),
        Threshold::new(Comparison::AtMost, 0.0),
    );
    t
}

/// The case-study state as read from a snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseView {
    pub plan: Vec<Aircraft>,
    pub phases: BTreeMap<u32, Phase>,
    pub airport: Airport,
    pub changed: BTreeSet<(u32, Dim)>,
    pub clearances: BTreeMap<(u32, Dim), ResourceId>,
    pub wind: i64,
    pub planned_wind: i64,
}

fn single_int(m: &TokenMultiset, place: &str) -> Result<i64, AircraftError> {
    m.distinct()
        .next()
        .and_then(Value::as_int)
        .ok_or_else(|| AircraftError::Parse(format!("{place} holds no integer")))
}

impl CaseView {
    pub fn read<F>(tokens: F) -> Result<Self, AircraftError>
    where
        F: Fn(&str) -> TokenMultiset,
    {
        let plan = plan_from_tokens(&tokens(PLANNING))?;
        let phases = phases_from(&tokens)?;
        let mut airport = airport_from(&tokens(RUNWAYS), &tokens(GATEWAYS), &tokens(GATES))?;
        airport.runways.sort_by_key(|r| r.id);
        airport.gateways.sort_by_key(|g| g.id);
        airport.gates.sort_by_key(|g| g.id);
        let mut changed = BTreeSet::new();
        for t in tokens(CHANGED).distinct() {
            match t.as_tuple() {
                Some([id, dim]) => {
                    let dim: Dim = dim
                        .as_sym()
                        .ok_or_else(|| AircraftError::Parse(format!("mark {t}")))?
                        .as_str()
                        .parse()?;
                    changed.insert((id_of(id)?, dim));
                }
                _ => return Err(AircraftError::Parse(format!("mark {t}"))),
            }
        }
        let mut clearances = BTreeMap::new();
        for dim in Dim::ALL {
            let held = tokens(clearance_place(dim));
            for a in &plan {
                if let Some(r) = clearance(&held, a.id, dim) {
                    clearances.insert((a.id, dim), r);
                }
            }
        }
        Ok(CaseView {
            plan,
            phases,
            airport,
            changed,
            clearances,
            wind: single_int(&tokens(WIND), WIND)?,
            planned_wind: single_int(&tokens(PLANNED_WIND), PLANNED_WIND)?,
        })
    }

    pub fn from_snapshot(s: &Snapshot) -> Result<Self, AircraftError> {
        Self::read(|p| s.tokens(p))
    }

    pub fn from_encoding(e: &EncodedNet) -> Result<Self, AircraftError> {
        Self::read(|p| e.get_tokens(p).unwrap_or_default())
    }

    pub fn phase(&self, id: u32) -> Phase {
        self.phases.get(&id).copied().unwrap_or_default()
    }

    /// The aircraft still has to use a resource of this kind.
    pub fn pending(&self, id: u32, dim: Dim) -> bool {
        !self.phase(id).completed(dim)
    }

    pub fn aircraft(&self, id: u32) -> Option<&Aircraft> {
        self.plan.iter().find(|a| a.id == id)
    }

    /// Marked aircraft still facing `dim`, with their clamped margins.
    pub fn marked_margins(&self, dim: Dim, sep: &SeparationTable) -> Vec<(u32, i64)> {
        self.changed
            .iter()
            .filter(|(id, d)| *d == dim && self.pending(*id, dim))
            .filter_map(|(id, _)| self.aircraft(*id))
            .map(|a| {
                (
                    a.id,
                    clamp(margin(a, &self.plan, dim, sep).unwrap_or(MARGIN_CAP)),
                )
            })
            .collect()
    }

    /// Pending (aircraft, kind) pairs whose assigned resource is inoperative.
    pub fn blocked(&self) -> Vec<(u32, Dim)> {
        let mut out = Vec::new();
        for a in &self.plan {
            for dim in Dim::ALL {
                if self.pending(a.id, dim)
                    && self.airport.state(a.resource(dim)) == Some(ResourceState::Inoperative)
                {
                    out.push((a.id, dim));
                }
            }
        }
        out
    }

    /// Aircraft whose runway assignment follows the planned orientation
    /// while the wind says otherwise.
    pub fn misaligned(&self) -> Vec<u32> {
        if self.wind == self.planned_wind {
            return Vec::new();
        }
        self.plan
            .iter()
            .filter(|a| self.pending(a.id, Dim::Runway))
            .map(|a| a.id)
            .collect()
    }
}

fn resource_element(dim: Dim, r: ResourceId, id: u32) -> InfluentialElement {
    InfluentialElement::new(
        "resource",
        Value::tuple([
            Value::sym(dim.as_str()),
            r.id_value(),
            Value::int(i64::from(id)),
        ]),
    )
}

fn parse_resource_element(e: &InfluentialElement) -> Option<(Dim, u32)> {
    if e.kind.as_str() != "resource" {
        return None;
    }
    match e.reference.as_tuple()? {
        [dim, _, id] => Some((dim.as_sym()?.as_str().parse().ok()?, id_of(id).ok()?)),
        _ => None,
    }
}

fn view(s: &Snapshot) -> Result<CaseView, String> {
    CaseView::from_snapshot(s).map_err(|e| e.to_string())
}

/// Smallest safety margin of marked aircraft on one resource kind.
#[derive(Clone, Debug)]
pub struct SafetyQuantifier {
    pub dim: Dim,
    pub sep: SeparationTable,
}

impl Quantifier for SafetyQuantifier {
    fn name(&self) -> &str {
        self.dim.quality()
    }

    fn quantify(&self, s: &Snapshot) -> Result<Value, String> {
        let v = view(s)?;
        let m = v
            .marked_margins(self.dim, &self.sep)
            .into_iter()
            .map(|(_, m)| m)
            .min()
            .unwrap_or(MARGIN_CAP);
        Ok(Value::int(m))
    }

    fn attribution(&self, s: &Snapshot) -> Option<Vec<InfluentialElement>> {
        let v = view(s).ok()?;
        Some(
            v.marked_margins(self.dim, &self.sep)
                .into_iter()
                .filter(|(_, m)| *m <= 0)
                .filter_map(|(id, _)| v.aircraft(id))
                .map(|a| resource_element(self.dim, a.resource(self.dim), a.id))
                .collect(),
        )
    }
}

/// Number of pending assignments to inoperative resources.
#[derive(Clone, Copy, Debug, Default)]
pub struct AvailabilityQuantifier;

impl Quantifier for AvailabilityQuantifier {
    fn name(&self) -> &str {
        RESOURCE_AVAILABILITY
    }

    fn quantify(&self, s: &Snapshot) -> Result<Value, String> {
        Ok(Value::int(view(s)?.blocked().len() as i64))
    }

    fn attribution(&self, s: &Snapshot) -> Option<Vec<InfluentialElement>> {
        let v = view(s).ok()?;
        Some(
            v.blocked()
                .into_iter()
                .filter_map(|(id, dim)| {
                    let a = v.aircraft(id)?;
                    Some(resource_element(dim, a.resource(dim), id))
                })
                .collect(),
        )
    }
}

/// Number of aircraft still to land against the wind.
#[derive(Clone, Copy, Debug, Default)]
pub struct WindAlignmentQuantifier;

impl Quantifier for WindAlignmentQuantifier {
    fn name(&self) -> &str {
        WIND_ALIGNMENT
    }

    fn quantify(&self, s: &Snapshot) -> Result<Value, String> {
        Ok(Value::int(view(s)?.misaligned().len() as i64))
    }

    fn attribution(&self, s: &Snapshot) -> Option<Vec<InfluentialElement>> {
        let v = view(s).ok()?;
        Some(vec![InfluentialElement::new(
            "environment",
            Value::pair(Value::sym("wind"), Value::int(v.wind)),
        )])
    }
}

/// Smallest landing interval between consecutive aircraft on one runway.
#[derive(Clone, Copy, Debug, Default)]
pub struct MinLandingGap;

impl MinLandingGap {
    pub fn of(plan: &[Aircraft]) -> i64 {
        let mut by_runway: BTreeMap<u32, Vec<&Aircraft>> = BTreeMap::new();
        for a in plan {
            by_runway.entry(a.runway).or_default().push(a);
        }
        by_runway
            .values_mut()
            .flat_map(|on| {
                on.sort_by_key(|a| (a.tr, a.id));
                on.windows(2)
                    .map(|w| w[1].tr.since(w[0].tr))
                    .collect::<Vec<_>>()
            })
            .min()
            .unwrap_or(MARGIN_CAP)
    }
}

impl Quantifier for MinLandingGap {
    fn name(&self) -> &str {
        MIN_LANDING_GAP
    }

    fn quantify(&self, s: &Snapshot) -> Result<Value, String> {
        let plan = plan_from_tokens(&s.tokens(PLANNING)).map_err(|e| e.to_string())?;
        Ok(Value::int(Self::of(&plan)))
    }
}

/// The wind token, read as is.
#[derive(Clone, Copy, Debug, Default)]
pub struct WindReading;

impl Quantifier for WindReading {
    fn name(&self) -> &str {
        WIND
    }

    fn quantify(&self, s: &Snapshot) -> Result<Value, String> {
        s.tokens(WIND)
            .distinct()
            .next()
            .cloned()
            .ok_or_else(|| "no wind token".to_string())
    }
}

/// Safety for each resource kind, availability and wind alignment.
pub fn default_quantifiers(sep: &SeparationTable) -> Vec<Box<dyn Quantifier>> {
    let mut q: Vec<Box<dyn Quantifier>> = Dim::ALL
        .into_iter()
        .map(|dim| {
            Box::new(SafetyQuantifier {
                dim,
                sep: sep.clone(),
            }) as Box<dyn Quantifier>
        })
        .collect();
    q.push(Box::new(AvailabilityQuantifier));
    q.push(Box::new(WindAlignmentQuantifier));
    q
}

/// Generates reassignment plans for the earliest aircraft named by a
/// violation, and the runway swap when the wind has turned.
#[derive(Clone, Debug, Default)]
pub struct ArrivalPlanner {
    pub sep: SeparationTable,
}

impl ArrivalPlanner {
    pub fn new(sep: SeparationTable) -> Self {
        ArrivalPlanner { sep }
    }

    fn id_fragment(dim: Dim, f: crate::hlpn::Time, r: ResourceId) -> String {
        let tag = match dim {
            Dim::Runway => "rw",
            Dim::Gateway => "gw",
            Dim::Gate => "gt",
        };
        match r {
            ResourceId::Runway(x) | ResourceId::Gateway(x) => {
                format!("{tag}{:05}.{x:03}", f.minutes())
            }
            ResourceId::Gate(g) => format!("{tag}{:05}.{:03}.{:03}", f.minutes(), g.k, g.d),
        }
    }

    /// Reassignment plans for one aircraft over the given resource kinds,
    /// one per combination of alternative resources.
    pub fn reassignments(&self, v: &CaseView, focal: u32, dims: &[Dim]) -> Vec<Plan> {
        let Some(a) = v.aircraft(focal).cloned() else {
            return Vec::new();
        };
        let last = LastInRecord::derive(&v.plan, &a);
        let mut combos: Vec<Vec<(Dim, ResourceId)>> = vec![Vec::new()];
        for &dim in dims {
            let current = a.resource(dim);
            let options: Vec<ResourceId> = v
                .airport
                .resources(dim)
                .into_iter()
                .filter(|r| {
                    *r != current && v.airport.state(*r) != Some(ResourceState::Inoperative)
                })
                .collect();
            if options.is_empty() {
                warn!("no alternative {dim} for aircraft {focal}");
                continue;
            }
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    options.iter().map(move |r| {
                        let mut next = c.clone();
                        next.push((dim, *r));
                        next
                    })
                })
                .collect();
        }
        combos
            .into_iter()
            .filter(|c| !c.is_empty())
            .map(|c| self.reassignment(v, &a, &last, &c))
            .collect()
    }

    fn reassignment(
        &self,
        v: &CaseView,
        a: &Aircraft,
        last: &LastInRecord,
        choice: &[(Dim, ResourceId)],
    ) -> Plan {
        let mut id = format!("a{:03}", a.id);
        let mut moved = a.clone();
        for (dim, r) in choice {
            let f = compute_release(*r, last, &self.sep, a);
            id.push('/');
            id.push_str(&Self::id_fragment(*dim, f, *r));
            moved = moved.with_resource(*r);
        }
        let others: Vec<Aircraft> = v.plan.iter().filter(|o| o.id != a.id).cloned().collect();
        let mut after = others.clone();
        after.push(moved.clone());

        let mut actions = vec![
            Action::RemoveToken {
                place: PLANNING.into(),
                token: a.to_value(),
            },
            Action::AddToken {
                place: PLANNING.into(),
                token: moved.to_value(),
            },
        ];
        for (dim, r) in choice {
            if let Some(old) = v.clearances.get(&(a.id, *dim)) {
                actions.push(Action::RemoveToken {
                    place: clearance_place(*dim).into(),
                    token: clearance_token(a.id, *old),
                });
                actions.push(Action::AddToken {
                    place: clearance_place(*dim).into(),
                    token: clearance_token(a.id, *r),
                });
            }
        }

        let mut marks: BTreeSet<(u32, Dim)> = v
            .changed
            .iter()
            .filter(|(id, _)| *id != a.id)
            .copied()
            .collect();
        let mut side_effects = BTreeMap::new();
        for dim in Dim::ALL {
            let mut predicted = MARGIN_CAP;
            if v.pending(a.id, dim) {
                for (n, m) in neighbour_margins(&moved, &others, dim, &self.sep) {
                    predicted = predicted.min(clamp(m));
                    if m <= 0 {
                        // push the conflict on to the neighbour when it can still move
                        if v.pending(n, dim) {
                            marks.insert((n, dim));
                        } else {
                            marks.insert((a.id, dim));
                        }
                    }
                }
            }
            side_effects.insert(dim.quality().to_string(), point(predicted));
        }
        let after_view = CaseView {
            plan: after,
            ..v.clone()
        };
        side_effects.insert(
            RESOURCE_AVAILABILITY.to_string(),
            point(after_view.blocked().len() as i64),
        );
        side_effects.insert(
            WIND_ALIGNMENT.to_string(),
            point(v.misaligned().len() as i64),
        );
        actions.push(Action::SetTokens {
            place: CHANGED.into(),
            tokens: marks_tokens(&marks),
        });

        Plan {
            id,
            condition: Expr::var("kind").eq(Expr::lit(Value::sym("resource"))).and(
                Expr::var("ref")
                    .proj(2)
                    .eq(Expr::lit(Value::int(i64::from(a.id)))),
            ),
            actions,
            side_effects,
        }
    }

    /// Move every aircraft still to land onto the opposite runway.
    pub fn wind_swap(&self, v: &CaseView) -> Result<Plan, AircraftError> {
        let swapped = wind_change(&v.plan, |a| v.pending(a.id, Dim::Runway), &v.airport)?;
        let mut marks = v.changed.clone();
        let mut actions = vec![Action::SetTokens {
            place: PLANNING.into(),
            tokens: swapped.iter().map(Aircraft::to_value).collect(),
        }];
        for (old, new) in v.plan.iter().zip(&swapped) {
            if old.runway == new.runway {
                continue;
            }
            marks.insert((new.id, Dim::Runway));
            if let Some(r) = v.clearances.get(&(old.id, Dim::Runway)) {
                actions.push(Action::RemoveToken {
                    place: PLANED_RW.into(),
                    token: clearance_token(old.id, *r),
                });
                actions.push(Action::AddToken {
                    place: PLANED_RW.into(),
                    token: clearance_token(new.id, new.resource(Dim::Runway)),
                });
            }
        }
        actions.push(Action::SetTokens {
            place: PLANNED_WIND.into(),
            tokens: [Value::int(v.wind)].into_iter().collect(),
        });
        actions.push(Action::SetTokens {
            place: CHANGED.into(),
            tokens: marks_tokens(&marks),
        });
        Ok(Plan {
            id: WIND_SWAP.to_string(),
            condition: Expr::var("kind").eq(Expr::lit(Value::sym("environment"))),
            actions,
            side_effects: [(WIND_ALIGNMENT.to_string(), point(0))]
                .into_iter()
                .collect(),
        })
    }
}

fn marks_tokens(marks: &BTreeSet<(u32, Dim)>) -> TokenMultiset {
    marks.iter().map(|(id, d)| changed_token(*id, *d)).collect()
}

impl PlanSource for ArrivalPlanner {
    fn plans(&mut self, s: &Snapshot, elems: &[InfluentialElement]) -> Vec<Plan> {
        let v = match CaseView::from_snapshot(s) {
            Ok(v) => v,
            Err(e) => {
                warn!("cannot read case state: {e}");
                return Vec::new();
            }
        };
        let mut out = Vec::new();
        let named: Vec<(Dim, u32)> = elems.iter().filter_map(parse_resource_element).collect();
        let focal = named
            .iter()
            .filter_map(|(_, id)| v.aircraft(*id))
            .min_by_key(|a| (a.tr, a.id))
            .map(|a| a.id);
        if let Some(focal) = focal {
            let dims: BTreeSet<Dim> = named
                .iter()
                .filter(|(_, id)| *id == focal)
                .map(|(d, _)| *d)
                .collect();
            let dims: Vec<Dim> = dims.into_iter().collect();
            out.extend(self.reassignments(&v, focal, &dims));
        }
        if elems.iter().any(|e| e.kind.as_str() == "environment") {
            match self.wind_swap(&v) {
                Ok(p) => out.push(p),
                Err(e) => warn!("wind swap unavailable: {e}"),
            }
        }
        out
    }
}
