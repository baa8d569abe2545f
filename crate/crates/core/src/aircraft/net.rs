//! The arrival procedure as a high-level net.
//!
//! An aircraft token moves Approach → Approached → Sequenced → Landed →
//! Taxied → Parked. The planning table lives in `Planning` and is only read;
//! clearances in `planedRw`/`planedGw`/`planedG` are issued one phase ahead
//! and read by the transition that uses the resource, which refuses
//! inoperative resources. `Changed`, `Wind` and `PlannedWind` are not touched
//! by any transition: they carry information for the managing loop.

use std::collections::BTreeMap;

use super::model::{
    id_of, Aircraft, Airport, CaseModel, Dim, Gate, GateId, Gateway, Phase, ResourceId,
    ResourceState, Runway,
};
use super::AircraftError;
use crate::hlpn::{Annotation, Expr, Hlpn, PlaceType, Shape, TokenMultiset, Value};

pub mod places {
    pub const PLANNING: &str = "Planning";
    pub const APPROACH: &str = "Approach";
    pub const APPROACHED: &str = "Approached";
    pub const SEQUENCED: &str = "Sequenced";
    pub const LANDED: &str = "Landed";
    pub const TAXIED: &str = "Taxied";
    pub const PARKED: &str = "Parked";
    pub const SEQUENCE_NBR: &str = "sequenceNbr";
    pub const PLANED_RW: &str = "planedRw";
    pub const PLANED_GW: &str = "planedGw";
    pub const PLANED_G: &str = "planedG";
    pub const RUNWAYS: &str = "Runways";
    pub const GATEWAYS: &str = "Gateways";
    pub const GATES: &str = "Gates";
    pub const CHANGED: &str = "Changed";
    pub const WIND: &str = "Wind";
    pub const PLANNED_WIND: &str = "PlannedWind";

    /// Phase places in procedure order, paired with the phase they hold.
    pub const PHASES: [(&str, super::Phase); 5] = [
        (APPROACHED, super::Phase::Approached),
        (SEQUENCED, super::Phase::Sequenced),
        (LANDED, super::Phase::Landed),
        (TAXIED, super::Phase::Taxied),
        (PARKED, super::Phase::Parked),
    ];
}

use places::*;

fn gate_shape() -> Shape {
    Shape::Tuple(vec![Shape::Int, Shape::Int])
}

fn aircraft_shape() -> Shape {
    use Shape::*;
    Tuple(vec![
        Int,
        Sym,
        Int,
        Int,
        gate_shape(),
        Time,
        Duration,
        Time,
        Time,
        Duration,
        Time,
        Time,
    ])
}

fn pair(a: Shape, b: Shape) -> Shape {
    Shape::Tuple(vec![a, b])
}

fn int(i: u32) -> Value {
    Value::int(i64::from(i))
}

fn v(name: &str) -> Expr {
    Expr::var(name)
}

fn of(e: Expr) -> Annotation {
    Annotation::of(e)
}

fn pt(e: Expr) -> Expr {
    Expr::tuple([v("id"), e])
}

pub fn changed_token(id: u32, dim: Dim) -> Value {
    Value::pair(int(id), Value::sym(dim.as_str()))
}

pub fn runway_token(r: &Runway) -> Value {
    Value::tuple([int(r.id), r.state.to_value(), int(r.opposite)])
}

pub fn gateway_token(g: &Gateway) -> Value {
    Value::pair(int(g.id), g.state.to_value())
}

pub fn gate_token(g: &Gate) -> Value {
    Value::pair(g.id.to_value(), g.state.to_value())
}

pub fn clearance_token(id: u32, r: ResourceId) -> Value {
    Value::pair(int(id), r.id_value())
}

/// The clearance place for a resource kind.
pub fn clearance_place(dim: Dim) -> &'static str {
    match dim {
        Dim::Runway => PLANED_RW,
        Dim::Gateway => PLANED_GW,
        Dim::Gate => PLANED_G,
    }
}

fn check_references(plan: &[Aircraft], model: &CaseModel) -> Result<(), AircraftError> {
    model.airport.validate()?;
    for a in plan {
        a.check_order()?;
        for dim in Dim::ALL {
            let r = a.resource(dim);
            if model.airport.state(r).is_none() {
                return Err(AircraftError::UnknownResource(r));
            }
        }
    }
    for id in model.phases.keys() {
        if !plan.iter().any(|a| a.id == *id) {
            return Err(AircraftError::UnknownAircraft(*id));
        }
    }
    Ok(())
}

/// Build the arrival net for a planning table and airport state.
///
/// Aircraft past the approach phase get sequence numbers in landing order;
/// clearances are issued for every phase the aircraft has entered.
pub fn build_arrival_net(plan: &[Aircraft], model: &CaseModel) -> Result<Hlpn, AircraftError> {
    check_references(plan, model)?;
    let any_id = || Expr::var("id");
    let a_is_id = v("a").proj(0).eq(any_id());
    let operative = |state: &str| v(state).ne(Expr::lit(Value::sym("inoperative")));

    let mut b = Hlpn::builder()
        .place(PLANNING, PlaceType::new("aircraft", aircraft_shape()))
        .place(APPROACH, PlaceType::new("id", Shape::Int));
    for (p, _) in PHASES {
        b = b.place(p, PlaceType::new("sequenced", pair(Shape::Int, Shape::Int)));
    }
    b = b
        .place(SEQUENCE_NBR, PlaceType::new("count", Shape::Int))
        .place(
            PLANED_RW,
            PlaceType::new("clearance", pair(Shape::Int, Shape::Int)),
        )
        .place(
            PLANED_GW,
            PlaceType::new("clearance", pair(Shape::Int, Shape::Int)),
        )
        .place(
            PLANED_G,
            PlaceType::new("clearance", pair(Shape::Int, gate_shape())),
        )
        .place(
            RUNWAYS,
            PlaceType::new(
                "runway",
                Shape::Tuple(vec![Shape::Int, Shape::Sym, Shape::Int]),
            ),
        )
        .place(
            GATEWAYS,
            PlaceType::new("gateway", pair(Shape::Int, Shape::Sym)),
        )
        .place(
            GATES,
            PlaceType::new("gate", pair(gate_shape(), Shape::Sym)),
        )
        .place(
            CHANGED,
            PlaceType::new("mark", pair(Shape::Int, Shape::Sym)),
        )
        .place(WIND, PlaceType::new("orientation", Shape::Int))
        .place(PLANNED_WIND, PlaceType::new("orientation", Shape::Int));

    b = b
        .transition("checkAircraft", a_is_id.clone())
        .input(APPROACH, "checkAircraft", of(any_id()))
        .read(PLANNING, "checkAircraft", of(v("a")))
        .input(SEQUENCE_NBR, "checkAircraft", of(v("n")))
        .output(
            SEQUENCE_NBR,
            "checkAircraft",
            of(v("n").add(Expr::lit(Value::int(1)))),
        )
        .output(APPROACHED, "checkAircraft", of(pt(v("n"))));

    b = b
        .transition("sequence", a_is_id.clone())
        .input(APPROACHED, "sequence", of(pt(v("n"))))
        .read(PLANNING, "sequence", of(v("a")))
        .output(SEQUENCED, "sequence", of(pt(v("n"))))
        .output(PLANED_RW, "sequence", of(pt(v("a").proj(2))));

    b = b
        .transition("land", a_is_id.clone().and(operative("rs")))
        .input(SEQUENCED, "land", of(pt(v("n"))))
        .read(PLANED_RW, "land", of(pt(v("r"))))
        .read(RUNWAYS, "land", of(Expr::tuple([v("r"), v("rs"), v("er")])))
        .read(PLANNING, "land", of(v("a")))
        .output(LANDED, "land", of(pt(v("n"))))
        .output(PLANED_GW, "land", of(pt(v("a").proj(3))));

    b = b
        .transition("taxi", a_is_id.and(operative("gs")))
        .input(LANDED, "taxi", of(pt(v("n"))))
        .read(PLANED_GW, "taxi", of(pt(v("g"))))
        .read(GATEWAYS, "taxi", of(Expr::tuple([v("g"), v("gs")])))
        .read(PLANNING, "taxi", of(v("a")))
        .output(TAXIED, "taxi", of(pt(v("n"))))
        .output(PLANED_G, "taxi", of(pt(v("a").proj(4))));

    b = b
        .transition("park", operative("ks"))
        .input(TAXIED, "park", of(pt(v("n"))))
        .read(PLANED_G, "park", of(pt(v("k"))))
        .read(GATES, "park", of(Expr::tuple([v("k"), v("ks")])))
        .output(PARKED, "park", of(pt(v("n"))));

    b = b
        .tokens(PLANNING, plan.iter().map(Aircraft::to_value))
        .tokens(RUNWAYS, model.airport.runways.iter().map(runway_token))
        .tokens(GATEWAYS, model.airport.gateways.iter().map(gateway_token))
        .tokens(GATES, model.airport.gates.iter().map(gate_token))
        .tokens(WIND, [Value::int(model.wind)])
        .tokens(PLANNED_WIND, [Value::int(model.wind)]);

    let mut progressed: Vec<&Aircraft> = plan
        .iter()
        .filter(|a| model.phase(a.id) >= Phase::Approached)
        .collect();
    progressed.sort_by_key(|a| (a.tr, a.id));
    for a in plan.iter().filter(|a| model.phase(a.id) == Phase::Approach) {
        b = b.tokens(APPROACH, [int(a.id)]);
    }
    for (n, a) in progressed.iter().enumerate() {
        let phase = model.phase(a.id);
        let place = PHASES
            .iter()
            .find(|(_, p)| *p == phase)
            .map(|(name, _)| *name)
            .expect("progressed phases have places");
        b = b.tokens(place, [Value::pair(int(a.id), Value::int(n as i64))]);
        if phase >= Phase::Sequenced {
            b = b.tokens(PLANED_RW, [clearance_token(a.id, a.resource(Dim::Runway))]);
        }
        if phase >= Phase::Landed {
            b = b.tokens(PLANED_GW, [clearance_token(a.id, a.resource(Dim::Gateway))]);
        }
        if phase >= Phase::Taxied {
            b = b.tokens(PLANED_G, [clearance_token(a.id, a.resource(Dim::Gate))]);
        }
    }
    b = b.tokens(SEQUENCE_NBR, [Value::int(progressed.len() as i64)]);
    Ok(b.build()?)
}

/// Decode the planning place, in id order.
pub fn plan_from_tokens(tokens: &TokenMultiset) -> Result<Vec<Aircraft>, AircraftError> {
    let mut plan = tokens
        .distinct()
        .map(Aircraft::from_value)
        .collect::<Result<Vec<_>, _>>()?;
    plan.sort_by_key(|a| a.id);
    Ok(plan)
}

/// Phase of every aircraft that has left the planning stage.
pub fn phases_from<F>(tokens: F) -> Result<BTreeMap<u32, Phase>, AircraftError>
where
    F: Fn(&str) -> TokenMultiset,
{
    let mut out = BTreeMap::new();
    for t in tokens(APPROACH).distinct() {
        out.insert(id_of(t)?, Phase::Approach);
    }
    for (place, phase) in PHASES {
        for t in tokens(place).distinct() {
            let id = t
                .as_tuple()
                .and_then(|f| f.first())
                .ok_or_else(|| AircraftError::Parse(format!("phase token {t}")))?;
            out.insert(id_of(id)?, phase);
        }
    }
    Ok(out)
}

fn state_of(v: Option<&Value>) -> Result<ResourceState, AircraftError> {
    ResourceState::from_value(v.ok_or_else(|| AircraftError::Parse("resource token".into()))?)
}

/// Rebuild the airport from the three resource places.
pub fn airport_from(
    runways: &TokenMultiset,
    gateways: &TokenMultiset,
    gates: &TokenMultiset,
) -> Result<Airport, AircraftError> {
    let fields = |t: &Value| {
        t.as_tuple()
            .map(<[Value]>::to_vec)
            .ok_or_else(|| AircraftError::Parse(format!("resource token {t}")))
    };
    let mut ap = Airport::default();
    for t in runways.distinct() {
        let f = fields(t)?;
        ap.runways.push(Runway {
            id: id_of(&f[0])?,
            state: state_of(f.get(1))?,
            opposite: id_of(f.get(2).unwrap_or(&Value::Absent))?,
        });
    }
    for t in gateways.distinct() {
        let f = fields(t)?;
        ap.gateways.push(Gateway {
            id: id_of(&f[0])?,
            state: state_of(f.get(1))?,
        });
    }
    for t in gates.distinct() {
        let f = fields(t)?;
        ap.gates.push(Gate {
            id: GateId::from_value(&f[0])?,
            state: state_of(f.get(1))?,
        });
    }
    Ok(ap)
}

/// Clearance currently issued to `id` for a resource kind, if any.
pub fn clearance(tokens: &TokenMultiset, id: u32, dim: Dim) -> Option<ResourceId> {
    tokens.distinct().find_map(|t| match t.as_tuple() {
        Some([who, r]) if id_of(who).ok() == Some(id) => ResourceId::from_id_value(dim, r).ok(),
        _ => None,
    })
}
