//! Workloads shared by the benchmarks.

use sasnet::aircraft::fixture::{arrivals, case_model};
use sasnet::hlpn::{Annotation, Expr, Hlpn, PlaceType, Shape, Value};
use sasnet::scenario::{EventKind, Scenario, ScenarioEvent};

/// Two places of `n` pairs each and a transition joining them on the shared
/// first field, guarded on the second.
pub fn join_net(n: i64) -> Hlpn {
    let pair = || PlaceType::new("pair", Shape::Tuple(vec![Shape::Int, Shape::Int]));
    let pat = |a: &str, b: &str| Annotation::of(Expr::tuple([Expr::var(a), Expr::var(b)]));
    Hlpn::builder()
        .place("left", pair())
        .place("right", pair())
        .place("out", pair())
        .transition("join", Expr::var("y").lt(Expr::var("z")))
        .input("left", "join", pat("x", "y"))
        .input("right", "join", pat("x", "z"))
        .output("out", "join", pat("y", "z"))
        .tokens(
            "left",
            (0..n).map(|i| Value::pair(Value::int(i % 16), Value::int(i))),
        )
        .tokens(
            "right",
            (0..n).map(|i| Value::pair(Value::int(i % 16), Value::int(n - i))),
        )
        .build()
        .expect("static net is valid")
}

/// The reference table with aircraft 5 an hour late.
pub fn delayed_scenario() -> Scenario {
    let mut s = Scenario::new(arrivals(), case_model());
    s.steps = 40;
    s.events.push(ScenarioEvent {
        at: 0,
        kind: EventKind::Delay {
            aircraft: 5,
            ts: sasnet::hlpn::Time::hm(10, 16),
        },
    });
    s
}
