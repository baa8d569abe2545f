mod common;

use std::collections::BTreeMap;

use proptest::collection::vec;
use proptest::prelude::*;
use sasnet::emulator::{EncodedNet, ExecutorPolicy};
use sasnet::hlpn::{Annotation, Expr, Functions, Hlpn, PlaceDecl, PlaceType, Policy, Shape, Value};
use sasnet::mapek::{
    argmax, calculate_plans_plausibility, determine_influential_elements, execute, plausibility,
    select_candidate_plans, select_plausible_plan, verification, Action, Comparison,
    InfluentialElement, KnowledgeBase, LoopConfig, ManagingLoop, MapekError, Plan, QualityRecord,
    Quantifier, Snapshot, StaticPlans, Threshold, Zone,
};
use sasnet::ppn::{Grid, StateOfInformation};

/// A counter that only ever goes up.
fn counter() -> Hlpn {
    Hlpn::builder()
        .place("count", PlaceType::new("int", Shape::Int))
        .transition("inc", Expr::truth())
        .input("count", "inc", Annotation::of(Expr::var("x")))
        .output(
            "count",
            "inc",
            Annotation::of(Expr::var("x").add(Expr::lit(Value::int(1)))),
        )
        .tokens("count", [Value::int(0)])
        .build()
        .unwrap()
}

struct Count;

impl Quantifier for Count {
    fn name(&self) -> &str {
        "count"
    }

    fn quantify(&self, s: &Snapshot) -> Result<Value, String> {
        s.tokens("count")
            .distinct()
            .next()
            .cloned()
            .ok_or_else(|| "empty".into())
    }

    fn attribution(&self, _: &Snapshot) -> Option<Vec<InfluentialElement>> {
        Some(vec![InfluentialElement::new(
            "resource",
            Value::sym("count"),
        )])
    }
}

struct Silent;

impl Quantifier for Silent {
    fn name(&self) -> &str {
        "silent"
    }

    fn quantify(&self, _: &Snapshot) -> Result<Value, String> {
        Ok(Value::int(5))
    }
}

fn grid() -> Grid {
    Grid::new(0.0, 10.0, 10).unwrap()
}

fn reset_plan(id: &str, to: i64) -> Plan {
    Plan {
        id: id.into(),
        condition: Expr::var("kind").eq(Expr::lit(Value::sym("resource"))),
        actions: vec![Action::SetTokens {
            place: "count".into(),
            tokens: [Value::int(to)].into_iter().collect(),
        }],
        side_effects: [(
            "count".to_string(),
            StateOfInformation::dirac(grid(), to as f64 + 0.5),
        )]
        .into_iter()
        .collect(),
    }
}

fn thresholds(limit: f64) -> BTreeMap<String, Threshold> {
    [(
        "count".to_string(),
        Threshold::new(Comparison::AtMost, limit),
    )]
    .into_iter()
    .collect()
}

fn counter_loop(limit: f64, plans: Vec<Plan>, max_hops: usize) -> ManagingLoop {
    ManagingLoop::new(
        EncodedNet::encode(&counter()),
        KnowledgeBase::new(["count".to_string()], [], thresholds(limit)),
        vec![Box::new(Count)],
        Box::new(StaticPlans(plans)),
        Policy::First,
        Functions::standard(),
        LoopConfig {
            period: 1,
            max_hops,
            executor: ExecutorPolicy::default(),
        },
    )
}

fn count_of(lp: &ManagingLoop) -> Value {
    lp.encoding()
        .get_tokens("count")
        .unwrap()
        .distinct()
        .next()
        .unwrap()
        .clone()
}

#[test]
fn zero_budget_changes_nothing() {
    let mut lp = counter_loop(3.0, vec![reset_plan("reset", 0)], 1);
    let before = lp.encoding().clone();
    lp.iterate(0).unwrap();
    assert_eq!(lp.encoding(), &before);
    assert!(lp.events().is_empty());
    assert_eq!(lp.stats().steps, 0);
}

#[test]
fn quiet_runs_never_plan() {
    let mut lp = counter_loop(100.0, vec![reset_plan("reset", 0)], 1);
    lp.iterate(20).unwrap();
    assert_eq!(lp.stats().planner_invocations, 0);
    assert_eq!(lp.stats().moves, 20);
    assert_eq!(count_of(&lp), Value::int(20));
}

#[test]
fn a_violation_triggers_the_reset() {
    let mut lp = counter_loop(3.0, vec![reset_plan("reset", 0)], 1);
    lp.iterate(5).unwrap();
    // cycles see 0,1,2,3 then 4 > 3: reset before the fifth move
    assert_eq!(lp.stats().adaptations, 1);
    assert_eq!(count_of(&lp), Value::int(1));
    assert_eq!(lp.plausible_plan().unwrap().id, "reset");
    let kinds: Vec<_> = lp.events().iter().map(|e| e.kind.as_str()).collect();
    let at = kinds.iter().position(|k| *k == "violation").unwrap();
    assert_eq!(
        &kinds[at..at + 4],
        &["violation", "candidates", "quality", "adaptation"]
    );
}

#[test]
fn planner_runs_exactly_when_analysis_flags() {
    let mut lp = counter_loop(2.0, vec![reset_plan("reset", 2)], 2);
    lp.iterate(12).unwrap();
    let flagged = lp.events().iter().filter(|e| e.kind == "violation").count() as u64;
    let capped = lp.events().iter().filter(|e| e.kind == "hop-limit").count() as u64;
    assert!(flagged > 0);
    assert_eq!(lp.stats().planner_invocations, flagged - capped);
}

#[test]
fn hops_stop_at_the_cap() {
    // the reset lands above the limit, so every hop re-violates
    let mut lp = counter_loop(1.0, vec![reset_plan("stuck", 5)], 3);
    lp.step().unwrap();
    lp.step().unwrap();
    lp.step().unwrap();
    let hops = lp
        .events()
        .iter()
        .find(|e| e.kind == "adaptation")
        .map(|e| e.payload["hops"].as_array().unwrap().len());
    assert_eq!(hops, Some(3));
    assert!(lp.events().iter().any(|e| e.kind == "hop-limit"));
}

#[test]
fn unmatched_violations_idle() {
    let mut plan = reset_plan("reset", 0);
    plan.condition = Expr::var("kind").eq(Expr::lit(Value::sym("environment")));
    let mut lp = counter_loop(0.0, vec![plan], 1);
    lp.iterate(3).unwrap();
    assert_eq!(lp.stats().adaptations, 0);
    assert!(lp
        .events()
        .iter()
        .any(|e| e.kind == "no-plan" && e.zone == Zone::Planner));
    assert_eq!(count_of(&lp), Value::int(3));
}

#[test]
fn quality_records_live_in_one_zone() {
    let mut lp = counter_loop(3.0, vec![reset_plan("reset", 0)], 1);
    for _ in 0..10 {
        lp.step().unwrap();
        let (monitor, analyzer) = lp.quality_zones();
        assert!(analyzer.is_empty());
        assert_eq!(monitor.keys().collect::<Vec<_>>(), vec!["count"]);
    }
}

#[test]
fn structural_plans_are_rejected_whole() {
    let mut plan = reset_plan("grow", 0);
    plan.actions.push(Action::AddPlace {
        decl: PlaceDecl {
            name: "extra".into(),
            ty: PlaceType::any(),
        },
    });
    let e = EncodedNet::encode(&counter());
    let err = execute(&plan, &e, ExecutorPolicy::default()).unwrap_err();
    assert!(matches!(err, MapekError::Action { index: 1, .. }));

    let mut lp = counter_loop(0.0, vec![plan], 1);
    lp.step().unwrap();
    lp.step().unwrap();
    assert!(lp.events().iter().any(|e| e.kind == "rejected"));
    // the first action was undone along with the second
    assert_eq!(count_of(&lp), Value::int(2));
}

#[test]
fn missing_threshold_is_an_error() {
    let mut lp = ManagingLoop::new(
        EncodedNet::encode(&counter()),
        KnowledgeBase::new(["count".to_string()], [], BTreeMap::new()),
        vec![Box::new(Count)],
        Box::new(StaticPlans(Vec::new())),
        Policy::First,
        Functions::standard(),
        LoopConfig::default(),
    );
    assert!(matches!(lp.step(), Err(MapekError::MissingThreshold(_))));
}

#[test]
fn quantifiers_without_attribution_blame_unknown() {
    let rec = QualityRecord {
        name: "silent".into(),
        value: Value::int(5),
        timestamp: 0,
    };
    let records = [("silent".to_string(), rec)].into_iter().collect();
    let th = [(
        "silent".to_string(),
        Threshold::new(Comparison::AtLeast, 10.0),
    )]
    .into_iter()
    .collect();
    let verdicts = verification(&records, &th).unwrap();
    assert!(verdicts[0].violated);
    let qs: Vec<Box<dyn Quantifier>> = vec![Box::new(Silent)];
    let elems = determine_influential_elements(&verdicts, &qs, &Snapshot::default()).unwrap();
    assert_eq!(
        elems,
        vec![InfluentialElement::new("unknown", Value::sym("silent"))]
    );
    let clean = verification(
        &records,
        &[(
            "silent".to_string(),
            Threshold::new(Comparison::AtLeast, 1.0),
        )]
        .into_iter()
        .collect(),
    )
    .unwrap();
    assert_eq!(
        determine_influential_elements(&clean, &qs, &Snapshot::default()),
        Err(MapekError::NoViolation)
    );
}

/// Mass at or above `bound`, integrated by hand from bin edges.
fn mass_at_least(masses: &[f64], lo: f64, width: f64, bound: f64) -> f64 {
    masses
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let (a, b) = (lo + width * i as f64, lo + width * (i + 1) as f64);
            m * ((b - bound.max(a)) / width).clamp(0.0, 1.0)
        })
        .sum()
}

fn soi_with_low_bin(low: f64) -> StateOfInformation {
    let mut w = vec![(1.0 - low) / 9.0; 10];
    w[0] = low;
    StateOfInformation::from_weights(grid(), w).unwrap()
}

#[test]
fn satisfying_masses_become_scores() {
    let th: BTreeMap<_, _> = [("q".to_string(), Threshold::new(Comparison::AtLeast, 1.0))]
        .into_iter()
        .collect();
    let plan = |id: &str, low: f64| Plan {
        id: id.into(),
        condition: Expr::truth(),
        actions: Vec::new(),
        side_effects: [("q".to_string(), soi_with_low_bin(low))]
            .into_iter()
            .collect(),
    };
    let cands = vec![plan("a", 0.1), plan("b", 0.6)];
    let scored = calculate_plans_plausibility(&cands, &th);
    for s in &scored {
        let want = mass_at_least(s.plan.side_effects["q"].mass(), 0.0, 1.0, 1.0);
        assert!((s.score - want).abs() < 1e-12);
    }
    assert!((scored[0].score - 0.9).abs() < 1e-12);
    assert!((scored[1].score - 0.4).abs() < 1e-12);
    assert_eq!(select_plausible_plan(&scored).unwrap().plan.id, "a");

    // all above or all below
    let above = Plan {
        side_effects: [("q".to_string(), StateOfInformation::dirac(grid(), 5.0))]
            .into_iter()
            .collect(),
        ..plan("c", 0.0)
    };
    let below = Plan {
        side_effects: [("q".to_string(), StateOfInformation::dirac(grid(), 0.5))]
            .into_iter()
            .collect(),
        ..plan("d", 0.0)
    };
    assert_eq!(plausibility(&above, &th).0, 1.0);
    assert_eq!(plausibility(&below, &th).0, 0.0);

    // unpredicted qualities count as satisfied and are flagged
    let (score, defaulted) = plausibility(
        &Plan {
            side_effects: BTreeMap::new(),
            ..plan("e", 0.0)
        },
        &th,
    );
    assert_eq!((score, defaulted), (1.0, vec!["q".to_string()]));
}

#[test]
fn candidates_come_back_in_id_order() {
    let plans = vec![reset_plan("z", 0), reset_plan("a", 0), reset_plan("m", 0)];
    let elems = [InfluentialElement::new("resource", Value::sym("count"))];
    let ids: Vec<_> = select_candidate_plans(&plans, &elems, &Functions::standard())
        .into_iter()
        .map(|p| p.id)
        .collect();
    assert_eq!(ids, ["a", "m", "z"]);
    let other = [InfluentialElement::new("environment", Value::sym("wind"))];
    assert!(select_candidate_plans(&plans, &other, &Functions::standard()).is_empty());
}

fn named(scores: &[f64]) -> Vec<(String, f64)> {
    scores
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("p{i:02}"), *s))
        .collect()
}

proptest! {
    #![proptest_config(common::cases(300))]

    #[test]
    fn scaling_keeps_the_winner(scores in vec(0.0f64..1.0, 1..12), k in 0.01f64..100.0) {
        let scaled: Vec<f64> = scores.iter().map(|s| s * k).collect();
        let (a, b) = (argmax(&named(&scores)), argmax(&named(&scaled)));
        prop_assert_eq!(scores[a.unwrap()] * k, scaled[b.unwrap()]);
        if scores.iter().filter(|s| **s == scores[a.unwrap()]).count() == 1 {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn ties_go_to_the_smaller_id(s in 0.0f64..1.0, n in 2usize..8) {
        prop_assert_eq!(argmax(&named(&vec![s; n])), Some(0));
    }

    #[test]
    fn scores_stay_in_the_unit_interval(lows in vec(0.0f64..1.0, 1..4), bound in 0.0f64..10.0) {
        let th: BTreeMap<_, _> = (0..lows.len())
            .map(|i| (format!("q{i}"), Threshold::new(Comparison::AtLeast, bound)))
            .collect();
        let plan = Plan {
            id: "p".into(),
            condition: Expr::truth(),
            actions: Vec::new(),
            side_effects: lows.iter().enumerate().map(|(i, l)| (format!("q{i}"), soi_with_low_bin(*l))).collect(),
        };
        let (score, _) = plausibility(&plan, &th);
        prop_assert!((0.0..=1.0).contains(&score));
    }

    #[test]
    fn more_satisfying_mass_never_hurts(low in 0.0f64..1.0, less in 0.0f64..1.0, other in 0.0f64..1.0) {
        let th: BTreeMap<_, _> = ["q0", "q1"]
            .iter()
            .map(|q| (q.to_string(), Threshold::new(Comparison::AtLeast, 1.0)))
            .collect();
        let plan = |l: f64| Plan {
            id: "p".into(),
            condition: Expr::truth(),
            actions: Vec::new(),
            side_effects: [("q0".to_string(), soi_with_low_bin(l)), ("q1".to_string(), soi_with_low_bin(other))]
                .into_iter()
                .collect(),
        };
        let better = low * less;
        prop_assert!(plausibility(&plan(better), &th).0 >= plausibility(&plan(low), &th).0);
    }
}
