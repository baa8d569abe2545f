//! Acceptance run: one line per criterion, non-zero exit if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sasnet::aircraft::fixture::{arrivals, case_model};
use sasnet::aircraft::places::PLANED_RW;
use sasnet::aircraft::{wind_change, Aircraft, Dim, ResourceId};
use sasnet::emulator::EncodedNet;
use sasnet::hlpn::{Expr, Functions, Time, Value};
use sasnet::mapek::{argmax, plausibility, Comparison, Plan, Threshold};
use sasnet::ppn::{
    conjunction, disjunction, fire_numerical, is_possible, Grid, NumericalPlace,
    PlausibleTransition, StateOfInformation,
};
use sasnet::scenario::{
    export_trace, run_scenario, trace_text, EventKind, PolicyKind, RunConfig, Scenario,
    ScenarioEvent,
};

use common::{
    brute_force_bindings, delay_closure, l1, oracle_fire, random_airport, random_net, random_plan,
    reachable_direct, reachable_emulated, rng,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scenario_reproduction() -> Outcome {
    let mut s = Scenario::new(arrivals(), case_model());
    s.steps = 40;
    s.events.push(ScenarioEvent {
        at: 0,
        kind: EventKind::Delay {
            aircraft: 5,
            ts: Time::hm(10, 16),
        },
    });
    let start = Instant::now();
    let r = run_scenario(&s).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(r.stats.adaptations == 1, || {
        format!("{} adaptations", r.stats.adaptations)
    })?;
    let planned = r
        .final_encoding
        .get_tokens(PLANED_RW)
        .map_err(|e| e.to_string())?;
    let token = Value::tuple([Value::int(5), Value::int(2)]);
    ensure(planned.count(&token) == 1, || {
        format!("planedRw holds {planned}")
    })?;
    let a5 = r
        .final_plan
        .iter()
        .find(|a| a.id == 5)
        .ok_or("aircraft 5 missing")?;
    ensure(a5.resource(Dim::Runway) == ResourceId::Runway(2), || {
        format!("runway {}", a5.runway)
    })?;
    let times = (a5.tr, a5.tg, a5.tk, a5.tf);
    let want = (
        Time::hm(10, 19),
        Time::hm(10, 22),
        Time::hm(10, 26),
        Time::hm(10, 50),
    );
    ensure(times == want, || format!("times {times:?}"))?;
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))?;
    Ok(format!(
        "runway 2, tr 10:19 tg 10:22 tk 10:26 tf 10:50, {took:.2?}"
    ))
}

fn bisimulation() -> Outcome {
    let fns = Functions::standard();
    let start = Instant::now();
    let mut states = 0;
    for seed in 0..100 {
        let net = random_net(&mut rng(1_000 + seed), 5, 5, 6);
        let direct = reachable_direct(&net, 8, &fns);
        let emulated = reachable_emulated(&EncodedNet::encode(&net), 8, &fns);
        ensure(direct == emulated, || {
            format!("net {seed}: reachable sets differ")
        })?;
        states += direct.len();
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!(
        "100 nets, {states} markings within 8 firings, {took:.2?}"
    ))
}

fn binding_oracle() -> Outcome {
    let fns = Functions::standard();
    let mut bindings = 0;
    for seed in 0..500 {
        let net = random_net(&mut rng(2_000 + seed), 4, 4, 6);
        for t in net.transitions() {
            let found: BTreeSet<_> = net
                .enabled_bindings(&t.name, &fns)
                .map_err(|e| e.to_string())?
                .into_iter()
                .collect();
            let want = brute_force_bindings(&net, &t.name, &fns);
            ensure(found == want, || {
                format!("net {seed} transition {}", t.name)
            })?;
            bindings += found.len();
        }
    }
    Ok(format!("500 nets, {bindings} bindings agree"))
}

fn masses(r: &mut ChaCha8Rng, bins: usize, holes: bool) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..bins)
            .map(|_| {
                if holes && r.gen_bool(0.3) {
                    0.0
                } else {
                    r.gen_range(0.05..5.0)
                }
            })
            .collect();
        if w.iter().sum::<f64>() > 0.0 {
            return w;
        }
    }
}

fn ppn_algebra() -> Outcome {
    let g = Grid::new(-2.0, 10.0, 16).map_err(|e| e.to_string())?;
    let soi = |w: Vec<f64>| StateOfInformation::from_weights(g, w).map_err(|e| e.to_string());
    let err = |e: sasnet::ppn::PpnError| e.to_string();
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let a = soi(masses(&mut r, 16, false))?;
        let b = soi(masses(&mut r, 16, false))?;
        let c = soi(masses(&mut r, 16, false))?;
        let ab = conjunction(&a, &b).map_err(err)?;
        let ba = conjunction(&b, &a).map_err(err)?;
        let left = conjunction(&ab, &c).map_err(err)?;
        let right = conjunction(&a, &conjunction(&b, &c).map_err(err)?).map_err(err)?;
        let sparse = soi(masses(&mut r, 16, true))?;
        let ident = conjunction(&StateOfInformation::uniform(g), &sparse).map_err(err)?;
        let d = [
            ab.l1_distance(&ba),
            left.l1_distance(&right),
            ident.l1_distance(&sparse),
        ];
        worst = d.iter().copied().fold(worst, f64::max);
        ensure(d.iter().all(|x| *x <= 1e-9), || {
            format!("case {case}: distances {d:?}")
        })?;

        let n = r.gen_range(1..5);
        let parts: Vec<(StateOfInformation, f64)> = (0..n)
            .map(|_| Ok((soi(masses(&mut r, 16, true))?, r.gen_range(0.1..3.0))))
            .collect::<Result<_, String>>()?;
        let mix = disjunction(&parts).map_err(err)?;
        ensure((mix.total() - 1.0).abs() <= 1e-9, || {
            format!("case {case}: mixture mass {}", mix.total())
        })?;
        if n == 1 {
            ensure(mix == parts[0].0, || {
                format!("case {case}: single mixture changed")
            })?;
        }
        ensure(is_possible(&sparse, &sparse, 1.0), || {
            format!("case {case}: self not possible")
        })?;

        let own = soi(masses(&mut r, 16, true))?;
        let ins: Vec<StateOfInformation> = (0..r.gen_range(0..3))
            .map(|_| soi(masses(&mut r, 16, false)))
            .collect::<Result<_, String>>()?;
        let old = if r.gen_bool(0.5) {
            Some(soi(masses(&mut r, 16, true))?)
        } else {
            None
        };
        let places: Vec<NumericalPlace> = ins
            .iter()
            .enumerate()
            .map(|(i, s)| NumericalPlace::holding(&format!("in{i}"), s.clone()))
            .collect();
        let out = match &old {
            Some(s) => NumericalPlace::holding("out", s.clone()),
            None => NumericalPlace::empty("out"),
        };
        let fired = fire_numerical(
            &PlausibleTransition::numerical("t", own.clone()),
            &places,
            &out,
        )
        .map_err(err)?
        .soi
        .ok_or("no output")?;
        let raw: Vec<Vec<f64>> = ins.iter().map(|s| s.mass().to_vec()).collect();
        let want = oracle_fire(own.mass(), &raw, old.as_ref().map(|s| s.mass()))
            .ok_or("oracle impossible")?;
        let dist = l1(fired.mass(), &want);
        worst = worst.max(dist);
        ensure(dist <= 1e-9, || {
            format!("case {case}: firing off by {dist}")
        })?;
    }
    let lo = StateOfInformation::dirac(g, -1.5);
    let hi = StateOfInformation::dirac(g, 9.5);
    ensure(conjunction(&lo, &hi).map_err(err)?.is_impossible(), || {
        "disjoint supports conjoined".into()
    })?;
    ensure(!is_possible(&lo, &hi, 1e-6), || {
        "disjoint supports possible".into()
    })?;
    Ok(format!("1000 cases, worst L1 {worst:.1e}"))
}

fn planner_properties() -> Outcome {
    let g = Grid::new(0.0, 10.0, 10).map_err(|e| e.to_string())?;
    let mut r = rng(5);
    let named = |s: &[f64]| -> Vec<(String, f64)> {
        s.iter()
            .enumerate()
            .map(|(i, x)| (format!("p{i:02}"), *x))
            .collect()
    };
    for case in 0..1000 {
        // scaling
        let n = r.gen_range(1..10);
        let scores: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0)).collect();
        let k = r.gen_range(0.01..100.0);
        let scaled: Vec<f64> = scores.iter().map(|s| s * k).collect();
        let (a, b) = (argmax(&named(&scores)), argmax(&named(&scaled)));
        ensure(a == b, || {
            format!("case {case}: argmax moved under scaling by {k}")
        })?;

        // ties
        let tied = vec![r.gen_range(0.0..1.0); r.gen_range(2..6)];
        ensure(argmax(&named(&tied)) == Some(0), || {
            format!("case {case}: tie not broken by id")
        })?;

        // bounds and monotonicity
        let qs = r.gen_range(1..4);
        let th: BTreeMap<String, Threshold> = (0..qs)
            .map(|i| {
                (
                    format!("q{i}"),
                    Threshold::new(Comparison::AtLeast, r.gen_range(0.0..10.0)),
                )
            })
            .collect();
        let weights: Vec<Vec<f64>> = (0..qs).map(|_| masses(&mut r, 10, true)).collect();
        let plan = |w: &[Vec<f64>]| -> Result<Plan, String> {
            Ok(Plan {
                id: "p".into(),
                condition: Expr::truth(),
                actions: Vec::new(),
                side_effects: w
                    .iter()
                    .enumerate()
                    .map(|(i, m)| {
                        Ok((
                            format!("q{i}"),
                            StateOfInformation::from_weights(g, m.clone())
                                .map_err(|e| e.to_string())?,
                        ))
                    })
                    .collect::<Result<_, String>>()?,
            })
        };
        let (base, _) = plausibility(&plan(&weights)?, &th);
        ensure((0.0..=1.0).contains(&base), || {
            format!("case {case}: score {base}")
        })?;
        // shift weight of one quality from a bin to a later one
        let mut raised = weights.clone();
        let q = r.gen_range(0..qs);
        let from = r.gen_range(0..9);
        let to = r.gen_range(from + 1..10);
        let moved = raised[q][from] * r.gen_range(0.0..1.0);
        raised[q][from] -= moved;
        raised[q][to] += moved;
        let (up, _) = plausibility(&plan(&raised)?, &th);
        ensure(up >= base - 1e-12, || {
            format!("case {case}: score fell from {base} to {up}")
        })?;
    }
    Ok("1000 cases: scaling, ties, bounds, monotonicity".into())
}

fn wind_handling() -> Outcome {
    let mut r = rng(6);
    for case in 0..1000 {
        let n_rw = r.gen_range(1..=8);
        let airport = random_airport(&mut r, n_rw);
        let n = r.gen_range(0..20);
        let plan = random_plan(&mut r, &airport, n);
        let landed: Vec<bool> = plan.iter().map(|_| r.gen_bool(0.3)).collect();
        let pending = |a: &Aircraft| !landed[a.id as usize - 1];
        let once = wind_change(&plan, pending, &airport).map_err(|e| e.to_string())?;
        let twice = wind_change(&once, pending, &airport).map_err(|e| e.to_string())?;
        ensure(twice == plan, || format!("plan {case}: not an involution"))?;
        for rw in airport.runways.iter().map(|x| x.id) {
            let order = |p: &[Aircraft], on: u32| {
                let mut v: Vec<(Time, u32)> = p
                    .iter()
                    .filter(|a| pending(a) && a.runway == on)
                    .map(|a| (a.tr, a.id))
                    .collect();
                v.sort();
                v
            };
            let er = airport.opposite(rw).ok_or("no opposite")?;
            ensure(order(&plan, rw) == order(&once, er), || {
                format!("plan {case}: runway {rw} order changed")
            })?;
        }
    }
    Ok("1000 plans".into())
}

fn safety_closure() -> Outcome {
    let mut adapted = 0;
    let mut worst = 0;
    for seed in 0..100 {
        let o = delay_closure(seed);
        ensure(o.bad.is_empty(), || format!("seed {seed}: {:?}", o.bad))?;
        ensure(!o.hop_limited && o.most_hops <= o.fleet, || {
            format!("seed {seed}: {} hops", o.most_hops)
        })?;
        adapted += usize::from(o.most_hops > 0);
        worst = worst.max(o.most_hops);
    }
    Ok(format!(
        "100 seeds, {adapted} adapted, at most {worst} hop(s) per cycle"
    ))
}

fn determinism() -> Outcome {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = 0;
    for name in [
        "delay-aircraft-5.toml",
        "wind-change.toml",
        "runway-closure.toml",
    ] {
        let cfg = RunConfig::load(&root.join(name)).map_err(|e| e.to_string())?;
        for seed in [cfg.seed, 7, 99] {
            let mut s = Scenario::from_config(&cfg).map_err(|e| e.to_string())?;
            s.seed = seed;
            s.policy = PolicyKind::Random;
            let mut bytes = Vec::new();
            for i in 0..2 {
                let r = run_scenario(&s).map_err(|e| e.to_string())?;
                let dir = tmp.path().join(format!("{name}-{seed}-{i}"));
                let (trace, _) = export_trace(&r, &dir).map_err(|e| e.to_string())?;
                bytes.push(std::fs::read(trace).map_err(|e| e.to_string())?);
                ensure(
                    trace_text(&r).map_err(|e| e.to_string())?.as_bytes() == bytes[i],
                    || "export differs from text".into(),
                )?;
            }
            ensure(bytes[0] == bytes[1], || {
                format!("{name} seed {seed}: traces differ")
            })?;
            runs += 1;
        }
    }
    Ok(format!("{runs} configurations rerun byte-identically"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("scenario reproduction", scenario_reproduction),
        ("emulator bisimulation", bisimulation),
        ("binding search oracle", binding_oracle),
        ("ppn algebra", ppn_algebra),
        ("planner properties", planner_properties),
        ("wind handling", wind_handling),
        ("safety closure", safety_closure),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => println!("[PASS] {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {} {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
