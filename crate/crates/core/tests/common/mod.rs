//! Generators and reference implementations shared by the integration
//! suites. The oracles here avoid the library's search and unification code:
//! bindings are found by enumerating every assignment over the values seen
//! in the input places.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sasnet::aircraft::{Aircraft, Airport, Category, Gate, GateId, Gateway, ResourceState, Runway};
use sasnet::emulator::EncodedNet;
use sasnet::hlpn::{
    evaluate, Annotation, Binding, Direction, Expr, Functions, Hlpn, Marking, Minutes, PlaceType,
    Shape, Time, TokenMultiset, Value,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pattern variables per transition; keeps the brute-force oracle small.
const MAX_VARS: usize = 4;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Pair,
}

struct Scope {
    ints: Vec<String>,
    pairs: Vec<String>,
    next: usize,
}

impl Scope {
    fn fresh(&mut self, kind: Kind) -> String {
        let name = format!("v{}", self.next);
        self.next += 1;
        match kind {
            Kind::Int => self.ints.push(name.clone()),
            Kind::Pair => self.pairs.push(name.clone()),
        }
        name
    }
}

fn small_int(r: &mut ChaCha8Rng) -> Value {
    Value::int(r.gen_range(0..3))
}

fn token(r: &mut ChaCha8Rng, kind: Kind) -> Value {
    match kind {
        Kind::Int => small_int(r),
        Kind::Pair => Value::pair(small_int(r), small_int(r)),
    }
}

fn int_pattern(r: &mut ChaCha8Rng, s: &mut Scope) -> Expr {
    let roll: f64 = r.gen();
    if roll < 0.15 && !s.ints.is_empty() {
        Expr::var(s.ints.choose(r).unwrap())
    } else if roll < 0.27 {
        Expr::lit(small_int(r))
    } else if roll < 0.35 && !s.ints.is_empty() {
        // closed once its variable is bound elsewhere
        Expr::var(s.ints.choose(r).unwrap()).add(Expr::lit(Value::int(1)))
    } else if s.next >= MAX_VARS {
        match s.ints.choose(r) {
            Some(x) => Expr::var(x),
            None => Expr::lit(small_int(r)),
        }
    } else {
        Expr::var(&s.fresh(Kind::Int))
    }
}

fn pattern(r: &mut ChaCha8Rng, s: &mut Scope, kind: Kind) -> Expr {
    match kind {
        Kind::Int => int_pattern(r, s),
        Kind::Pair => {
            if s.next < MAX_VARS && r.gen_bool(0.2) {
                Expr::var(&s.fresh(Kind::Pair))
            } else {
                Expr::tuple([int_pattern(r, s), int_pattern(r, s)])
            }
        }
    }
}

fn int_term(r: &mut ChaCha8Rng, s: &Scope) -> Expr {
    if s.ints.is_empty() || r.gen_bool(0.2) {
        return Expr::lit(small_int(r));
    }
    let x = Expr::var(s.ints.choose(r).unwrap());
    match r.gen_range(0..4) {
        0 => x.add(Expr::lit(Value::int(1))),
        1 if s.ints.len() > 1 => x.min(Expr::var(s.ints.choose(r).unwrap())),
        _ => x,
    }
}

fn term(r: &mut ChaCha8Rng, s: &Scope, kind: Kind) -> Expr {
    match kind {
        Kind::Int => int_term(r, s),
        Kind::Pair if !s.pairs.is_empty() && r.gen_bool(0.3) => {
            Expr::var(s.pairs.choose(r).unwrap())
        }
        Kind::Pair => Expr::tuple([int_term(r, s), int_term(r, s)]),
    }
}

fn guard(r: &mut ChaCha8Rng, s: &Scope) -> Expr {
    if s.ints.is_empty() || r.gen_bool(0.5) {
        return Expr::truth();
    }
    let x = Expr::var(s.ints.choose(r).unwrap());
    let y = if r.gen_bool(0.5) {
        Expr::var(s.ints.choose(r).unwrap())
    } else {
        Expr::lit(small_int(r))
    };
    match r.gen_range(0..4) {
        0 => x.lt(y),
        1 => x.le(y),
        2 => x.ne(y),
        _ => x.eq(y),
    }
}

/// A random valid net with at most `places` places, `transitions`
/// transitions and `tokens` initial tokens. Places hold integers or integer
/// pairs drawn from {0, 1, 2}.
pub fn random_net(r: &mut ChaCha8Rng, places: usize, transitions: usize, tokens: usize) -> Hlpn {
    let np = r.gen_range(1..=places);
    let kinds: Vec<Kind> = (0..np)
        .map(|_| {
            if r.gen_bool(0.6) {
                Kind::Int
            } else {
                Kind::Pair
            }
        })
        .collect();
    let name = |i: usize| format!("p{i}");
    let mut b = Hlpn::builder();
    for (i, k) in kinds.iter().enumerate() {
        let shape = match k {
            Kind::Int => Shape::Int,
            Kind::Pair => Shape::Tuple(vec![Shape::Int, Shape::Int]),
        };
        b = b.place(&name(i), PlaceType::new("t", shape));
    }
    let nt = r.gen_range(1..=transitions);
    for t in 0..nt {
        let tname = format!("t{t}");
        let mut s = Scope {
            ints: Vec::new(),
            pairs: Vec::new(),
            next: 0,
        };
        let mut idx: Vec<usize> = (0..np).collect();
        idx.shuffle(r);
        let n_in = r.gen_range(1..=np.min(2));
        let mut inputs = Vec::new();
        for &p in &idx[..n_in] {
            let n_terms = if r.gen_bool(0.2) { 2 } else { 1 };
            let terms: Vec<(Expr, u32)> = (0..n_terms)
                .map(|_| {
                    let w = if r.gen_bool(0.15) { 2 } else { 1 };
                    (pattern(r, &mut s, kinds[p]), w)
                })
                .collect();
            inputs.push((p, Annotation::bag(terms)));
        }
        // `x + 1` patterns only mention variables bound by earlier patterns
        let g = guard(r, &s);
        b = b.transition(&tname, g);
        for (p, a) in inputs {
            b = b.input(&name(p), &tname, a);
        }
        idx.shuffle(r);
        let n_out = r.gen_range(0..=np.min(2));
        for &p in &idx[..n_out] {
            b = b.output(&name(p), &tname, Annotation::of(term(r, &s, kinds[p])));
        }
    }
    let n_tok = r.gen_range(0..=tokens);
    for _ in 0..n_tok {
        let p = r.gen_range(0..np);
        b = b.tokens(&name(p), [token(r, kinds[p])]);
    }
    b.build().expect("generated nets are valid")
}

fn pattern_vars_of(e: &Expr) -> Vec<String> {
    match e {
        Expr::Var(v) => vec![v.clone()],
        Expr::Tuple(items) => items.iter().flat_map(pattern_vars_of).collect(),
        _ => Vec::new(),
    }
}

fn subvalues(v: &Value, out: &mut BTreeSet<Value>) {
    out.insert(v.clone());
    if let Value::Tuple(items) = v {
        for i in items.iter() {
            subvalues(i, out);
        }
    }
}

/// Every assignment of the transition's pattern variables over the values
/// occurring in its input places that makes the input demand available and
/// the guard true.
pub fn brute_force_bindings(net: &Hlpn, t: &str, fns: &Functions) -> BTreeSet<Binding> {
    let decl = net.transition(t).expect("transition exists");
    let inputs: Vec<_> = net
        .arcs()
        .iter()
        .filter(|a| a.transition == t && a.direction == Direction::In)
        .collect();
    let mut vars = BTreeSet::new();
    let mut domain = BTreeSet::new();
    for a in &inputs {
        for (e, _) in a.annotation.terms() {
            vars.extend(pattern_vars_of(e));
        }
        if let Some(m) = net.tokens(&a.place) {
            for v in m.distinct() {
                subvalues(v, &mut domain);
            }
        }
    }
    let vars: Vec<String> = vars.into_iter().collect();
    let domain: Vec<Value> = domain.into_iter().collect();
    let mut out = BTreeSet::new();
    if !vars.is_empty() && domain.is_empty() {
        return out;
    }
    let total = domain.len().pow(vars.len() as u32);
    'assignments: for mut code in 0..total {
        let mut b = Binding::new();
        for v in &vars {
            b.insert(v, domain[code % domain.len()].clone());
            code /= domain.len();
        }
        let mut demand: BTreeMap<&str, BTreeMap<Value, u32>> = BTreeMap::new();
        for a in &inputs {
            for (e, w) in a.annotation.terms() {
                match evaluate(e, &b, fns) {
                    Ok(v) => *demand.entry(&a.place).or_default().entry(v).or_default() += w,
                    Err(_) => continue 'assignments,
                }
            }
        }
        for (p, bag) in &demand {
            let have = net.tokens(p).cloned().unwrap_or_default();
            if bag.iter().any(|(v, n)| have.count(v) < *n) {
                continue 'assignments;
            }
        }
        if evaluate(&decl.guard, &b, fns) == Ok(Value::Bool(true)) {
            out.insert(b);
        }
    }
    out
}

/// Markings reachable in at most `depth` firings, by direct firing.
pub fn reachable_direct(net: &Hlpn, depth: usize, fns: &Functions) -> BTreeSet<Marking> {
    let mut seen = BTreeSet::from([net.marking().clone()]);
    let mut queue = VecDeque::from([(net.clone(), 0)]);
    while let Some((n, d)) = queue.pop_front() {
        if d == depth {
            continue;
        }
        for f in n.enabled(fns) {
            let next = n
                .fire(&f.transition, &f.binding, fns)
                .expect("enabled firing fires");
            if seen.insert(next.marking().clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    seen
}

/// Markings reachable in at most `depth` firings of the emulator's `move`.
pub fn reachable_emulated(e: &EncodedNet, depth: usize, fns: &Functions) -> BTreeSet<Marking> {
    let mut seen = BTreeSet::from([e.get_marking().unwrap()]);
    let mut queue = VecDeque::from([(e.clone(), 0)]);
    while let Some((cur, d)) = queue.pop_front() {
        if d == depth {
            continue;
        }
        for f in cur.moves(fns).unwrap() {
            let (next, _) = cur.apply_move(&f, fns).unwrap();
            if seen.insert(next.get_marking().unwrap()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    seen
}

pub fn bag(values: impl IntoIterator<Item = Value>) -> TokenMultiset {
    values.into_iter().collect()
}

/// Random airport with `runways` runways paired as opposites (odd counts
/// leave the last one opposite itself), three gateways and three gates.
pub fn random_airport(r: &mut ChaCha8Rng, runways: u32) -> Airport {
    let ids: Vec<u32> = (1..=runways).collect();
    let runways = ids
        .iter()
        .map(|&id| {
            let opposite = match id % 2 {
                1 if id < runways => id + 1,
                1 => id,
                _ => id - 1,
            };
            Runway {
                id,
                state: if r.gen_bool(0.1) {
                    ResourceState::Inoperative
                } else {
                    ResourceState::Free
                },
                opposite,
            }
        })
        .collect();
    Airport {
        runways,
        gateways: (1..=3)
            .map(|id| Gateway {
                id,
                state: ResourceState::Free,
            })
            .collect(),
        gates: (1..=3)
            .map(|d| Gate {
                id: GateId::new(1, d),
                state: ResourceState::Free,
            })
            .collect(),
    }
}

/// A random, internally ordered plan over `airport`.
pub fn random_plan(r: &mut ChaCha8Rng, airport: &Airport, n: usize) -> Vec<Aircraft> {
    (0..n)
        .map(|i| {
            let ts = Time::from_minutes(r.gen_range(0..1200));
            let t = Minutes(r.gen_range(0..6));
            let tr = ts.checked_add(t).unwrap();
            let tg = tr.checked_add(Minutes(r.gen_range(0..6))).unwrap();
            let tp = Minutes(r.gen_range(0..6));
            let tk = tg.checked_add(tp).unwrap();
            let tf = tk.checked_add(Minutes(r.gen_range(5..40))).unwrap();
            Aircraft {
                id: i as u32 + 1,
                category: *Category::ALL.choose(r).unwrap(),
                runway: airport.runways.choose(r).unwrap().id,
                gateway: airport.gateways.choose(r).unwrap().id,
                gate: airport.gates.choose(r).unwrap().id,
                ts,
                t,
                tr,
                tg,
                tp,
                tk,
                tf,
            }
        })
        .collect()
}

/// Property-test settings that keep regression files out of the tree.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        failure_persistence: None,
        ..Default::default()
    }
}

/// Normalized pointwise product of two mass vectors, `None` when nothing
/// overlaps.
pub fn oracle_product(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let s: f64 = p.iter().sum();
    (s > 0.0).then(|| p.iter().map(|x| x / s).collect())
}

/// Normalized weighted sum of mass vectors.
pub fn oracle_mixture(parts: &[(Vec<f64>, f64)]) -> Vec<f64> {
    let n = parts[0].0.len();
    let mut out = vec![0.0; n];
    for (m, w) in parts {
        for i in 0..n {
            out[i] += w * m[i];
        }
    }
    let s: f64 = out.iter().sum();
    out.iter().map(|x| x / s).collect()
}

/// Firing a numerical transition by hand: fold the product over the
/// inputs, then mix equally with whatever the output held.
pub fn oracle_fire(own: &[f64], inputs: &[Vec<f64>], output: Option<&[f64]>) -> Option<Vec<f64>> {
    let mut acc = own.to_vec();
    for i in inputs {
        acc = oracle_product(&acc, i)?;
    }
    Some(match output {
        None => acc,
        Some(old) => oracle_mixture(&[(old.to_vec(), 1.0), (acc, 1.0)]),
    })
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Every unsafe consecutive pair, found by scanning all pairs: the
/// predecessor of `b` is the latest aircraft entering the same resource
/// before it. Conditions are written out per phase rather than shared.
pub fn oracle_violations(
    plan: &[Aircraft],
    sep: &sasnet::aircraft::SeparationTable,
) -> BTreeSet<(sasnet::aircraft::Dim, u32, u32)> {
    use sasnet::aircraft::Dim;
    let key = |a: &Aircraft, d: Dim| match d {
        Dim::Runway => (a.tr, a.id),
        Dim::Gateway => (a.tg, a.id),
        Dim::Gate => (a.tk, a.id),
    };
    let same = |a: &Aircraft, b: &Aircraft, d: Dim| match d {
        Dim::Runway => a.runway == b.runway,
        Dim::Gateway => a.gateway == b.gateway,
        Dim::Gate => a.gate == b.gate,
    };
    let mut out = BTreeSet::new();
    for d in [Dim::Runway, Dim::Gateway, Dim::Gate] {
        for b in plan {
            let prev = plan
                .iter()
                .filter(|a| a.id != b.id && same(a, b, d) && key(a, d) < key(b, d))
                .max_by_key(|a| key(a, d));
            let Some(a) = prev else { continue };
            let s = i64::from(sep.get(a.category, b.category).0);
            let minutes = |t: Time| i64::from(t.minutes());
            let safe = match d {
                Dim::Runway => minutes(b.tr) - minutes(a.tr) > s,
                Dim::Gateway => minutes(b.tg) - minutes(a.tg) > s,
                Dim::Gate => b.tk > a.tf,
            };
            if !safe {
                out.insert((d, a.id, b.id));
            }
        }
    }
    out
}

/// What one seeded delay on the reference table led to.
#[derive(Debug)]
pub struct DelayOutcome {
    pub aircraft: u32,
    pub ts: Time,
    /// Delayed or moved to other resources by the loop.
    pub touched: BTreeSet<u32>,
    /// Unsafe pairs in the final plan involving a touched aircraft.
    pub bad: BTreeSet<(sasnet::aircraft::Dim, u32, u32)>,
    pub most_hops: usize,
    pub hop_limited: bool,
    pub fleet: usize,
}

/// Reschedule one still-airborne aircraft of the reference table to a
/// seeded arrival time, run the loop and judge the result with
/// [`oracle_violations`].
pub fn delay_closure(seed: u64) -> DelayOutcome {
    use sasnet::aircraft::fixture::{arrivals, case_model};
    use sasnet::aircraft::Phase;
    use sasnet::scenario::{run_scenario, EventKind, Scenario, ScenarioEvent};

    let mut r = rng(seed);
    let model = case_model();
    let plan = arrivals();
    let airborne: Vec<&Aircraft> = plan
        .iter()
        .filter(|a| {
            matches!(
                model.phase(a.id),
                Phase::Approach | Phase::Approached | Phase::Sequenced
            )
        })
        .collect();
    let a = *airborne.choose(&mut r).unwrap();
    // aim at another aircraft's slot most of the time so the loop has work
    let ts = if r.gen_bool(0.8) {
        let b = plan.iter().filter(|b| b.id != a.id).collect::<Vec<_>>();
        let b = b.choose(&mut r).unwrap();
        b.ts.shifted(r.gen_range(-3..=3)).unwrap()
    } else {
        a.ts.checked_add(Minutes(r.gen_range(1..=240))).unwrap()
    };
    let mut s = Scenario::new(plan.clone(), model);
    s.steps = 40;
    s.seed = seed;
    s.events.push(ScenarioEvent {
        at: 0,
        kind: EventKind::Delay { aircraft: a.id, ts },
    });
    let report = run_scenario(&s).expect("scenario runs");
    let mut touched = BTreeSet::from([a.id]);
    for b in &report.final_plan {
        let before = plan.iter().find(|p| p.id == b.id).unwrap();
        if (b.runway, b.gateway, b.gate) != (before.runway, before.gateway, before.gate) {
            touched.insert(b.id);
        }
    }
    let bad = oracle_violations(&report.final_plan, &s.separation)
        .into_iter()
        .filter(|(_, l, f)| touched.contains(l) || touched.contains(f))
        .collect();
    let most_hops = report
        .events
        .iter()
        .filter(|e| e.kind == "adaptation")
        .map(|e| e.payload["hops"].as_array().map_or(0, Vec::len))
        .max()
        .unwrap_or(0);
    DelayOutcome {
        aircraft: a.id,
        ts,
        touched,
        bad,
        most_hops,
        hop_limited: report.events.iter().any(|e| e.kind == "hop-limit"),
        fleet: plan.len(),
    }
}
