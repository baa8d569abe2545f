//! High-level Petri nets: typed places, guarded transitions, annotated arcs.
//!
//! Nets are values. Firing returns a new net and leaves the original intact,
//! so a net can be shared read-only while an execution loop advances its own
//! copy.
//!
//! Input-arc annotations double as patterns: a variable (or a tuple of
//! variables and closed sub-expressions) is unified against the tokens of the
//! input place to produce candidate bindings. Sub-expressions that are not
//! patterns are compared once their variables are bound; any still open when
//! a token is matched are settled when the binding is complete.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{evaluate, Binding, EvalError, Expr, Functions};
use super::multiset::TokenMultiset;
use super::value::{PlaceType, Value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("duplicate place `{0}`")]
    DuplicatePlace(String),
    #[error("duplicate transition `{0}`")]
    DuplicateTransition(String),
    #[error("duplicate {direction} arc between `{place}` and `{transition}`")]
    DuplicateArc {
        place: String,
        transition: String,
        direction: Direction,
    },
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("no {direction} arc between `{place}` and `{transition}`")]
    UnknownArc {
        place: String,
        transition: String,
        direction: Direction,
    },
    #[error("token {token} does not conform to type {ty} of place `{place}`")]
    TypeViolation {
        place: String,
        ty: String,
        token: Value,
    },
    #[error("variable `{var}` of transition `{transition}` is not bound by any input arc")]
    UnboundVariable { transition: String, var: String },
    #[error("arc annotation term with multiplicity 0 on `{place}`/`{transition}`")]
    ZeroWeight { place: String, transition: String },
    #[error("place `{place}` is still connected to transition `{transition}`")]
    PlaceInUse { place: String, transition: String },
    #[error("binding {binding} does not enable `{transition}`")]
    NotEnabled {
        transition: String,
        binding: Binding,
    },
    #[error("evaluating output of `{transition}`: {source}")]
    Output {
        transition: String,
        #[source]
        source: EvalError,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    In,
    Out,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::In => "input",
            Direction::Out => "output",
        })
    }
}

/// A bag of expressions. A plain weight `n` is the same expression with
/// multiplicity `n`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Annotation {
    terms: Vec<(Expr, u32)>,
}

impl Annotation {
    pub fn of(e: Expr) -> Self {
        Annotation {
            terms: vec![(e, 1)],
        }
    }

    pub fn weighted(e: Expr, n: u32) -> Self {
        Annotation {
            terms: vec![(e, n)],
        }
    }

    pub fn bag(terms: impl IntoIterator<Item = (Expr, u32)>) -> Self {
        Annotation {
            terms: terms.into_iter().collect(),
        }
    }

    pub fn terms(&self) -> &[(Expr, u32)] {
        &self.terms
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        self.terms.iter().flat_map(|(e, _)| e.free_vars()).collect()
    }

    /// Evaluate every term; the result is the produced (or demanded) bag.
    pub fn evaluate(&self, b: &Binding, fns: &Functions) -> Result<TokenMultiset, EvalError> {
        let mut out = TokenMultiset::new();
        for (e, n) in &self.terms {
            out.insert(evaluate(e, b, fns)?, *n);
        }
        Ok(out)
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (e, n)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ++ ")?;
            }
            if *n == 1 {
                write!(f, "{e}")?;
            } else {
                write!(f, "{n}'{e}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlaceDecl {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: PlaceType,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransitionDecl {
    pub name: String,
    pub guard: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArcDecl {
    pub place: String,
    pub transition: String,
    pub direction: Direction,
    pub annotation: Annotation,
}

pub type Marking = BTreeMap<String, TokenMultiset>;

/// One fired (transition, binding) pair.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Firing {
    pub transition: String,
    pub binding: Binding,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawHlpn")]
pub struct Hlpn {
    places: Vec<PlaceDecl>,
    transitions: Vec<TransitionDecl>,
    arcs: Vec<ArcDecl>,
    marking: Marking,
}

#[derive(Deserialize)]
struct RawHlpn {
    places: Vec<PlaceDecl>,
    transitions: Vec<TransitionDecl>,
    arcs: Vec<ArcDecl>,
    #[serde(default)]
    marking: Marking,
}

impl TryFrom<RawHlpn> for Hlpn {
    type Error = NetError;

    fn try_from(raw: RawHlpn) -> Result<Self, Self::Error> {
        Hlpn::from_parts(raw.places, raw.transitions, raw.arcs, raw.marking)
    }
}

/// Choice rule for [`Hlpn::step`].
#[derive(Clone, Debug, Default)]
pub enum Policy {
    /// First enabled transition in declaration order, first canonical binding.
    #[default]
    First,
    /// Uniform choice over all enabled (transition, binding) pairs.
    Random(Box<ChaCha8Rng>),
}

impl Policy {
    pub fn seeded(seed: u64) -> Self {
        Policy::Random(Box::new(ChaCha8Rng::seed_from_u64(seed)))
    }

    pub fn choose(&mut self, enabled: Vec<Firing>) -> Option<Firing> {
        match self {
            Policy::First => enabled.into_iter().next(),
            Policy::Random(rng) => enabled.choose(rng.as_mut()).cloned(),
        }
    }
}

impl Hlpn {
    pub fn builder() -> HlpnBuilder {
        HlpnBuilder::default()
    }

    pub fn from_parts(
        places: Vec<PlaceDecl>,
        transitions: Vec<TransitionDecl>,
        arcs: Vec<ArcDecl>,
        mut marking: Marking,
    ) -> Result<Self, NetError> {
        for p in &places {
            marking.entry(p.name.clone()).or_default();
        }
        let net = Hlpn {
            places,
            transitions,
            arcs,
            marking,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let mut seen = BTreeSet::new();
        for p in &self.places {
            if !seen.insert(p.name.as_str()) {
                return Err(NetError::DuplicatePlace(p.name.clone()));
            }
        }
        let mut seen_t = BTreeSet::new();
        for t in &self.transitions {
            if !seen_t.insert(t.name.as_str()) {
                return Err(NetError::DuplicateTransition(t.name.clone()));
            }
        }
        let mut seen_arcs = BTreeSet::new();
        for a in &self.arcs {
            if !seen.contains(a.place.as_str()) {
                return Err(NetError::UnknownPlace(a.place.clone()));
            }
            if !seen_t.contains(a.transition.as_str()) {
                return Err(NetError::UnknownTransition(a.transition.clone()));
            }
            if !seen_arcs.insert((a.place.as_str(), a.transition.as_str(), a.direction)) {
                return Err(NetError::DuplicateArc {
                    place: a.place.clone(),
                    transition: a.transition.clone(),
                    direction: a.direction,
                });
            }
            if a.annotation.terms().iter().any(|(_, n)| *n == 0) {
                return Err(NetError::ZeroWeight {
                    place: a.place.clone(),
                    transition: a.transition.clone(),
                });
            }
        }
        for (place, tokens) in &self.marking {
            let decl = self
                .place(place)
                .ok_or_else(|| NetError::UnknownPlace(place.clone()))?;
            check_tokens(decl, tokens)?;
        }
        for t in &self.transitions {
            let bindable = self.pattern_vars(&t.name);
            let mut used = t.guard.free_vars();
            for a in self.arcs.iter().filter(|a| a.transition == t.name) {
                used.extend(a.annotation.free_vars());
            }
            if let Some(var) = used.into_iter().find(|v| !bindable.contains(v)) {
                return Err(NetError::UnboundVariable {
                    transition: t.name.clone(),
                    var,
                });
            }
        }
        Ok(())
    }

    pub fn places(&self) -> &[PlaceDecl] {
        &self.places
    }

    pub fn transitions(&self) -> &[TransitionDecl] {
        &self.transitions
    }

    pub fn arcs(&self) -> &[ArcDecl] {
        &self.arcs
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    pub fn place(&self, name: &str) -> Option<&PlaceDecl> {
        self.places.iter().find(|p| p.name == name)
    }

    pub fn transition(&self, name: &str) -> Option<&TransitionDecl> {
        self.transitions.iter().find(|t| t.name == name)
    }

    pub fn tokens(&self, place: &str) -> Option<&TokenMultiset> {
        self.marking.get(place)
    }

    pub fn arcs_of<'a>(
        &'a self,
        transition: &'a str,
        direction: Direction,
    ) -> impl Iterator<Item = &'a ArcDecl> + 'a {
        self.arcs
            .iter()
            .filter(move |a| a.transition == transition && a.direction == direction)
    }

    /// Variables that appear in pattern position on some input arc.
    fn pattern_vars(&self, transition: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in self.arcs_of(transition, Direction::In) {
            for (e, _) in a.annotation.terms() {
                collect_pattern_vars(e, &mut out);
            }
        }
        out
    }

    /// All bindings enabling `transition`, in canonical order.
    pub fn enabled_bindings(
        &self,
        transition: &str,
        fns: &Functions,
    ) -> Result<Vec<Binding>, NetError> {
        let decl = self
            .transition(transition)
            .ok_or_else(|| NetError::UnknownTransition(transition.to_string()))?;
        let terms: Vec<InputTerm<'_>> = self
            .arcs_of(transition, Direction::In)
            .flat_map(|a| {
                a.annotation.terms().iter().map(move |(e, n)| InputTerm {
                    place: a.place.as_str(),
                    expr: e,
                    weight: *n,
                })
            })
            .collect();
        let mut search = Search {
            net: self,
            terms: &terms,
            guard: &decl.guard,
            fns,
            found: BTreeSet::new(),
        };
        let pending: Vec<usize> = (0..terms.len()).collect();
        search.run(pending, Binding::new());
        Ok(search.found.into_iter().collect())
    }

    /// Every enabled (transition, binding) pair: declaration order, then
    /// canonical binding order.
    pub fn enabled(&self, fns: &Functions) -> Vec<Firing> {
        let mut out = Vec::new();
        for t in &self.transitions {
            let bindings = self
                .enabled_bindings(&t.name, fns)
                .expect("declared transition");
            out.extend(bindings.into_iter().map(|binding| Firing {
                transition: t.name.clone(),
                binding,
            }));
        }
        out
    }

    /// Demanded input bag per place, if `binding` enables `transition`.
    fn demands(
        &self,
        transition: &TransitionDecl,
        binding: &Binding,
        fns: &Functions,
    ) -> Option<BTreeMap<String, TokenMultiset>> {
        if self.pattern_vars(&transition.name).len() != binding.len()
            || !self
                .pattern_vars(&transition.name)
                .iter()
                .all(|v| binding.contains(v))
        {
            return None;
        }
        let mut demand: BTreeMap<String, TokenMultiset> = BTreeMap::new();
        for a in self.arcs_of(&transition.name, Direction::In) {
            let bag = a.annotation.evaluate(binding, fns).ok()?;
            demand.entry(a.place.clone()).or_default().union_with(&bag);
        }
        let available = demand
            .iter()
            .all(|(p, bag)| self.marking.get(p).is_some_and(|m| m.contains(bag)));
        if !available {
            return None;
        }
        match evaluate(&transition.guard, binding, fns) {
            Ok(Value::Bool(true)) => Some(demand),
            _ => None,
        }
    }

    /// Fire `transition` under `binding`, returning the successor net.
    pub fn fire(
        &self,
        transition: &str,
        binding: &Binding,
        fns: &Functions,
    ) -> Result<Hlpn, NetError> {
        let decl = self
            .transition(transition)
            .ok_or_else(|| NetError::UnknownTransition(transition.to_string()))?;
        let demand = self
            .demands(decl, binding, fns)
            .ok_or_else(|| NetError::NotEnabled {
                transition: transition.to_string(),
                binding: binding.clone(),
            })?;
        let mut next = self.clone();
        for (place, bag) in demand {
            next.marking
                .get_mut(&place)
                .expect("validated place")
                .subtract(&bag)
                .expect("availability checked");
        }
        for a in self.arcs_of(transition, Direction::Out) {
            let bag = a
                .annotation
                .evaluate(binding, fns)
                .map_err(|source| NetError::Output {
                    transition: transition.to_string(),
                    source,
                })?;
            let decl = self.place(&a.place).expect("validated place");
            check_tokens(decl, &bag)?;
            next.marking
                .get_mut(&a.place)
                .expect("validated place")
                .union_with(&bag);
        }
        Ok(next)
    }

    /// Fire one enabled pair chosen by `policy`, or do nothing.
    pub fn step(
        &self,
        policy: &mut Policy,
        fns: &Functions,
    ) -> Result<(Hlpn, Option<Firing>), NetError> {
        match policy.choose(self.enabled(fns)) {
            None => Ok((self.clone(), None)),
            Some(f) => {
                let next = self.fire(&f.transition, &f.binding, fns)?;
                Ok((next, Some(f)))
            }
        }
    }

    /// Replace the marking of one place.
    pub fn with_tokens(&self, place: &str, tokens: TokenMultiset) -> Result<Hlpn, NetError> {
        let decl = self
            .place(place)
            .ok_or_else(|| NetError::UnknownPlace(place.to_string()))?;
        check_tokens(decl, &tokens)?;
        let mut next = self.clone();
        next.marking.insert(place.to_string(), tokens);
        Ok(next)
    }

    pub fn with_arc_annotation(
        &self,
        place: &str,
        transition: &str,
        direction: Direction,
        annotation: Annotation,
    ) -> Result<Hlpn, NetError> {
        let mut next = self.clone();
        let arc = next
            .arcs
            .iter_mut()
            .find(|a| a.place == place && a.transition == transition && a.direction == direction)
            .ok_or_else(|| NetError::UnknownArc {
                place: place.to_string(),
                transition: transition.to_string(),
                direction,
            })?;
        arc.annotation = annotation;
        next.validate()?;
        Ok(next)
    }

    pub fn with_place(&self, decl: PlaceDecl) -> Result<Hlpn, NetError> {
        let mut places = self.places.clone();
        places.push(decl);
        Hlpn::from_parts(
            places,
            self.transitions.clone(),
            self.arcs.clone(),
            self.marking.clone(),
        )
    }

    pub fn without_place(&self, name: &str) -> Result<Hlpn, NetError> {
        if self.place(name).is_none() {
            return Err(NetError::UnknownPlace(name.to_string()));
        }
        if let Some(a) = self.arcs.iter().find(|a| a.place == name) {
            return Err(NetError::PlaceInUse {
                place: name.to_string(),
                transition: a.transition.clone(),
            });
        }
        let mut next = self.clone();
        next.places.retain(|p| p.name != name);
        next.marking.remove(name);
        Ok(next)
    }
}

fn check_tokens(decl: &PlaceDecl, tokens: &TokenMultiset) -> Result<(), NetError> {
    match tokens.distinct().find(|v| !decl.ty.admits(v)) {
        Some(bad) => Err(NetError::TypeViolation {
            place: decl.name.clone(),
            ty: decl.ty.shape.to_string(),
            token: bad.clone(),
        }),
        None => Ok(()),
    }
}

fn collect_pattern_vars(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Var(v) => {
            out.insert(v.clone());
        }
        Expr::Tuple(items) => items.iter().for_each(|i| collect_pattern_vars(i, out)),
        _ => {}
    }
}

/// True when every non-pattern sub-expression of `e` is closed under `b`.
fn pattern_ready(e: &Expr, b: &Binding) -> bool {
    match e {
        Expr::Var(_) => true,
        Expr::Tuple(items) => items.iter().all(|i| pattern_ready(i, b)),
        other => other.is_closed_under(b),
    }
}

fn unify(pattern: &Expr, token: &Value, b: &mut Binding, fns: &Functions) -> bool {
    match pattern {
        Expr::Var(v) => match b.get(v) {
            Some(bound) => bound == token,
            None => {
                b.insert(v, token.clone());
                true
            }
        },
        Expr::Tuple(items) => match token {
            Value::Tuple(vals) if vals.len() == items.len() => {
                items.iter().zip(vals).all(|(p, v)| unify(p, v, b, fns))
            }
            _ => false,
        },
        other if other.is_closed_under(b) => {
            matches!(evaluate(other, b, fns), Ok(v) if &v == token)
        }
        // not yet computable; the leaf re-evaluates the whole term
        _ => true,
    }
}

struct InputTerm<'a> {
    place: &'a str,
    expr: &'a Expr,
    weight: u32,
}

struct Search<'a> {
    net: &'a Hlpn,
    terms: &'a [InputTerm<'a>],
    guard: &'a Expr,
    fns: &'a Functions,
    found: BTreeSet<Binding>,
}

impl Search<'_> {
    fn run(&mut self, pending: Vec<usize>, binding: Binding) {
        if pending.is_empty() {
            self.check_leaf(binding);
            return;
        }
        // Prefer terms whose computed slots are already closed; otherwise
        // any term will do, its open slots being settled at the leaf.
        let pos = pending
            .iter()
            .position(|&i| pattern_ready(self.terms[i].expr, &binding))
            .unwrap_or(0);
        let mut rest = pending;
        let idx = rest.remove(pos);
        let term = &self.terms[idx];
        if term.expr.is_closed_under(&binding) {
            // Fully determined; availability is checked at the leaf.
            self.run(rest, binding);
            return;
        }
        let Some(tokens) = self.net.marking.get(term.place) else {
            return;
        };
        for token in tokens.distinct() {
            let mut b = binding.clone();
            if unify(term.expr, token, &mut b, self.fns) {
                self.run(rest.clone(), b);
            }
        }
    }

    fn check_leaf(&mut self, binding: Binding) {
        let mut demand: BTreeMap<&str, TokenMultiset> = BTreeMap::new();
        for t in self.terms {
            match evaluate(t.expr, &binding, self.fns) {
                Ok(v) => demand.entry(t.place).or_default().insert(v, t.weight),
                Err(e) => {
                    debug!("input term {} failed under {binding}: {e}", t.expr);
                    return;
                }
            }
        }
        let available = demand
            .iter()
            .all(|(p, bag)| self.net.marking.get(*p).is_some_and(|m| m.contains(bag)));
        if !available {
            return;
        }
        match evaluate(self.guard, &binding, self.fns) {
            Ok(Value::Bool(true)) => {
                self.found.insert(binding);
            }
            Ok(_) => {}
            Err(e) => debug!("guard {} failed under {binding}: {e}", self.guard),
        }
    }
}

#[derive(Default)]
pub struct HlpnBuilder {
    places: Vec<PlaceDecl>,
    transitions: Vec<TransitionDecl>,
    arcs: Vec<ArcDecl>,
    marking: Marking,
}

impl HlpnBuilder {
    pub fn place(mut self, name: &str, ty: PlaceType) -> Self {
        self.places.push(PlaceDecl {
            name: name.to_string(),
            ty,
        });
        self
    }

    pub fn transition(mut self, name: &str, guard: Expr) -> Self {
        self.transitions.push(TransitionDecl {
            name: name.to_string(),
            guard,
        });
        self
    }

    pub fn input(self, place: &str, transition: &str, annotation: Annotation) -> Self {
        self.arc(place, transition, Direction::In, annotation)
    }

    pub fn output(self, place: &str, transition: &str, annotation: Annotation) -> Self {
        self.arc(place, transition, Direction::Out, annotation)
    }

    /// Input and output arc with the same annotation: the token is read and
    /// put back.
    pub fn read(self, place: &str, transition: &str, annotation: Annotation) -> Self {
        self.input(place, transition, annotation.clone())
            .output(place, transition, annotation)
    }

    pub fn arc(
        mut self,
        place: &str,
        transition: &str,
        direction: Direction,
        annotation: Annotation,
    ) -> Self {
        self.arcs.push(ArcDecl {
            place: place.to_string(),
            transition: transition.to_string(),
            direction,
            annotation,
        });
        self
    }

    pub fn tokens(mut self, place: &str, tokens: impl IntoIterator<Item = Value>) -> Self {
        let m = self.marking.entry(place.to_string()).or_default();
        for v in tokens {
            m.add(v);
        }
        self
    }

    pub fn build(self) -> Result<Hlpn, NetError> {
        Hlpn::from_parts(self.places, self.transitions, self.arcs, self.marking)
    }
}
