//! A managed net reified as the marking of a four-place meta-net.
//!
//! Each declaration becomes one token; expressions and place shapes are
//! themselves encoded as [`Value`] trees. Every token carries its declaration
//! index so decoding restores the original order exactly.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hlpn::{
    Annotation, ArcDecl, BinOp, Binding, Direction, Expr, Firing, Functions, Hlpn, Marking,
    NetError, PlaceDecl, PlaceType, Policy, Shape, Symbol, TokenMultiset, TransitionDecl, Value,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmulatorError {
    #[error("malformed encoding: {0}")]
    Malformed(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("structural change `{0}` is forbidden by the executor policy")]
    StructuralChange(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// What the executor may touch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutorPolicy {
    pub allow_structural: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MoveEvent {
    pub step: u64,
    pub transition: String,
    pub binding: Binding,
}

impl fmt::Display for MoveEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {} {}", self.step, self.transition, self.binding)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodedNet {
    /// `(index, name, type, marking)`
    pub places: TokenMultiset,
    /// `(index, name, guard)`
    pub transitions: TokenMultiset,
    /// `(index, place, transition, annotation)`
    pub input_arcs: TokenMultiset,
    /// `(index, transition, place, annotation)`
    pub output_arcs: TokenMultiset,
    /// Number of emulated firings so far.
    pub moves: u64,
}

impl EncodedNet {
    pub fn encode(net: &Hlpn) -> Self {
        let mut e = EncodedNet::default();
        for (i, p) in net.places().iter().enumerate() {
            let marking = net.tokens(&p.name).cloned().unwrap_or_default();
            e.places.add(Value::tuple([
                idx(i),
                name(&p.name),
                encode_type(&p.ty),
                encode_marking(&marking),
            ]));
        }
        for (i, t) in net.transitions().iter().enumerate() {
            e.transitions
                .add(Value::tuple([idx(i), name(&t.name), encode_expr(&t.guard)]));
        }
        for (i, a) in net.arcs().iter().enumerate() {
            let ann = encode_annotation(&a.annotation);
            match a.direction {
                Direction::In => e.input_arcs.add(Value::tuple([
                    idx(i),
                    name(&a.place),
                    name(&a.transition),
                    ann,
                ])),
                Direction::Out => e.output_arcs.add(Value::tuple([
                    idx(i),
                    name(&a.transition),
                    name(&a.place),
                    ann,
                ])),
            }
        }
        e
    }

    pub fn decode(&self) -> Result<Hlpn, EmulatorError> {
        let mut places = Vec::new();
        let mut marking = Marking::new();
        for (i, v) in self.places.tokens().enumerate() {
            let f = fields(v, 4, "place")?;
            expect_index(&f[0], i)?;
            let pname = sym(&f[1])?.to_string();
            marking.insert(pname.clone(), decode_marking(&f[3])?);
            places.push(PlaceDecl {
                name: pname,
                ty: decode_type(&f[2])?,
            });
        }
        let mut transitions = Vec::new();
        for (i, v) in self.transitions.tokens().enumerate() {
            let f = fields(v, 3, "transition")?;
            expect_index(&f[0], i)?;
            transitions.push(TransitionDecl {
                name: sym(&f[1])?.to_string(),
                guard: decode_expr(&f[2])?,
            });
        }
        let mut arcs: Vec<(i64, ArcDecl)> = Vec::new();
        for v in self.input_arcs.tokens() {
            let f = fields(v, 4, "input arc")?;
            arcs.push((
                int(&f[0])?,
                ArcDecl {
                    place: sym(&f[1])?.to_string(),
                    transition: sym(&f[2])?.to_string(),
                    direction: Direction::In,
                    annotation: decode_annotation(&f[3])?,
                },
            ));
        }
        for v in self.output_arcs.tokens() {
            let f = fields(v, 4, "output arc")?;
            arcs.push((
                int(&f[0])?,
                ArcDecl {
                    transition: sym(&f[1])?.to_string(),
                    place: sym(&f[2])?.to_string(),
                    direction: Direction::Out,
                    annotation: decode_annotation(&f[3])?,
                },
            ));
        }
        arcs.sort_by_key(|(i, _)| *i);
        for (expected, (i, _)) in arcs.iter().enumerate() {
            if *i != expected as i64 {
                return Err(EmulatorError::Malformed(format!(
                    "arc index {i} where {expected} expected"
                )));
            }
        }
        let arcs = arcs.into_iter().map(|(_, a)| a).collect();
        Ok(Hlpn::from_parts(places, transitions, arcs, marking)?)
    }

    /// Every binding of the `move` transition: one per enabled firing of the
    /// emulated net, in canonical order.
    pub fn moves(&self, fns: &Functions) -> Result<Vec<Firing>, EmulatorError> {
        Ok(self.decode()?.enabled(fns))
    }

    /// Fire `move` under one of its bindings.
    pub fn apply_move(
        &self,
        firing: &Firing,
        fns: &Functions,
    ) -> Result<(EncodedNet, MoveEvent), EmulatorError> {
        let next = self
            .decode()?
            .fire(&firing.transition, &firing.binding, fns)?;
        let mut e = EncodedNet::encode(&next);
        e.moves = self.moves + 1;
        let event = MoveEvent {
            step: self.moves,
            transition: firing.transition.clone(),
            binding: firing.binding.clone(),
        };
        Ok((e, event))
    }

    /// The single `move` transition: fire one enabled transition of the
    /// emulated net, chosen by `policy`.
    pub fn fire_move(
        &self,
        policy: &mut Policy,
        fns: &Functions,
    ) -> Result<(EncodedNet, Option<MoveEvent>), EmulatorError> {
        match policy.choose(self.moves(fns)?) {
            None => Ok((self.clone(), None)),
            Some(f) => {
                let (e, ev) = self.apply_move(&f, fns)?;
                Ok((e, Some(ev)))
            }
        }
    }

    fn place_entry(&self, place: &str) -> Result<&Value, EmulatorError> {
        self.places
            .distinct()
            .find(|v| matches!(v, Value::Tuple(f) if f.len() == 4 && f[1].as_sym().is_some_and(|s| s.as_str() == place)))
            .ok_or_else(|| EmulatorError::UnknownPlace(place.to_string()))
    }

    pub fn get_tokens(&self, place: &str) -> Result<TokenMultiset, EmulatorError> {
        let f = fields(self.place_entry(place)?, 4, "place")?;
        decode_marking(&f[3])
    }

    pub fn get_marking(&self) -> Result<Marking, EmulatorError> {
        self.places
            .distinct()
            .map(|v| {
                let f = fields(v, 4, "place")?;
                Ok((sym(&f[1])?.to_string(), decode_marking(&f[3])?))
            })
            .collect()
    }

    pub fn get_arcs(&self) -> Result<Vec<ArcDecl>, EmulatorError> {
        Ok(self.decode()?.arcs().to_vec())
    }

    pub fn place_type(&self, place: &str) -> Result<PlaceType, EmulatorError> {
        let f = fields(self.place_entry(place)?, 4, "place")?;
        decode_type(&f[2])
    }

    pub fn set_tokens(&self, place: &str, m: TokenMultiset) -> Result<EncodedNet, EmulatorError> {
        let entry = self.place_entry(place)?.clone();
        let f = fields(&entry, 4, "place")?;
        let ty = decode_type(&f[2])?;
        if let Some(bad) = m.distinct().find(|v| !ty.admits(v)) {
            return Err(NetError::TypeViolation {
                place: place.to_string(),
                ty: ty.shape.to_string(),
                token: bad.clone(),
            }
            .into());
        }
        let replaced = Value::tuple([f[0].clone(), f[1].clone(), f[2].clone(), encode_marking(&m)]);
        let mut next = self.clone();
        next.places
            .remove(&entry, 1)
            .map_err(|e| EmulatorError::Malformed(e.to_string()))?;
        next.places.add(replaced);
        Ok(next)
    }

    pub fn add_token(&self, place: &str, v: Value) -> Result<EncodedNet, EmulatorError> {
        let mut m = self.get_tokens(place)?;
        m.add(v);
        self.set_tokens(place, m)
    }

    pub fn remove_token(&self, place: &str, v: &Value) -> Result<EncodedNet, EmulatorError> {
        let mut m = self.get_tokens(place)?;
        m.remove(v, 1)
            .map_err(|e| EmulatorError::Malformed(e.to_string()))?;
        self.set_tokens(place, m)
    }

    pub fn set_arc_annotation(
        &self,
        place: &str,
        transition: &str,
        direction: Direction,
        annotation: Annotation,
    ) -> Result<EncodedNet, EmulatorError> {
        let net = self
            .decode()?
            .with_arc_annotation(place, transition, direction, annotation)?;
        Ok(self.reencoded(&net))
    }

    pub fn add_place(
        &self,
        decl: PlaceDecl,
        policy: ExecutorPolicy,
    ) -> Result<EncodedNet, EmulatorError> {
        if !policy.allow_structural {
            return Err(EmulatorError::StructuralChange(format!(
                "add place {}",
                decl.name
            )));
        }
        let net = self.decode()?.with_place(decl)?;
        Ok(self.reencoded(&net))
    }

    pub fn remove_place(
        &self,
        place: &str,
        policy: ExecutorPolicy,
    ) -> Result<EncodedNet, EmulatorError> {
        if !policy.allow_structural {
            return Err(EmulatorError::StructuralChange(format!(
                "remove place {place}"
            )));
        }
        let net = self.decode()?.without_place(place)?;
        Ok(self.reencoded(&net))
    }

    fn reencoded(&self, net: &Hlpn) -> EncodedNet {
        let mut e = EncodedNet::encode(net);
        e.moves = self.moves;
        e
    }
}

fn idx(i: usize) -> Value {
    Value::Int(i as i64)
}

fn name(s: &str) -> Value {
    Value::Sym(Symbol::new(s))
}

fn malformed(what: &str, v: &Value) -> EmulatorError {
    EmulatorError::Malformed(format!("bad {what}: {v}"))
}

fn fields<'a>(v: &'a Value, arity: usize, what: &str) -> Result<&'a [Value], EmulatorError> {
    match v.as_tuple() {
        Some(f) if f.len() == arity => Ok(f),
        _ => Err(malformed(what, v)),
    }
}

fn sym(v: &Value) -> Result<&str, EmulatorError> {
    v.as_sym()
        .map(Symbol::as_str)
        .ok_or_else(|| malformed("symbol", v))
}

fn int(v: &Value) -> Result<i64, EmulatorError> {
    v.as_int().ok_or_else(|| malformed("integer", v))
}

fn expect_index(v: &Value, i: usize) -> Result<(), EmulatorError> {
    if int(v)? == i as i64 {
        Ok(())
    } else {
        Err(EmulatorError::Malformed(format!(
            "declaration index {v} where {i} expected"
        )))
    }
}

fn tagged(tag: &str, rest: impl IntoIterator<Item = Value>) -> Value {
    Value::tuple(std::iter::once(name(tag)).chain(rest))
}

fn encode_marking(m: &TokenMultiset) -> Value {
    Value::tuple(
        m.iter()
            .map(|(v, n)| Value::pair(v.clone(), Value::Int(i64::from(n)))),
    )
}

fn decode_marking(v: &Value) -> Result<TokenMultiset, EmulatorError> {
    let entries = v.as_tuple().ok_or_else(|| malformed("marking", v))?;
    let mut m = TokenMultiset::new();
    for e in entries {
        let f = fields(e, 2, "marking entry")?;
        let n = u32::try_from(int(&f[1])?)
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| malformed("multiplicity", &f[1]))?;
        m.insert(f[0].clone(), n);
    }
    Ok(m)
}

fn encode_type(t: &PlaceType) -> Value {
    Value::pair(Value::Sym(t.name.clone()), encode_shape(&t.shape))
}

fn decode_type(v: &Value) -> Result<PlaceType, EmulatorError> {
    let f = fields(v, 2, "place type")?;
    Ok(PlaceType {
        name: Symbol::new(sym(&f[0])?),
        shape: decode_shape(&f[1])?,
    })
}

fn encode_shape(s: &Shape) -> Value {
    match s {
        Shape::Any => name("any"),
        Shape::Int => name("int"),
        Shape::Time => name("time"),
        Shape::Duration => name("duration"),
        Shape::Bool => name("bool"),
        Shape::Sym => name("sym"),
        Shape::Absent => name("absent"),
        Shape::Tuple(items) => Value::tuple(items.iter().map(encode_shape)),
    }
}

fn decode_shape(v: &Value) -> Result<Shape, EmulatorError> {
    if let Some(items) = v.as_tuple() {
        return items
            .iter()
            .map(decode_shape)
            .collect::<Result<_, _>>()
            .map(Shape::Tuple);
    }
    Ok(match sym(v)? {
        "any" => Shape::Any,
        "int" => Shape::Int,
        "time" => Shape::Time,
        "duration" => Shape::Duration,
        "bool" => Shape::Bool,
        "sym" => Shape::Sym,
        "absent" => Shape::Absent,
        _ => return Err(malformed("shape", v)),
    })
}

fn encode_annotation(a: &Annotation) -> Value {
    Value::tuple(
        a.terms()
            .iter()
            .map(|(e, n)| Value::pair(encode_expr(e), Value::Int(i64::from(*n)))),
    )
}

fn decode_annotation(v: &Value) -> Result<Annotation, EmulatorError> {
    let terms = v.as_tuple().ok_or_else(|| malformed("annotation", v))?;
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        let f = fields(t, 2, "annotation term")?;
        let n = u32::try_from(int(&f[1])?).map_err(|_| malformed("weight", &f[1]))?;
        out.push((decode_expr(&f[0])?, n));
    }
    Ok(Annotation::bag(out))
}

fn encode_expr(e: &Expr) -> Value {
    match e {
        Expr::Lit(v) => tagged("lit", [v.clone()]),
        Expr::Var(x) => tagged("var", [name(x)]),
        Expr::Tuple(items) => tagged("tuple", [Value::tuple(items.iter().map(encode_expr))]),
        Expr::Proj { of, index } => tagged("proj", [encode_expr(of), idx(*index)]),
        Expr::Bin { op, lhs, rhs } => tagged(
            "bin",
            [name(op.symbol()), encode_expr(lhs), encode_expr(rhs)],
        ),
        Expr::Not(inner) => tagged("not", [encode_expr(inner)]),
        Expr::Call { name: f, args } => tagged(
            "call",
            [name(f), Value::tuple(args.iter().map(encode_expr))],
        ),
    }
}

fn decode_expr(v: &Value) -> Result<Expr, EmulatorError> {
    let f = v.as_tuple().ok_or_else(|| malformed("expression", v))?;
    let (tag, rest) = f.split_first().ok_or_else(|| malformed("expression", v))?;
    let list = |x: &Value| -> Result<Vec<Expr>, EmulatorError> {
        x.as_tuple()
            .ok_or_else(|| malformed("expression list", x))?
            .iter()
            .map(decode_expr)
            .collect()
    };
    Ok(match (sym(tag)?, rest) {
        ("lit", [x]) => Expr::Lit(x.clone()),
        ("var", [x]) => Expr::Var(sym(x)?.to_string()),
        ("tuple", [x]) => Expr::Tuple(list(x)?),
        ("proj", [of, i]) => Expr::Proj {
            of: Box::new(decode_expr(of)?),
            index: usize::try_from(int(i)?).map_err(|_| malformed("index", i))?,
        },
        ("bin", [op, l, r]) => {
            let op = BinOp::ALL
                .into_iter()
                .find(|o| o.symbol() == sym(op).unwrap_or(""))
                .ok_or_else(|| malformed("operator", op))?;
            Expr::Bin {
                op,
                lhs: Box::new(decode_expr(l)?),
                rhs: Box::new(decode_expr(r)?),
            }
        }
        ("not", [x]) => Expr::Not(Box::new(decode_expr(x)?)),
        ("call", [fname, args]) => Expr::Call {
            name: sym(fname)?.to_string(),
            args: list(args)?,
        },
        _ => return Err(malformed("expression", v)),
    })
}
