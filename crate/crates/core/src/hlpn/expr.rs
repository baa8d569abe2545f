//! Guard and arc-annotation expressions.
//!
//! A closed AST evaluated under a [`Binding`]. Anything beyond the built-in
//! operators goes through named host functions looked up in a [`Functions`]
//! registry at evaluation time, so expressions stay serializable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::value::{Minutes, Time, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("type mismatch in `{op}`: {lhs} vs {rhs}")]
    TypeMismatch {
        op: &'static str,
        lhs: &'static str,
        rhs: &'static str,
    },
    #[error("expected {expected}, found {found}")]
    Expected {
        expected: &'static str,
        found: &'static str,
    },
    #[error("index {index} out of range for tuple of arity {arity}")]
    IndexOutOfRange { index: usize, arity: usize },
    #[error("unknown host function `{0}`")]
    UnknownFunction(String),
    #[error("host function `{name}`: {message}")]
    Host { name: String, message: String },
    #[error("arithmetic out of range in `{0}`")]
    Overflow(&'static str),
}

/// Variable assignment. Ordered by variable name, then by value, which gives
/// the canonical order of enumerated bindings.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Binding(BTreeMap<String, Value>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: &str, v: Value) -> Self {
        self.0.insert(var.to_string(), v);
        self
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.get(var)
    }

    pub fn insert(&mut self, var: &str, v: Value) -> Option<Value> {
        self.0.insert(var.to_string(), v)
    }

    pub fn contains(&self, var: &str) -> bool {
        self.0.contains_key(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinOp {
    Add,
    Sub,
    Min,
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Min => "min",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub const ALL: [BinOp; 11] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Min,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::And,
        BinOp::Or,
    ];
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Lit(Value),
    Var(String),
    Tuple(Vec<Expr>),
    Proj {
        of: Box<Expr>,
        index: usize,
    },
    Bin {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Not(Box<Expr>),
    Call {
        name: String,
        args: Vec<Expr>,
    },
}

impl Expr {
    pub fn lit(v: impl Into<Value>) -> Self {
        Expr::Lit(v.into())
    }

    pub fn var(name: &str) -> Self {
        Expr::Var(name.to_string())
    }

    pub fn truth() -> Self {
        Expr::Lit(Value::Bool(true))
    }

    pub fn tuple(items: impl IntoIterator<Item = Expr>) -> Self {
        Expr::Tuple(items.into_iter().collect())
    }

    pub fn proj(self, index: usize) -> Self {
        Expr::Proj {
            of: Box::new(self),
            index,
        }
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Bin {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, rhs: Expr) -> Self {
        Expr::bin(BinOp::Add, self, rhs)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, rhs: Expr) -> Self {
        Expr::bin(BinOp::Sub, self, rhs)
    }

    pub fn min(self, rhs: Expr) -> Self {
        Expr::bin(BinOp::Min, self, rhs)
    }

    pub fn eq(self, rhs: Expr) -> Self {
        Expr::bin(BinOp::Eq, self, rhs)
    }

    pub fn ne(self, rhs: Expr) -> Self {
        Expr::bin(BinOp::Ne, self, rhs)
    }

    pub fn lt(self, rhs: Expr) -> Self {
        Expr::bin(BinOp::Lt, self, rhs)
    }

    pub fn le(self, rhs: Expr) -> Self {
        Expr::bin(BinOp::Le, self, rhs)
    }

    pub fn gt(self, rhs: Expr) -> Self {
        Expr::bin(BinOp::Gt, self, rhs)
    }

    pub fn ge(self, rhs: Expr) -> Self {
        Expr::bin(BinOp::Ge, self, rhs)
    }

    pub fn and(self, rhs: Expr) -> Self {
        Expr::bin(BinOp::And, self, rhs)
    }

    pub fn or(self, rhs: Expr) -> Self {
        Expr::bin(BinOp::Or, self, rhs)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Expr::Not(Box::new(self))
    }

    pub fn call(name: &str, args: impl IntoIterator<Item = Expr>) -> Self {
        Expr::Call {
            name: name.to_string(),
            args: args.into_iter().collect(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Tuple(items) => items.iter().for_each(|e| e.collect_vars(out)),
            Expr::Proj { of, .. } => of.collect_vars(out),
            Expr::Bin { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            Expr::Not(e) => e.collect_vars(out),
            Expr::Call { args, .. } => args.iter().for_each(|e| e.collect_vars(out)),
        }
    }

    pub fn is_closed_under(&self, b: &Binding) -> bool {
        self.free_vars().iter().all(|v| b.contains(v))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Tuple(items) => {
                f.write_str("(")?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str(")")
            }
            Expr::Proj { of, index } => write!(f, "{of}.{index}"),
            Expr::Bin {
                op: BinOp::Min,
                lhs,
                rhs,
            } => write!(f, "min({lhs}, {rhs})"),
            Expr::Bin { op, lhs, rhs } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Expr::Not(e) => write!(f, "not {e}"),
            Expr::Call { name, args } => {
                write!(f, "{name}(")?;
                for (i, e) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str(")")
            }
        }
    }
}

pub type HostFn = Arc<dyn Fn(&[Value]) -> Result<Value, EvalError> + Send + Sync>;

/// Named host functions callable from expressions.
#[derive(Clone, Default)]
pub struct Functions {
    table: BTreeMap<String, HostFn>,
}

impl fmt::Debug for Functions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.table.keys()).finish()
    }
}

impl Functions {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `max`, `abs`, `ite`, `to_minutes`, `from_minutes`.
    pub fn standard() -> Self {
        let mut fns = Self::empty();
        fns.register("max", |args| {
            let [a, b] = args else {
                return Err(arity("max", 2));
            };
            if a.tag() != b.tag() {
                return Err(EvalError::TypeMismatch {
                    op: "max",
                    lhs: a.tag(),
                    rhs: b.tag(),
                });
            }
            Ok(a.max(b).clone())
        });
        fns.register("abs", |args| match args {
            [Value::Int(i)] => i
                .checked_abs()
                .map(Value::Int)
                .ok_or(EvalError::Overflow("abs")),
            [v] => Err(EvalError::Expected {
                expected: "int",
                found: v.tag(),
            }),
            _ => Err(arity("abs", 1)),
        });
        fns.register("ite", |args| match args {
            [Value::Bool(c), a, b] => Ok(if *c { a.clone() } else { b.clone() }),
            [c, _, _] => Err(EvalError::Expected {
                expected: "bool",
                found: c.tag(),
            }),
            _ => Err(arity("ite", 3)),
        });
        fns.register("to_minutes", |args| match args {
            [Value::Time(t)] => Ok(Value::Int(i64::from(t.minutes()))),
            [Value::Duration(d)] => Ok(Value::Int(i64::from(d.0))),
            [v] => Err(EvalError::Expected {
                expected: "time",
                found: v.tag(),
            }),
            _ => Err(arity("to_minutes", 1)),
        });
        fns.register("from_minutes", |args| match args {
            [Value::Int(i)] => u32::try_from(*i)
                .map(|m| Value::Time(Time::from_minutes(m)))
                .map_err(|_| EvalError::Overflow("from_minutes")),
            [v] => Err(EvalError::Expected {
                expected: "int",
                found: v.tag(),
            }),
            _ => Err(arity("from_minutes", 1)),
        });
        fns
    }

    pub fn register<F>(&mut self, name: &str, f: F)
    where
        F: Fn(&[Value]) -> Result<Value, EvalError> + Send + Sync + 'static,
    {
        self.table.insert(name.to_string(), Arc::new(f));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.table.contains_key(name)
    }

    pub fn call(&self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
        let f = self
            .table
            .get(name)
            .ok_or_else(|| EvalError::UnknownFunction(name.to_string()))?;
        f(args)
    }
}

fn arity(name: &str, n: usize) -> EvalError {
    EvalError::Host {
        name: name.to_string(),
        message: format!("expected {n} argument(s)"),
    }
}

/// Evaluate `expr` under `binding`. `and`/`or` short-circuit left to right.
pub fn evaluate(expr: &Expr, binding: &Binding, fns: &Functions) -> Result<Value, EvalError> {
    match expr {
        Expr::Lit(v) => Ok(v.clone()),
        Expr::Var(name) => binding
            .get(name)
            .cloned()
            .ok_or_else(|| EvalError::Unbound(name.clone())),
        Expr::Tuple(items) => items
            .iter()
            .map(|e| evaluate(e, binding, fns))
            .collect::<Result<Vec<_>, _>>()
            .map(Value::Tuple),
        Expr::Proj { of, index } => match evaluate(of, binding, fns)? {
            Value::Tuple(mut items) => {
                let arity = items.len();
                if *index < arity {
                    Ok(items.swap_remove(*index))
                } else {
                    Err(EvalError::IndexOutOfRange {
                        index: *index,
                        arity,
                    })
                }
            }
            other => Err(EvalError::Expected {
                expected: "tuple",
                found: other.tag(),
            }),
        },
        Expr::Not(e) => match evaluate(e, binding, fns)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            other => Err(EvalError::Expected {
                expected: "bool",
                found: other.tag(),
            }),
        },
        Expr::Bin {
            op: op @ (BinOp::And | BinOp::Or),
            lhs,
            rhs,
        } => {
            let l = expect_bool(evaluate(lhs, binding, fns)?)?;
            match (op, l) {
                (BinOp::And, false) => Ok(Value::Bool(false)),
                (BinOp::Or, true) => Ok(Value::Bool(true)),
                _ => expect_bool(evaluate(rhs, binding, fns)?).map(Value::Bool),
            }
        }
        Expr::Bin { op, lhs, rhs } => {
            let l = evaluate(lhs, binding, fns)?;
            let r = evaluate(rhs, binding, fns)?;
            apply(*op, l, r)
        }
        Expr::Call { name, args } => {
            let vals = args
                .iter()
                .map(|e| evaluate(e, binding, fns))
                .collect::<Result<Vec<_>, _>>()?;
            fns.call(name, &vals)
        }
    }
}

fn expect_bool(v: Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::Expected {
            expected: "bool",
            found: other.tag(),
        }),
    }
}

fn mismatch(op: BinOp, l: &Value, r: &Value) -> EvalError {
    EvalError::TypeMismatch {
        op: op.symbol(),
        lhs: l.tag(),
        rhs: r.tag(),
    }
}

fn apply(op: BinOp, l: Value, r: Value) -> Result<Value, EvalError> {
    use Value::*;
    match op {
        BinOp::Add => match (&l, &r) {
            (Int(a), Int(b)) => a.checked_add(*b).map(Int).ok_or(EvalError::Overflow("+")),
            (Time(t), Duration(d)) | (Duration(d), Time(t)) => {
                t.checked_add(*d).map(Time).ok_or(EvalError::Overflow("+"))
            }
            (Duration(a), Duration(b)) => {
                a.0.checked_add(b.0)
                    .map(|m| Duration(Minutes(m)))
                    .ok_or(EvalError::Overflow("+"))
            }
            _ => Err(mismatch(op, &l, &r)),
        },
        BinOp::Sub => match (&l, &r) {
            (Int(a), Int(b)) => a.checked_sub(*b).map(Int).ok_or(EvalError::Overflow("-")),
            (Time(t), Duration(d)) => t.checked_sub(*d).map(Time).ok_or(EvalError::Overflow("-")),
            (Time(a), Time(b)) => Ok(Int(a.since(*b))),
            (Duration(a), Duration(b)) => {
                a.0.checked_sub(b.0)
                    .map(|m| Duration(Minutes(m)))
                    .ok_or(EvalError::Overflow("-"))
            }
            _ => Err(mismatch(op, &l, &r)),
        },
        BinOp::Min => {
            if l.tag() != r.tag() {
                return Err(mismatch(op, &l, &r));
            }
            Ok(l.min(r))
        }
        BinOp::Eq | BinOp::Ne => {
            let comparable = l.tag() == r.tag() || l == Absent || r == Absent;
            if !comparable {
                return Err(mismatch(op, &l, &r));
            }
            Ok(Bool((l == r) == (op == BinOp::Eq)))
        }
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            if l.tag() != r.tag() {
                return Err(mismatch(op, &l, &r));
            }
            let ord = l.cmp(&r);
            Ok(Bool(match op {
                BinOp::Lt => ord.is_lt(),
                BinOp::Le => ord.is_le(),
                BinOp::Gt => ord.is_gt(),
                _ => ord.is_ge(),
            }))
        }
        BinOp::And | BinOp::Or => unreachable!("handled with short-circuit"),
    }
}
