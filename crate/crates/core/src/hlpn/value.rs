//! Token payloads and place types.
//!
//! Values are a small tagged union: integers, clock times, durations,
//! booleans, interned symbols, fixed-arity tuples and an explicit "absent".
//! The derived ordering (tag order first, then recursive lexicographic) is the
//! canonical order used everywhere determinism matters.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Minutes since midnight. Hours past 23 are allowed so that plans may spill
/// over into the next day.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Time(u32);

impl Time {
    pub const MIDNIGHT: Time = Time(0);

    pub const fn from_minutes(minutes: u32) -> Self {
        Time(minutes)
    }

    pub const fn hm(hours: u32, minutes: u32) -> Self {
        Time(hours * 60 + minutes)
    }

    pub const fn minutes(self) -> u32 {
        self.0
    }

    pub fn checked_add(self, d: Minutes) -> Option<Time> {
        self.0.checked_add(d.0).map(Time)
    }

    pub fn checked_sub(self, d: Minutes) -> Option<Time> {
        self.0.checked_sub(d.0).map(Time)
    }

    /// Signed difference `self - earlier` in minutes.
    pub fn since(self, earlier: Time) -> i64 {
        i64::from(self.0) - i64::from(earlier.0)
    }

    /// Shift by a signed number of minutes; `None` if the result would be
    /// before midnight.
    pub fn shifted(self, delta: i64) -> Option<Time> {
        let m = i64::from(self.0) + delta;
        u32::try_from(m).ok().map(Time)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:02}", self.0 / 60, self.0 % 60)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid time {0:?}, expected H:MM")]
pub struct ParseTimeError(pub String);

impl FromStr for Time {
    type Err = ParseTimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseTimeError(s.to_string());
        let (h, m) = s.trim().split_once(':').ok_or_else(err)?;
        let h: u32 = h.trim().parse().map_err(|_| err())?;
        let m: u32 = m.trim().parse().map_err(|_| err())?;
        if m >= 60 || h > 9_999 {
            return Err(err());
        }
        Ok(Time::hm(h, m))
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A non-negative duration in whole minutes.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Minutes(pub u32);

impl fmt::Display for Minutes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Interned-ish string: cheap to clone, compared by content.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "'{}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl From<String> for Symbol {
    fn from(s: String) -> Self {
        Symbol(Arc::from(s))
    }
}

/// A token payload.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Int(i64),
    Time(Time),
    Duration(Minutes),
    Bool(bool),
    Sym(Symbol),
    Tuple(Vec<Value>),
    Absent,
}

impl Value {
    pub fn int(i: i64) -> Self {
        Value::Int(i)
    }

    pub fn sym(s: &str) -> Self {
        Value::Sym(Symbol::new(s))
    }

    pub fn time(h: u32, m: u32) -> Self {
        Value::Time(Time::hm(h, m))
    }

    pub fn duration(m: u32) -> Self {
        Value::Duration(Minutes(m))
    }

    pub fn tuple(items: impl IntoIterator<Item = Value>) -> Self {
        Value::Tuple(items.into_iter().collect())
    }

    pub fn pair(a: Value, b: Value) -> Self {
        Value::Tuple(vec![a, b])
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Time(_) => "time",
            Value::Duration(_) => "duration",
            Value::Bool(_) => "bool",
            Value::Sym(_) => "sym",
            Value::Tuple(_) => "tuple",
            Value::Absent => "absent",
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_time(&self) -> Option<Time> {
        match self {
            Value::Time(t) => Some(*t),
            _ => None,
        }
    }

    pub fn as_duration(&self) -> Option<Minutes> {
        match self {
            Value::Duration(d) => Some(*d),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&Symbol> {
        match self {
            Value::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[Value]> {
        match self {
            Value::Tuple(items) => Some(items),
            _ => None,
        }
    }

    /// Scalar view used when comparing quality values against thresholds.
    /// Times and durations map to minutes, booleans to 0/1.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Time(t) => Some(f64::from(t.minutes())),
            Value::Duration(d) => Some(f64::from(d.0)),
            Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Time(t) => write!(f, "{t}"),
            Value::Duration(d) => write!(f, "{d}min"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Sym(s) => write!(f, "{s}"),
            Value::Tuple(items) => {
                f.write_str("(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
            Value::Absent => f.write_str("_"),
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<Time> for Value {
    fn from(t: Time) -> Self {
        Value::Time(t)
    }
}

impl From<Minutes> for Value {
    fn from(d: Minutes) -> Self {
        Value::Duration(d)
    }
}

impl From<Symbol> for Value {
    fn from(s: Symbol) -> Self {
        Value::Sym(s)
    }
}

/// Schema tree over value tags.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Any,
    Int,
    Time,
    Duration,
    Bool,
    Sym,
    Absent,
    Tuple(Vec<Shape>),
}

impl Shape {
    pub fn admits(&self, v: &Value) -> bool {
        match (self, v) {
            (Shape::Any, _) => true,
            (Shape::Int, Value::Int(_))
            | (Shape::Time, Value::Time(_))
            | (Shape::Duration, Value::Duration(_))
            | (Shape::Bool, Value::Bool(_))
            | (Shape::Sym, Value::Sym(_))
            | (Shape::Absent, Value::Absent) => true,
            (Shape::Tuple(shapes), Value::Tuple(items)) => {
                shapes.len() == items.len() && shapes.iter().zip(items).all(|(s, v)| s.admits(v))
            }
            _ => false,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Any => f.write_str("any"),
            Shape::Int => f.write_str("int"),
            Shape::Time => f.write_str("time"),
            Shape::Duration => f.write_str("duration"),
            Shape::Bool => f.write_str("bool"),
            Shape::Sym => f.write_str("sym"),
            Shape::Absent => f.write_str("absent"),
            Shape::Tuple(items) => {
                f.write_str("(")?;
                for (i, s) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// The colour set of a place.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlaceType {
    pub name: Symbol,
    pub shape: Shape,
}

impl PlaceType {
    pub fn new(name: &str, shape: Shape) -> Self {
        PlaceType {
            name: Symbol::new(name),
            shape,
        }
    }

    pub fn any() -> Self {
        PlaceType::new("any", Shape::Any)
    }

    pub fn admits(&self, v: &Value) -> bool {
        self.shape.admits(v)
    }
}
