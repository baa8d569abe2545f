use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AircraftError;
use crate::hlpn::{Minutes, Time, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    H,
    M,
    L,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::H, Category::M, Category::L];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::H => "H",
            Category::M => "M",
            Category::L => "L",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = AircraftError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().trim_matches('\'') {
            "H" => Ok(Category::H),
            "M" => Ok(Category::M),
            "L" => Ok(Category::L),
            other => Err(AircraftError::Parse(format!("unknown category `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceState {
    Free,
    Occupied,
    Inoperative,
}

impl ResourceState {
    pub fn as_str(self) -> &'static str {
        match self {
            ResourceState::Free => "free",
            ResourceState::Occupied => "occupied",
            ResourceState::Inoperative => "inoperative",
        }
    }

    pub fn to_value(self) -> Value {
        Value::sym(self.as_str())
    }

    pub fn from_value(v: &Value) -> Result<Self, AircraftError> {
        v.as_sym()
            .ok_or_else(|| AircraftError::Parse(format!("resource state {v}")))?
            .as_str()
            .parse()
    }
}

impl FromStr for ResourceState {
    type Err = AircraftError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "free" => Ok(ResourceState::Free),
            "occupied" => Ok(ResourceState::Occupied),
            "inoperative" => Ok(ResourceState::Inoperative),
            other => Err(AircraftError::Parse(format!(
                "unknown resource state `{other}`"
            ))),
        }
    }
}

/// A parking position: terminal `k`, gate `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GateId {
    pub k: u32,
    pub d: u32,
}

impl GateId {
    pub fn new(k: u32, d: u32) -> Self {
        GateId { k, d }
    }

    pub fn to_value(self) -> Value {
        Value::pair(Value::int(i64::from(self.k)), Value::int(i64::from(self.d)))
    }

    pub fn from_value(v: &Value) -> Result<Self, AircraftError> {
        match v.as_tuple() {
            Some([k, d]) => Ok(GateId::new(id_of(k)?, id_of(d)?)),
            _ => Err(AircraftError::Parse(format!("gate {v}"))),
        }
    }
}

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.k, self.d)
    }
}

impl FromStr for GateId {
    type Err = AircraftError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AircraftError::Parse(format!("gate `{s}`"));
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (k, d) = inner.split_once(',').ok_or_else(bad)?;
        Ok(GateId::new(
            k.trim().parse().map_err(|_| bad())?,
            d.trim().parse().map_err(|_| bad())?,
        ))
    }
}

impl Serialize for GateId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GateId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn id_of(v: &Value) -> Result<u32, AircraftError> {
    v.as_int()
        .and_then(|i| u32::try_from(i).ok())
        .ok_or_else(|| AircraftError::Parse(format!("identifier {v}")))
}

/// One row of the planning table.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Aircraft {
    pub id: u32,
    pub category: Category,
    pub runway: u32,
    pub gateway: u32,
    pub gate: GateId,
    /// At the sequencing point.
    pub ts: Time,
    /// Flight time from sequencing point to touchdown.
    pub t: Minutes,
    pub tr: Time,
    pub tg: Time,
    pub tp: Minutes,
    pub tk: Time,
    pub tf: Time,
}

impl Aircraft {
    pub fn check_order(&self) -> Result<(), AircraftError> {
        let times = [self.ts, self.tr, self.tg, self.tk, self.tf];
        if times.windows(2).all(|w| w[0] <= w[1]) {
            Ok(())
        } else {
            Err(AircraftError::TimeOrder(self.id))
        }
    }

    pub fn to_value(&self) -> Value {
        Value::tuple([
            Value::int(i64::from(self.id)),
            Value::sym(self.category.as_str()),
            Value::int(i64::from(self.runway)),
            Value::int(i64::from(self.gateway)),
            self.gate.to_value(),
            Value::Time(self.ts),
            Value::Duration(self.t),
            Value::Time(self.tr),
            Value::Time(self.tg),
            Value::Duration(self.tp),
            Value::Time(self.tk),
            Value::Time(self.tf),
        ])
    }

    pub fn from_value(v: &Value) -> Result<Self, AircraftError> {
        let bad = || AircraftError::Parse(format!("aircraft tuple {v}"));
        let f = v.as_tuple().filter(|f| f.len() == 12).ok_or_else(bad)?;
        let time = |x: &Value| x.as_time().ok_or_else(bad);
        let dur = |x: &Value| x.as_duration().ok_or_else(bad);
        Ok(Aircraft {
            id: id_of(&f[0])?,
            category: f[1].as_sym().ok_or_else(bad)?.as_str().parse()?,
            runway: id_of(&f[2])?,
            gateway: id_of(&f[3])?,
            gate: GateId::from_value(&f[4])?,
            ts: time(&f[5])?,
            t: dur(&f[6])?,
            tr: time(&f[7])?,
            tg: time(&f[8])?,
            tp: dur(&f[9])?,
            tk: time(&f[10])?,
            tf: time(&f[11])?,
        })
    }

    pub fn resource(&self, dim: Dim) -> ResourceId {
        match dim {
            Dim::Runway => ResourceId::Runway(self.runway),
            Dim::Gateway => ResourceId::Gateway(self.gateway),
            Dim::Gate => ResourceId::Gate(self.gate),
        }
    }

    pub fn with_resource(&self, r: ResourceId) -> Aircraft {
        let mut a = self.clone();
        match r {
            ResourceId::Runway(x) => a.runway = x,
            ResourceId::Gateway(x) => a.gateway = x,
            ResourceId::Gate(x) => a.gate = x,
        }
        a
    }
}

/// The three resource kinds an aircraft occupies in turn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dim {
    Runway,
    Gateway,
    Gate,
}

impl Dim {
    pub const ALL: [Dim; 3] = [Dim::Runway, Dim::Gateway, Dim::Gate];

    pub fn as_str(self) -> &'static str {
        match self {
            Dim::Runway => "runway",
            Dim::Gateway => "gateway",
            Dim::Gate => "gate",
        }
    }

    pub fn quality(self) -> &'static str {
        match self {
            Dim::Runway => "landing-safety",
            Dim::Gateway => "taxi-safety",
            Dim::Gate => "gate-safety",
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dim {
    type Err = AircraftError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "runway" => Ok(Dim::Runway),
            "gateway" => Ok(Dim::Gateway),
            "gate" => Ok(Dim::Gate),
            other => Err(AircraftError::Parse(format!(
                "unknown resource kind `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResourceId {
    Runway(u32),
    Gateway(u32),
    Gate(GateId),
}

impl ResourceId {
    pub fn dim(self) -> Dim {
        match self {
            ResourceId::Runway(_) => Dim::Runway,
            ResourceId::Gateway(_) => Dim::Gateway,
            ResourceId::Gate(_) => Dim::Gate,
        }
    }

    pub fn parse(dim: Dim, s: &str) -> Result<Self, AircraftError> {
        let num = || {
            s.trim()
                .parse::<u32>()
                .map_err(|_| AircraftError::Parse(format!("{dim} id `{s}`")))
        };
        Ok(match dim {
            Dim::Runway => ResourceId::Runway(num()?),
            Dim::Gateway => ResourceId::Gateway(num()?),
            Dim::Gate => ResourceId::Gate(s.parse()?),
        })
    }

    pub fn id_value(self) -> Value {
        match self {
            ResourceId::Runway(x) | ResourceId::Gateway(x) => Value::int(i64::from(x)),
            ResourceId::Gate(g) => g.to_value(),
        }
    }

    pub fn from_id_value(dim: Dim, v: &Value) -> Result<Self, AircraftError> {
        Ok(match dim {
            Dim::Runway => ResourceId::Runway(id_of(v)?),
            Dim::Gateway => ResourceId::Gateway(id_of(v)?),
            Dim::Gate => ResourceId::Gate(GateId::from_value(v)?),
        })
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResourceId::Runway(x) => write!(f, "runway {x}"),
            ResourceId::Gateway(x) => write!(f, "gateway {x}"),
            ResourceId::Gate(g) => write!(f, "gate {g}"),
        }
    }
}

impl Serialize for ResourceId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ResourceId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `runway 1`, `gateway 7` or `gate (3, 2)`.
impl FromStr for ResourceId {
    type Err = AircraftError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (dim, id) = s
            .trim()
            .split_once(char::is_whitespace)
            .ok_or_else(|| AircraftError::Parse(format!("resource `{s}`")))?;
        ResourceId::parse(dim.parse()?, id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Runway {
    pub id: u32,
    pub state: ResourceState,
    pub opposite: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gateway {
    pub id: u32,
    pub state: ResourceState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub id: GateId,
    pub state: ResourceState,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Airport {
    pub runways: Vec<Runway>,
    pub gateways: Vec<Gateway>,
    pub gates: Vec<Gate>,
}

impl Airport {
    pub fn opposite(&self, r: u32) -> Option<u32> {
        self.runways.iter().find(|x| x.id == r).map(|x| x.opposite)
    }

    pub fn state(&self, r: ResourceId) -> Option<ResourceState> {
        match r {
            ResourceId::Runway(x) => self.runways.iter().find(|y| y.id == x).map(|y| y.state),
            ResourceId::Gateway(x) => self.gateways.iter().find(|y| y.id == x).map(|y| y.state),
            ResourceId::Gate(x) => self.gates.iter().find(|y| y.id == x).map(|y| y.state),
        }
    }

    pub fn set_state(&mut self, r: ResourceId, s: ResourceState) -> Result<(), AircraftError> {
        let slot = match r {
            ResourceId::Runway(x) => self
                .runways
                .iter_mut()
                .find(|y| y.id == x)
                .map(|y| &mut y.state),
            ResourceId::Gateway(x) => self
                .gateways
                .iter_mut()
                .find(|y| y.id == x)
                .map(|y| &mut y.state),
            ResourceId::Gate(x) => self
                .gates
                .iter_mut()
                .find(|y| y.id == x)
                .map(|y| &mut y.state),
        };
        *slot.ok_or(AircraftError::UnknownResource(r))? = s;
        Ok(())
    }

    /// Declared resources of one kind, in id order.
    pub fn resources(&self, dim: Dim) -> Vec<ResourceId> {
        let mut out: Vec<ResourceId> = match dim {
            Dim::Runway => self
                .runways
                .iter()
                .map(|r| ResourceId::Runway(r.id))
                .collect(),
            Dim::Gateway => self
                .gateways
                .iter()
                .map(|g| ResourceId::Gateway(g.id))
                .collect(),
            Dim::Gate => self.gates.iter().map(|g| ResourceId::Gate(g.id)).collect(),
        };
        out.sort();
        out
    }

    /// Opposite pairs must point at declared runways and be mutual.
    pub fn validate(&self) -> Result<(), AircraftError> {
        for r in &self.runways {
            match self.opposite(r.opposite) {
                Some(back) if back == r.id => {}
                _ => return Err(AircraftError::MissingOpposite(r.id)),
            }
        }
        Ok(())
    }

    /// Replace opposite pairs, each given once.
    pub fn with_opposites(mut self, pairs: &[(u32, u32)]) -> Result<Self, AircraftError> {
        for &(a, b) in pairs {
            for (x, y) in [(a, b), (b, a)] {
                let r = self
                    .runways
                    .iter_mut()
                    .find(|r| r.id == x)
                    .ok_or(AircraftError::UnknownResource(ResourceId::Runway(x)))?;
                r.opposite = y;
            }
        }
        self.validate()?;
        Ok(self)
    }
}

/// Required gap between a leader and its follower.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSeparation", into = "RawSeparation")]
pub struct SeparationTable {
    entries: BTreeMap<(Category, Category), Minutes>,
    default: Minutes,
}

#[derive(Serialize, Deserialize)]
struct RawSeparation {
    default: u32,
    #[serde(default)]
    entries: Vec<SeparationEntry>,
}

#[derive(Serialize, Deserialize)]
struct SeparationEntry {
    leader: Category,
    follower: Category,
    minutes: u32,
}

impl TryFrom<RawSeparation> for SeparationTable {
    type Error = AircraftError;

    fn try_from(r: RawSeparation) -> Result<Self, Self::Error> {
        let mut t = SeparationTable::uniform(Minutes(r.default))?;
        for e in r.entries {
            t.set(e.leader, e.follower, Minutes(e.minutes))?;
        }
        Ok(t)
    }
}

impl From<SeparationTable> for RawSeparation {
    fn from(t: SeparationTable) -> Self {
        RawSeparation {
            default: t.default.0,
            entries: t
                .entries
                .into_iter()
                .map(|((leader, follower), m)| SeparationEntry {
                    leader,
                    follower,
                    minutes: m.0,
                })
                .collect(),
        }
    }
}

impl Default for SeparationTable {
    fn default() -> Self {
        SeparationTable {
            entries: BTreeMap::new(),
            default: Minutes(1),
        }
    }
}

impl SeparationTable {
    pub fn uniform(default: Minutes) -> Result<Self, AircraftError> {
        if default.0 < 1 {
            return Err(AircraftError::Separation(default.0));
        }
        Ok(SeparationTable {
            entries: BTreeMap::new(),
            default,
        })
    }

    pub fn set(
        &mut self,
        leader: Category,
        follower: Category,
        m: Minutes,
    ) -> Result<(), AircraftError> {
        if m < self.default {
            return Err(AircraftError::Separation(m.0));
        }
        self.entries.insert((leader, follower), m);
        Ok(())
    }

    pub fn get(&self, leader: Category, follower: Category) -> Minutes {
        self.entries
            .get(&(leader, follower))
            .copied()
            .unwrap_or(self.default)
    }
}

/// How far an aircraft has progressed through the arrival procedure.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    #[default]
    Planned,
    Approach,
    Approached,
    Sequenced,
    Landed,
    Taxied,
    Parked,
}

impl Phase {
    /// Whether the aircraft is done with resources of this kind.
    pub fn completed(self, dim: Dim) -> bool {
        match dim {
            Dim::Runway => self >= Phase::Landed,
            Dim::Gateway => self >= Phase::Taxied,
            Dim::Gate => self >= Phase::Parked,
        }
    }
}

/// Airport layout, wind direction and per-aircraft progress: everything the
/// arrival net needs besides the planning table.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseModel {
    pub airport: Airport,
    #[serde(default)]
    pub wind: i64,
    #[serde(default)]
    pub phases: BTreeMap<u32, Phase>,
}

impl CaseModel {
    pub fn phase(&self, id: u32) -> Phase {
        self.phases.get(&id).copied().unwrap_or_default()
    }
}
