use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::value::Value;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MultisetError {
    #[error("cannot remove {wanted} x {value}: only {present} present")]
    Insufficient {
        value: Value,
        wanted: u32,
        present: u32,
    },
    #[error("multiplicity of {0} must be at least 1")]
    ZeroMultiplicity(Value),
}

/// A bag of tokens. Keys absent from the map have multiplicity zero; stored
/// multiplicities are always at least one.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<(Value, u32)>", try_from = "Vec<(Value, u32)>")]
pub struct TokenMultiset {
    entries: BTreeMap<Value, u32>,
}

impl TokenMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(v: Value) -> Self {
        let mut m = Self::new();
        m.insert(v, 1);
        m
    }

    pub fn insert(&mut self, v: Value, n: u32) {
        if n > 0 {
            *self.entries.entry(v).or_insert(0) += n;
        }
    }

    pub fn add(&mut self, v: Value) {
        self.insert(v, 1);
    }

    pub fn remove(&mut self, v: &Value, n: u32) -> Result<(), MultisetError> {
        if n == 0 {
            return Ok(());
        }
        let present = self.count(v);
        if present < n {
            return Err(MultisetError::Insufficient {
                value: v.clone(),
                wanted: n,
                present,
            });
        }
        if present == n {
            self.entries.remove(v);
        } else {
            self.entries.insert(v.clone(), present - n);
        }
        Ok(())
    }

    pub fn count(&self, v: &Value) -> u32 {
        self.entries.get(v).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.entries.values().map(|&n| u64::from(n)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct values in canonical order.
    pub fn distinct(&self) -> impl Iterator<Item = &Value> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Value, u32)> {
        self.entries.iter().map(|(v, &n)| (v, n))
    }

    /// Each token repeated by its multiplicity, in canonical order.
    pub fn tokens(&self) -> impl Iterator<Item = &Value> {
        self.entries
            .iter()
            .flat_map(|(v, &n)| std::iter::repeat(v).take(n as usize))
    }

    pub fn contains(&self, other: &TokenMultiset) -> bool {
        other.iter().all(|(v, n)| self.count(v) >= n)
    }

    pub fn union_with(&mut self, other: &TokenMultiset) {
        for (v, n) in other.iter() {
            self.insert(v.clone(), n);
        }
    }

    pub fn subtract(&mut self, other: &TokenMultiset) -> Result<(), MultisetError> {
        if let Some((v, n)) = other.iter().find(|(v, n)| self.count(v) < *n) {
            return Err(MultisetError::Insufficient {
                value: v.clone(),
                wanted: n,
                present: self.count(v),
            });
        }
        for (v, n) in other.iter() {
            self.remove(v, n)?;
        }
        Ok(())
    }
}

impl FromIterator<Value> for TokenMultiset {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        let mut m = TokenMultiset::new();
        for v in iter {
            m.add(v);
        }
        m
    }
}

impl From<TokenMultiset> for Vec<(Value, u32)> {
    fn from(m: TokenMultiset) -> Self {
        m.entries.into_iter().collect()
    }
}

impl TryFrom<Vec<(Value, u32)>> for TokenMultiset {
    type Error = MultisetError;

    fn try_from(pairs: Vec<(Value, u32)>) -> Result<Self, Self::Error> {
        let mut m = TokenMultiset::new();
        for (v, n) in pairs {
            if n == 0 {
                return Err(MultisetError::ZeroMultiplicity(v));
            }
            m.insert(v, n);
        }
        Ok(m)
    }
}

impl fmt::Display for TokenMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, n)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if n == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{n}'{v}")?;
            }
        }
        f.write_str("}")
    }
}
