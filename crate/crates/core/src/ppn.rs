//! Plausible Petri net layer.
//!
//! A state of information is a piecewise-constant density on a fixed grid
//! over `[lo, hi]`. Bin `i` covers the right-closed interval
//! `(lo + i*w, lo + (i+1)*w]`; the first bin also owns `lo`.
//!
//! Product masses are taken against the uniform reference measure on the
//! grid: `n * sum(a_i * b_i)` for `n` bins. Under that measure the uniform
//! state is neutral (`uniform ∧ φ` has mass 1) and any state is possible
//! against itself for every threshold up to 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hlpn::{evaluate, Binding, EvalError, Expr, Functions, Value};

/// Default possibility threshold on product mass.
pub const DEFAULT_EPSILON: f64 = 1e-6;

const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PpnError {
    #[error("invalid grid [{lo}, {hi}] with {bins} bins")]
    InvalidGrid { lo: f64, hi: f64, bins: usize },
    #[error("invalid mass vector: {0}")]
    InvalidMass(String),
    #[error("domains [{0}, {1}] and [{2}, {3}] do not overlap")]
    DisjointDomains(f64, f64, f64, f64),
    #[error("resampling lost all mass")]
    ZeroOverlap,
    #[error("states are on different grids")]
    GridMismatch,
    #[error("disjunction of nothing")]
    EmptyMixture,
    #[error("mixture weight {0} is not positive")]
    BadWeight(f64),
    #[error("possibility threshold {0} is not positive")]
    BadEpsilon(f64),
    #[error("input place `{0}` holds no state of information")]
    EmptyInput(String),
    #[error("conjunction mass {mass:e} is below threshold {epsilon:e}")]
    NotPossible { mass: f64, epsilon: f64 },
    #[error("symbolic guard of `{0}` is false")]
    GuardFalse(String),
    #[error("symbolic guard of `{transition}`: {source}")]
    Guard {
        transition: String,
        #[source]
        source: EvalError,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self, PpnError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi && bins >= 1) {
            return Err(PpnError::InvalidGrid { lo, hi, bins });
        }
        Ok(Grid { lo, hi, bins })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    /// Bounds `(a, b]` of bin `i`.
    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        let a = self.lo + i as f64 * w;
        let b = if i + 1 == self.bins {
            self.hi
        } else {
            self.lo + (i + 1) as f64 * w
        };
        (a, b)
    }

    /// Index of the bin holding `x`, clamped into the grid.
    pub fn bin_of(&self, x: f64) -> usize {
        let pos = ((x - self.lo) / self.width()).ceil() - 1.0;
        if pos.is_nan() || pos < 0.0 {
            0
        } else {
            (pos as usize).min(self.bins - 1)
        }
    }
}

/// A discrete density. All-zero mass is the impossible state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSoi", into = "RawSoi")]
pub struct StateOfInformation {
    grid: Grid,
    mass: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSoi {
    lo: f64,
    hi: f64,
    bins: usize,
    mass: Vec<f64>,
}

impl TryFrom<RawSoi> for StateOfInformation {
    type Error = PpnError;

    fn try_from(r: RawSoi) -> Result<Self, PpnError> {
        let grid = Grid::new(r.lo, r.hi, r.bins)?;
        if r.mass.len() != r.bins {
            return Err(PpnError::InvalidMass(format!(
                "{} weights for {} bins",
                r.mass.len(),
                r.bins
            )));
        }
        if r.mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(PpnError::InvalidMass(
                "negative or non-finite weight".into(),
            ));
        }
        let total: f64 = r.mass.iter().sum();
        if total != 0.0 && (total - 1.0).abs() > NORM_TOL {
            return Err(PpnError::InvalidMass(format!("weights sum to {total}")));
        }
        Ok(StateOfInformation { grid, mass: r.mass })
    }
}

impl From<StateOfInformation> for RawSoi {
    fn from(s: StateOfInformation) -> Self {
        RawSoi {
            lo: s.grid.lo,
            hi: s.grid.hi,
            bins: s.grid.bins,
            mass: s.mass,
        }
    }
}

impl StateOfInformation {
    pub fn uniform(grid: Grid) -> Self {
        let m = 1.0 / grid.bins as f64;
        StateOfInformation {
            grid,
            mass: vec![m; grid.bins],
        }
    }

    /// All mass in the bin holding `x`.
    pub fn dirac(grid: Grid, x: f64) -> Self {
        let mut mass = vec![0.0; grid.bins];
        mass[grid.bin_of(x)] = 1.0;
        StateOfInformation { grid, mass }
    }

    pub fn impossible(grid: Grid) -> Self {
        StateOfInformation {
            grid,
            mass: vec![0.0; grid.bins],
        }
    }

    /// Normalize arbitrary nonnegative weights.
    pub fn from_weights(grid: Grid, weights: Vec<f64>) -> Result<Self, PpnError> {
        if weights.len() != grid.bins {
            return Err(PpnError::InvalidMass(format!(
                "{} weights for {} bins",
                weights.len(),
                grid.bins
            )));
        }
        if weights.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(PpnError::InvalidMass(
                "negative or non-finite weight".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(PpnError::InvalidMass("weights sum to zero".into()));
        }
        Ok(StateOfInformation {
            grid,
            mass: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn is_impossible(&self) -> bool {
        self.mass.iter().all(|m| *m == 0.0)
    }

    /// Mass strictly above `x`, splitting the straddling bin proportionally.
    pub fn mass_above(&self, x: f64) -> f64 {
        (0..self.grid.bins)
            .map(|i| {
                let (a, b) = self.grid.edges(i);
                let frac = ((b - x.max(a)) / (b - a)).clamp(0.0, 1.0);
                self.mass[i] * frac
            })
            .sum()
    }

    pub fn mass_below(&self, x: f64) -> f64 {
        (self.total() - self.mass_above(x)).max(0.0)
    }

    pub fn mean(&self) -> Option<f64> {
        if self.is_impossible() {
            return None;
        }
        let s: f64 = (0..self.grid.bins)
            .map(|i| {
                let (a, b) = self.grid.edges(i);
                self.mass[i] * (a + b) / 2.0
            })
            .sum();
        Some(s / self.total())
    }

    pub fn l1_distance(&self, other: &StateOfInformation) -> f64 {
        self.mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            + self.mass.len().abs_diff(other.mass.len()) as f64
    }

    /// Reapportion mass onto `target` by bin-overlap fractions.
    pub fn resample(&self, target: Grid) -> Result<StateOfInformation, PpnError> {
        if target == self.grid {
            return Ok(self.clone());
        }
        let src = self.grid;
        if target.hi <= src.lo || src.hi <= target.lo {
            return Err(PpnError::DisjointDomains(
                src.lo, src.hi, target.lo, target.hi,
            ));
        }
        let mut out = vec![0.0; target.bins];
        for (i, &m) in self.mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let (a, b) = src.edges(i);
            let first = target.bin_of(a.max(target.lo));
            let last = target.bin_of(b.min(target.hi));
            for (j, slot) in out.iter_mut().enumerate().take(last + 1).skip(first) {
                let (c, d) = target.edges(j);
                let overlap = b.min(d) - a.max(c);
                if overlap > 0.0 {
                    *slot += m * overlap / (b - a);
                }
            }
        }
        let total: f64 = out.iter().sum();
        if total <= 0.0 {
            if self.is_impossible() {
                return Ok(StateOfInformation::impossible(target));
            }
            return Err(PpnError::ZeroOverlap);
        }
        Ok(StateOfInformation {
            grid: target,
            mass: out.into_iter().map(|m| m / total).collect(),
        })
    }

    fn aligned(&self, other: &StateOfInformation) -> Result<StateOfInformation, PpnError> {
        if other.grid == self.grid {
            Ok(other.clone())
        } else {
            other.resample(self.grid)
        }
    }
}

/// Pointwise product against the uniform reference, before renormalization.
pub fn product_mass(a: &StateOfInformation, b: &StateOfInformation) -> Result<f64, PpnError> {
    let b = a.aligned(b)?;
    let s: f64 = a.mass.iter().zip(&b.mass).map(|(x, y)| x * y).sum();
    Ok(s * a.grid.bins as f64)
}

pub fn is_possible(a: &StateOfInformation, b: &StateOfInformation, epsilon: f64) -> bool {
    product_mass(a, b).is_ok_and(|m| m >= epsilon)
}

/// Conjunction with the default threshold. `b` is resampled onto `a`'s grid.
pub fn conjunction(
    a: &StateOfInformation,
    b: &StateOfInformation,
) -> Result<StateOfInformation, PpnError> {
    conjunction_with(a, b, DEFAULT_EPSILON)
}

pub fn conjunction_with(
    a: &StateOfInformation,
    b: &StateOfInformation,
    epsilon: f64,
) -> Result<StateOfInformation, PpnError> {
    let b = a.aligned(b)?;
    let product: Vec<f64> = a.mass.iter().zip(&b.mass).map(|(x, y)| x * y).collect();
    let total: f64 = product.iter().sum();
    if total * (a.grid.bins as f64) < epsilon || total == 0.0 {
        return Ok(StateOfInformation::impossible(a.grid));
    }
    Ok(StateOfInformation {
        grid: a.grid,
        mass: product.into_iter().map(|m| m / total).collect(),
    })
}

/// Weighted mixture on a common grid. A single part is returned unchanged.
pub fn disjunction(parts: &[(StateOfInformation, f64)]) -> Result<StateOfInformation, PpnError> {
    let (first, _) = parts.first().ok_or(PpnError::EmptyMixture)?;
    if let Some((_, w)) = parts.iter().find(|(_, w)| !(w.is_finite() && *w > 0.0)) {
        return Err(PpnError::BadWeight(*w));
    }
    if parts.iter().any(|(s, _)| s.grid != first.grid) {
        return Err(PpnError::GridMismatch);
    }
    if parts.len() == 1 {
        return Ok(first.clone());
    }
    let mut mix = vec![0.0; first.grid.bins];
    for (s, w) in parts {
        for (slot, m) in mix.iter_mut().zip(&s.mass) {
            *slot += w * m;
        }
    }
    let total: f64 = mix.iter().sum();
    if total == 0.0 {
        return Ok(StateOfInformation::impossible(first.grid));
    }
    Ok(StateOfInformation {
        grid: first.grid,
        mass: mix.into_iter().map(|m| m / total).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericalPlace {
    pub name: String,
    pub soi: Option<StateOfInformation>,
}

impl NumericalPlace {
    pub fn empty(name: &str) -> Self {
        NumericalPlace {
            name: name.to_string(),
            soi: None,
        }
    }

    pub fn holding(name: &str, soi: StateOfInformation) -> Self {
        NumericalPlace {
            name: name.to_string(),
            soi: Some(soi),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TransitionKind {
    Numerical,
    Mixed { guard: Expr },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlausibleTransition {
    pub name: String,
    pub kind: TransitionKind,
    pub soi: StateOfInformation,
    pub epsilon: f64,
    /// Mixture weights for (previous output state, fresh conjunction).
    pub weights: (f64, f64),
}

impl PlausibleTransition {
    pub fn numerical(name: &str, soi: StateOfInformation) -> Self {
        PlausibleTransition {
            name: name.to_string(),
            kind: TransitionKind::Numerical,
            soi,
            epsilon: DEFAULT_EPSILON,
            weights: (1.0, 1.0),
        }
    }

    pub fn mixed(name: &str, soi: StateOfInformation, guard: Expr) -> Self {
        PlausibleTransition {
            kind: TransitionKind::Mixed { guard },
            ..Self::numerical(name, soi)
        }
    }

    /// Running conjunction of the transition's own state with every input.
    pub fn conjoin(&self, inputs: &[NumericalPlace]) -> Result<StateOfInformation, PpnError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(PpnError::BadEpsilon(self.epsilon));
        }
        let mut acc = self.soi.clone();
        for p in inputs {
            let soi = p
                .soi
                .as_ref()
                .ok_or_else(|| PpnError::EmptyInput(p.name.clone()))?;
            let mass = product_mass(&acc, soi)?;
            if mass < self.epsilon {
                return Err(PpnError::NotPossible {
                    mass,
                    epsilon: self.epsilon,
                });
            }
            acc = conjunction_with(&acc, soi, self.epsilon)?;
        }
        Ok(acc)
    }

    /// Fire against `inputs`; input states are read, not consumed.
    pub fn fire(
        &self,
        inputs: &[NumericalPlace],
        output: &NumericalPlace,
        binding: &Binding,
        fns: &Functions,
    ) -> Result<NumericalPlace, PpnError> {
        if let TransitionKind::Mixed { guard } = &self.kind {
            match evaluate(guard, binding, fns) {
                Ok(Value::Bool(true)) => {}
                Ok(_) => return Err(PpnError::GuardFalse(self.name.clone())),
                Err(source) => {
                    return Err(PpnError::Guard {
                        transition: self.name.clone(),
                        source,
                    })
                }
            }
        }
        let psi = self.conjoin(inputs)?;
        let soi = match &output.soi {
            None => psi,
            Some(old) => {
                let psi = old.aligned(&psi)?;
                disjunction(&[(old.clone(), self.weights.0), (psi, self.weights.1)])?
            }
        };
        Ok(NumericalPlace {
            name: output.name.clone(),
            soi: Some(soi),
        })
    }
}

/// Fire a transition that needs no symbolic binding.
pub fn fire_numerical(
    t: &PlausibleTransition,
    inputs: &[NumericalPlace],
    output: &NumericalPlace,
) -> Result<NumericalPlace, PpnError> {
    t.fire(inputs, output, &Binding::new(), &Functions::standard())
}
