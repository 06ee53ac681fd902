//! Signal profiles, valuation oracles and shadow values.
//!
//! Every bidder `i` holds a private signal `s_i >= 0` and a valuation function
//! `v_i` mapping the whole signal profile to a non-negative value. Mechanisms
//! only ever touch valuations through value queries, so [`ValuationOracle`]
//! is deliberately opaque: it evaluates, and it carries the class metadata the
//! bidder declared (SOS, d-critical, monotone).

mod checks;
mod family;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matroid::{self, MatroidOracle, WeightFunction};

pub use checks::{
    check_self_bounding, check_sos, criticality_at, product_grid, SelfBoundingReport, SosCheck,
    SosViolation,
};
pub use family::{
    make_family, Aggregate, CoeffMatrix, Coeffs, ValuationFamilySpec, ValuationSpecFile,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValuationError {
    #[error("signal profile has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("signal {index} is {value}; signals must be finite and non-negative")]
    InvalidSignal { index: usize, value: f64 },
    #[error("bidder index {index} out of range for {n} bidders")]
    BidderOutOfRange { index: usize, n: usize },
    #[error("valuation of bidder {bidder} returned {value}; values must be finite and non-negative")]
    InvalidValue { bidder: usize, value: f64 },
    #[error("lookup table of bidder {bidder} has no entry for profile {profile:?}")]
    OffGrid { bidder: usize, profile: Vec<f64> },
    #[error("grid must be non-empty")]
    EmptyGrid,
    #[error("delta must be positive and finite, got {0}")]
    InvalidDelta(f64),
    #[error("malformed valuation spec: {0}")]
    MalformedSpec(String),
}

/// A vector of non-negative finite signals, one per bidder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SignalProfile(Vec<f64>);

impl SignalProfile {
    pub fn new(signals: Vec<f64>) -> Result<Self, ValuationError> {
        if let Some((index, &value)) = signals
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() && **s >= 0.0))
        {
            return Err(ValuationError::InvalidSignal { index, value });
        }
        // Normalise -0.0 so table lookups and hashing agree.
        Ok(Self(signals.into_iter().map(|s| s + 0.0).collect()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.0.get(i).copied()
    }

    /// Copy of the profile with coordinate `i` replaced by `value`.
    pub fn with_signal(&self, i: usize, value: f64) -> Result<Self, ValuationError> {
        if i >= self.0.len() {
            return Err(ValuationError::BidderOutOfRange { index: i, n: self.0.len() });
        }
        let mut signals = self.0.clone();
        signals[i] = value;
        Self::new(signals)
    }

    /// `s_{-i}` dominated coordinatewise by `other_{-i}`.
    pub fn others_dominated_by(&self, other: &SignalProfile, i: usize) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .all(|(j, (a, b))| j == i || a <= b)
    }
}

impl TryFrom<Vec<f64>> for SignalProfile {
    type Error = ValuationError;

    fn try_from(signals: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(signals)
    }
}

impl From<SignalProfile> for Vec<f64> {
    fn from(profile: SignalProfile) -> Self {
        profile.0
    }
}

/// Class metadata a bidder declares alongside their valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValuationMeta {
    pub claimed_sos: bool,
    pub claimed_d: Option<usize>,
    pub monotone: bool,
}

impl Default for ValuationMeta {
    fn default() -> Self {
        Self { claimed_sos: false, claimed_d: None, monotone: true }
    }
}

/// How a shadow value `v_j(s_{-i}, ·)` replaces bidder `i`'s signal.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", content = "grid", rename_all = "kebab-case")]
pub enum ShadowOperator {
    /// `v_j(s_{-i}, 0_i)`.
    #[default]
    ZeroOut,
    /// `min_{o in grid} v_j(s_{-i}, o_i)`; supports non-monotone critical valuations.
    InfimumOverGrid(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum AggregateKind {
    Sum,
    Max,
}

/// Exact-lookup table shared by every bidder of a custom-table family.
#[derive(Debug)]
pub(crate) struct LookupTable {
    index: HashMap<Vec<u64>, usize>,
    values: Vec<Vec<f64>>,
}

impl LookupTable {
    pub(crate) fn new(grid: &[Vec<f64>], values: Vec<Vec<f64>>) -> Self {
        let index = grid
            .iter()
            .enumerate()
            .map(|(row, profile)| (profile_key(profile), row))
            .collect();
        Self { index, values }
    }

    fn lookup(&self, bidder: usize, signals: &[f64]) -> Result<f64, ValuationError> {
        let row = self.index.get(&profile_key(signals)).ok_or_else(|| ValuationError::OffGrid {
            bidder,
            profile: signals.to_vec(),
        })?;
        Ok(self.values[bidder][*row])
    }
}

fn profile_key(signals: &[f64]) -> Vec<u64> {
    signals.iter().map(|s| (s + 0.0).to_bits()).collect()
}

type CustomFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub(crate) enum Evaluator {
    Affine { intercept: f64, coeffs: Vec<f64> },
    MineralAverage { scale: f64, exponent: f64 },
    MaxSignal { scale: f64 },
    MatroidRank { matroid: Arc<MatroidOracle>, coeffs: Vec<f64> },
    Neighborhood { members: Vec<usize>, weights: Vec<f64>, aggregate: AggregateKind },
    Table(Arc<LookupTable>),
    Custom(CustomFn),
}

impl Evaluator {
    fn eval(&self, bidder: usize, s: &[f64]) -> Result<f64, ValuationError> {
        let value = match self {
            Evaluator::Affine { intercept, coeffs } => {
                intercept + coeffs.iter().zip(s).map(|(c, x)| c * x).sum::<f64>()
            }
            Evaluator::MineralAverage { scale, exponent } => {
                let mean = s.iter().sum::<f64>() / s.len() as f64;
                scale * mean.powf(*exponent)
            }
            Evaluator::MaxSignal { scale } => scale * s.iter().copied().fold(0.0, f64::max),
            Evaluator::MatroidRank { matroid, coeffs } => {
                let w: Vec<f64> = coeffs.iter().zip(s).map(|(c, x)| c * x).collect();
                let w = WeightFunction::new(w).map_err(|_| ValuationError::InvalidValue {
                    bidder,
                    value: f64::NAN,
                })?;
                matroid::greedy_max_weight(matroid, &w).total_weight(&w)
            }
            Evaluator::Neighborhood { members, weights, aggregate } => {
                let terms = members.iter().zip(weights).map(|(&j, c)| c * s[j]);
                match aggregate {
                    AggregateKind::Sum => terms.sum(),
                    AggregateKind::Max => terms.fold(0.0, f64::max),
                }
            }
            Evaluator::Table(table) => table.lookup(bidder, s)?,
            Evaluator::Custom(f) => f(s),
        };
        Ok(value)
    }
}

/// Value-query access to one bidder's valuation function.
#[derive(Clone)]
pub struct ValuationOracle {
    bidder: usize,
    n: usize,
    eval: Evaluator,
    meta: ValuationMeta,
}

impl fmt::Debug for ValuationOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.eval {
            Evaluator::Affine { .. } => "affine",
            Evaluator::MineralAverage { .. } => "mineral-average",
            Evaluator::MaxSignal { .. } => "max-signal",
            Evaluator::MatroidRank { .. } => "weighted-matroid-rank",
            Evaluator::Neighborhood { .. } => "neighborhood-graph",
            Evaluator::Table(_) => "custom-table",
            Evaluator::Custom(_) => "custom",
        };
        f.debug_struct("ValuationOracle")
            .field("bidder", &self.bidder)
            .field("n", &self.n)
            .field("kind", &kind)
            .field("meta", &self.meta)
            .finish()
    }
}

impl ValuationOracle {
    pub(crate) fn from_evaluator(
        bidder: usize,
        n: usize,
        eval: Evaluator,
        meta: ValuationMeta,
    ) -> Self {
        Self { bidder, n, eval, meta }
    }

    /// Wraps an arbitrary function of the signal profile.
    pub fn from_fn<F>(bidder: usize, n: usize, meta: ValuationMeta, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { bidder, n, eval: Evaluator::Custom(Arc::new(f)), meta }
    }

    /// A valuation that ignores every signal (0-critical).
    pub fn constant(bidder: usize, n: usize, value: f64) -> Self {
        let meta = ValuationMeta { claimed_sos: true, claimed_d: Some(0), monotone: true };
        Self {
            bidder,
            n,
            eval: Evaluator::Affine { intercept: value, coeffs: vec![0.0; n] },
            meta,
        }
    }

    pub fn bidder(&self) -> usize {
        self.bidder
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn meta(&self) -> ValuationMeta {
        self.meta
    }

    pub fn with_meta(mut self, meta: ValuationMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Re-labels the oracle as bidder `bidder`; used when mixing families.
    pub fn with_bidder(mut self, bidder: usize) -> Self {
        self.bidder = bidder;
        self
    }

    pub fn value(&self, s: &SignalProfile) -> Result<f64, ValuationError> {
        self.value_raw(s.as_slice())
    }

    pub(crate) fn value_raw(&self, s: &[f64]) -> Result<f64, ValuationError> {
        if s.len() != self.n {
            return Err(ValuationError::LengthMismatch { expected: self.n, got: s.len() });
        }
        let value = self.eval.eval(self.bidder, s)?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(ValuationError::InvalidValue { bidder: self.bidder, value });
        }
        Ok(value + 0.0)
    }
}

/// Bidder `oracle.bidder()`'s value with bidder `i`'s signal replaced per `op`.
pub fn shadow_value(
    oracle: &ValuationOracle,
    s: &SignalProfile,
    i: usize,
    op: &ShadowOperator,
) -> Result<f64, ValuationError> {
    if i >= s.len() {
        return Err(ValuationError::BidderOutOfRange { index: i, n: s.len() });
    }
    let mut probe = s.as_slice().to_vec();
    match op {
        ShadowOperator::ZeroOut => {
            probe[i] = 0.0;
            oracle.value_raw(&probe)
        }
        ShadowOperator::InfimumOverGrid(grid) => {
            if grid.is_empty() {
                return Err(ValuationError::EmptyGrid);
            }
            let mut best = f64::INFINITY;
            for &o in grid {
                if !(o.is_finite() && o >= 0.0) {
                    return Err(ValuationError::InvalidSignal { index: i, value: o });
                }
                probe[i] = o;
                best = best.min(oracle.value_raw(&probe)?);
            }
            Ok(best)
        }
    }
}

/// Weights used by bidder `i`'s own process: the real value for `i`, shadow
/// values `v_j(s_{-i}, 0_i)` for everyone else.
pub fn mixed_weights(
    s: &SignalProfile,
    valuations: &[ValuationOracle],
    i: usize,
    op: &ShadowOperator,
) -> Result<WeightFunction, ValuationError> {
    let weights = valuations
        .iter()
        .enumerate()
        .map(|(j, v)| if j == i { v.value(s) } else { shadow_value(v, s, i, op) })
        .collect::<Result<Vec<_>, _>>()?;
    // Values are validated non-negative and finite, so this cannot fail.
    Ok(WeightFunction::new(weights).expect("validated weights"))
}

/// True values `v_j(s)` of every bidder.
pub fn true_values(
    s: &SignalProfile,
    valuations: &[ValuationOracle],
) -> Result<Vec<f64>, ValuationError> {
    valuations.iter().map(|v| v.value(s)).collect()
}
