//! Grid checkers for the valuation classes.
//!
//! The class definitions quantify over continuous signal spaces; with oracle
//! access only, we check them on finite grids of profiles. Grids are scanned
//! in the order given, so the first counterexample is reproducible.

use super::{shadow_value, ShadowOperator, SignalProfile, ValuationError, ValuationOracle};
use crate::tolerance::{CRITICALITY_TOL, PROPERTY_TOL};

/// Cartesian product of per-coordinate axes, in lexicographic order.
pub fn product_grid(axes: &[Vec<f64>]) -> Vec<SignalProfile> {
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(axes.len())];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|p| SignalProfile::new(p).expect("grid axes must hold valid signals"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosViolation {
    pub coordinate: usize,
    /// Profile with the dominated `s_{-i}`.
    pub lower: SignalProfile,
    /// Profile with the dominating `s_{-i}`.
    pub upper: SignalProfile,
    pub delta: f64,
    pub lower_gain: f64,
    pub upper_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SosCheck {
    Pass,
    Counterexample(SosViolation),
}

impl SosCheck {
    pub fn passed(&self) -> bool {
        matches!(self, SosCheck::Pass)
    }
}

/// Checks `v(s_i+δ, s_{-i}) - v(s_i, s_{-i}) >= v(s_i+δ, ŝ_{-i}) - v(s_i, ŝ_{-i})`
/// for every ordered pair of grid profiles sharing `s_i` with `s_{-i} ⪯ ŝ_{-i}`.
pub fn check_sos(
    v: &ValuationOracle,
    grid: &[SignalProfile],
    delta: f64,
) -> Result<SosCheck, ValuationError> {
    if grid.is_empty() {
        return Err(ValuationError::EmptyGrid);
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(ValuationError::InvalidDelta(delta));
    }
    let n = v.n();
    // gains[p][i] = v(s_i + δ, s_{-i}) - v(s) at grid profile p.
    let mut gains = Vec::with_capacity(grid.len());
    for s in grid {
        let base = v.value(s)?;
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            let bumped = s.with_signal(i, s.as_slice()[i] + delta)?;
            row.push(v.value(&bumped)? - base);
        }
        gains.push(row);
    }
    for (a, lower) in grid.iter().enumerate() {
        for i in 0..n {
            for (b, upper) in grid.iter().enumerate() {
                if a == b
                    || lower.as_slice()[i] != upper.as_slice()[i]
                    || !lower.others_dominated_by(upper, i)
                {
                    continue;
                }
                if gains[a][i] < gains[b][i] - PROPERTY_TOL {
                    return Ok(SosCheck::Counterexample(SosViolation {
                        coordinate: i,
                        lower: lower.clone(),
                        upper: upper.clone(),
                        delta,
                        lower_gain: gains[a][i],
                        upper_gain: gains[b][i],
                    }));
                }
            }
        }
    }
    Ok(SosCheck::Pass)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfBoundingReport {
    pub value: f64,
    /// `v(s) - v(s_{-i}, 0_i)` per coordinate.
    pub marginals: Vec<f64>,
    /// `v(s) - sum(marginals)`; negative means a violation.
    pub slack: f64,
}

impl SelfBoundingReport {
    pub fn satisfied(&self) -> bool {
        self.slack >= -PROPERTY_TOL
    }
}

/// Evaluates the self-bounding inequality `sum_i (v(s) - v(s_{-i}, 0_i)) <= v(s)`.
pub fn check_self_bounding(
    v: &ValuationOracle,
    s: &SignalProfile,
    op: &ShadowOperator,
) -> Result<SelfBoundingReport, ValuationError> {
    let value = v.value(s)?;
    let marginals = (0..s.len())
        .map(|i| shadow_value(v, s, i, op).map(|low| value - low))
        .collect::<Result<Vec<_>, _>>()?;
    let slack = value - marginals.iter().sum::<f64>();
    Ok(SelfBoundingReport { value, marginals, slack })
}

/// Number of signals whose removal strictly lowers `v(s)`.
pub fn criticality_at(
    v: &ValuationOracle,
    s: &SignalProfile,
    op: &ShadowOperator,
) -> Result<usize, ValuationError> {
    let value = v.value(s)?;
    let mut count = 0;
    for j in 0..s.len() {
        if shadow_value(v, s, j, op)? < value - CRITICALITY_TOL {
            count += 1;
        }
    }
    Ok(count)
}
