//! The eating mechanism for single-item auctions with SOS valuations.
//!
//! Every bidder `i` gets a private eating process. In it, bidder `i` uses
//! their real value and every other bidder `j` uses the shadow value
//! `v_j(s_{-i}, 0_i)`. A bidder with weight `w` starts eating at time `-ln w`
//! at unit speed, and the process stops once a total share of one has been
//! eaten. Bidder `i` is allocated their own share divided by a normalisation
//! constant (4 by default), and pays the threshold-integral payment for the
//! resulting monotone allocation curve.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matroid::{MatroidError, WeightFunction};
use crate::tolerance::PROPERTY_TOL;
use crate::valuation::{
    mixed_weights, true_values, ShadowOperator, SignalProfile, ValuationError, ValuationOracle,
};

/// Default divisor applied to each bidder's own-process share.
pub const DEFAULT_NORMALIZATION: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EatingError {
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Weights(#[from] MatroidError),
    #[error("reported value {0} must be finite and non-negative")]
    InvalidReport(f64),
    #[error("normalisation constant must be positive, got {0}")]
    InvalidNormalization(f64),
    #[error("{got} valuations for a profile of {expected} signals")]
    BidderCount { expected: usize, got: usize },
    #[error("bidder index {index} out of range for {n} bidders")]
    BidderOutOfRange { index: usize, n: usize },
}

/// A bidder entering the process at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub time: f64,
    pub bidder: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EatingResult {
    /// Solves `sum_j (t + ln w_j)^+ = 1`; `None` when every weight is zero.
    pub stopping_time: Option<f64>,
    /// `y_j = (t + ln w_j)^+`, zero for zero weights.
    pub shares: Vec<f64>,
    /// `-ln w_j`, or `None` for bidders with zero weight (they never start).
    pub start_times: Vec<Option<f64>>,
    /// Bidders that started before the stopping time, by start time.
    pub breakpoints: Vec<Breakpoint>,
}

/// Start times of positive-weight entries, sorted by (time, index).
fn sorted_starts(w: &[f64], skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut starts: Vec<(f64, usize)> = w
        .iter()
        .enumerate()
        .filter(|&(j, &wj)| wj > 0.0 && Some(j) != skip)
        .map(|(j, &wj)| (-wj.ln(), j))
        .collect();
    starts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    starts
}

/// Stopping time and active count for sorted start times.
///
/// With `k` eaters active, `sum (t - a_j) = 1` gives `t = (1 + sum a_j) / k`;
/// the right `k` is the first whose `t` does not pass the next start time.
fn stopping_time(starts: &[(f64, usize)]) -> Option<(f64, usize)> {
    let mut prefix = 0.0;
    for (k, &(a, _)) in starts.iter().enumerate() {
        prefix += a;
        let active = k + 1;
        let t = (1.0 + prefix) / active as f64;
        match starts.get(active) {
            Some(&(next, _)) if t > next => continue,
            _ => return Some((t, active)),
        }
    }
    None
}

/// Runs one eating process on weights `w`.
pub fn eat(w: &WeightFunction) -> EatingResult {
    let w = w.as_slice();
    let starts = sorted_starts(w, None);
    let start_times = w.iter().map(|&wj| (wj > 0.0).then(|| -wj.ln())).collect();
    let Some((t, active)) = stopping_time(&starts) else {
        return EatingResult {
            stopping_time: None,
            shares: vec![0.0; w.len()],
            start_times,
            breakpoints: Vec::new(),
        };
    };
    let mut shares = vec![0.0; w.len()];
    for &(a, j) in &starts[..active] {
        shares[j] = (t - a).max(0.0);
    }
    let breakpoints =
        starts[..active].iter().map(|&(time, bidder)| Breakpoint { time, bidder }).collect();
    EatingResult { stopping_time: Some(t), shares, start_times, breakpoints }
}

/// One piece of an allocation curve: `share(v) = intercept + slope * ln v` on `(lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSegment {
    pub lower: f64,
    pub upper: f64,
    pub intercept: f64,
    pub slope: f64,
    /// Number of eaters active on this segment, including the curve's owner.
    pub active: usize,
}

impl CurveSegment {
    /// Antiderivative of the share on this segment, with `F(0) = 0`.
    fn antiderivative(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        let log_part = if self.slope == 0.0 { 0.0 } else { self.slope * tau * (tau.ln() - 1.0) };
        self.intercept * tau + log_part
    }
}

/// Bidder `i`'s own-process share as a function of their reported value `v`,
/// with every other weight held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationCurve {
    pub bidder: usize,
    /// Below or at this value the bidder never starts eating.
    pub entry: f64,
    pub segments: Vec<CurveSegment>,
    /// Share is divided by this to obtain the allocation probability.
    pub normalization: f64,
}

/// Builds bidder `i`'s allocation curve; `w[i]` is ignored.
///
/// With the `k` earliest other eaters active (start times `a_1 <= .. <= a_k`,
/// prefix sum `S_k`), the owner's share is `(1 + S_k)/(k+1) + k/(k+1) * ln v`.
/// Other eater `k` drops out once `ln v > 1 + S_k - (k+1) a_k`.
pub fn allocation_curve(
    w: &WeightFunction,
    i: usize,
    normalization: f64,
) -> Result<AllocationCurve, EatingError> {
    if i >= w.len() {
        return Err(EatingError::BidderOutOfRange { index: i, n: w.len() });
    }
    if !(normalization.is_finite() && normalization > 0.0) {
        return Err(EatingError::InvalidNormalization(normalization));
    }
    let others = sorted_starts(w.as_slice(), Some(i));
    let Some((t_others, active)) = stopping_time(&others) else {
        let only = CurveSegment {
            lower: 0.0,
            upper: f64::INFINITY,
            intercept: 1.0,
            slope: 0.0,
            active: 1,
        };
        return Ok(AllocationCurve { bidder: i, entry: 0.0, segments: vec![only], normalization });
    };
    let entry = (-t_others).exp();
    let mut prefix: Vec<f64> = Vec::with_capacity(active + 1);
    prefix.push(0.0);
    for &(a, _) in &others[..active] {
        prefix.push(prefix.last().unwrap() + a);
    }
    let mut segments = Vec::with_capacity(active + 1);
    let mut lower = entry;
    for k in (0..=active).rev() {
        let kf = k as f64;
        let upper = if k == 0 {
            f64::INFINITY
        } else {
            (1.0 + prefix[k] - (kf + 1.0) * others[k - 1].0).exp()
        };
        if upper > lower {
            segments.push(CurveSegment {
                lower,
                upper,
                intercept: (1.0 + prefix[k]) / (kf + 1.0),
                slope: kf / (kf + 1.0),
                active: k + 1,
            });
            lower = upper;
        }
    }
    Ok(AllocationCurve { bidder: i, entry, segments, normalization })
}

impl AllocationCurve {
    /// Pre-normalisation share at reported value `v`.
    pub fn share_at(&self, v: f64) -> f64 {
        if !(v > self.entry) {
            return 0.0;
        }
        let seg = self
            .segments
            .iter()
            .find(|s| v <= s.upper)
            .unwrap_or_else(|| self.segments.last().expect("curve has a segment"));
        let log_part = if seg.slope == 0.0 { 0.0 } else { seg.slope * v.ln() };
        (seg.intercept + log_part).clamp(0.0, 1.0)
    }

    /// Allocation probability at reported value `v`.
    pub fn allocation_at(&self, v: f64) -> f64 {
        self.share_at(v) / self.normalization
    }

    /// `∫_0^v allocation(τ) dτ` in closed form.
    pub fn integral_to(&self, v: f64) -> f64 {
        let mut total = 0.0;
        for seg in &self.segments {
            if v <= seg.lower {
                break;
            }
            let hi = v.min(seg.upper);
            total += seg.antiderivative(hi) - seg.antiderivative(seg.lower);
        }
        total / self.normalization
    }

    /// Breakpoints in `v` where the active set changes.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = vec![self.entry];
        out.extend(self.segments.iter().map(|s| s.upper).filter(|u| u.is_finite()));
        out
    }
}

/// Threshold-integral payment `x(v) v - ∫_0^v x(τ) dτ` at reported value `v`.
pub fn payment_of(curve: &AllocationCurve, v: f64) -> Result<f64, EatingError> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(EatingError::InvalidReport(v));
    }
    let gross = curve.allocation_at(v) * v;
    let p = gross - curve.integral_to(v);
    // Exact arithmetic gives 0 <= p <= gross; only rounding can push it out.
    Ok(p.clamp(0.0, gross))
}

/// `y + (1 - y) e^{-y}`: welfare factor of a top bidder holding share `y`.
pub fn welfare_factor(y: f64) -> f64 {
    y + (1.0 - y) * (-y).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EatingOutcome {
    pub values: Vec<f64>,
    pub allocations: Vec<f64>,
    pub payments: Vec<f64>,
    /// Weight function of each bidder's own process.
    pub weights: Vec<WeightFunction>,
    pub processes: Vec<EatingResult>,
    pub curves: Vec<AllocationCurve>,
    pub normalization: f64,
    /// `sum_i x_i`.
    pub total_allocation: f64,
    /// False when `sum_i x_i > 1 + 1e-9`; the allocation is reported as is.
    pub feasible: bool,
    pub warnings: Vec<String>,
}

impl EatingOutcome {
    /// Own-process shares `y_i = eat(w_i)_i`.
    pub fn own_shares(&self) -> Vec<f64> {
        self.processes.iter().enumerate().map(|(i, p)| p.shares[i]).collect()
    }

    /// `sum_i v_i x_i`.
    pub fn expected_welfare(&self) -> f64 {
        self.values.iter().zip(&self.allocations).map(|(v, x)| v * x).sum()
    }

    pub fn utilities(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.allocations)
            .zip(&self.payments)
            .map(|((v, x), p)| x * v - p)
            .collect()
    }

    /// One row per (process owner, bidder) pair, enough to redraw each process.
    pub fn trace_rows(&self) -> Vec<TraceRow> {
        let mut rows = Vec::new();
        for (owner, process) in self.processes.iter().enumerate() {
            for (bidder, share) in process.shares.iter().enumerate() {
                rows.push(TraceRow {
                    process_owner: owner,
                    bidder,
                    start_time: process.start_times[bidder],
                    share: *share,
                    stopping_time: process.stopping_time,
                });
            }
        }
        rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub process_owner: usize,
    pub bidder: usize,
    pub start_time: Option<f64>,
    pub share: f64,
    pub stopping_time: Option<f64>,
}

/// Mechanism configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EatingMechanism {
    pub normalization: f64,
    pub shadow: ShadowOperator,
}

impl Default for EatingMechanism {
    fn default() -> Self {
        Self { normalization: DEFAULT_NORMALIZATION, shadow: ShadowOperator::ZeroOut }
    }
}

impl EatingMechanism {
    pub fn with_normalization(normalization: f64) -> Self {
        Self { normalization, ..Self::default() }
    }

    pub fn run(
        &self,
        s: &SignalProfile,
        valuations: &[ValuationOracle],
    ) -> Result<EatingOutcome, EatingError> {
        if valuations.len() != s.len() {
            return Err(EatingError::BidderCount { expected: s.len(), got: valuations.len() });
        }
        if !(self.normalization.is_finite() && self.normalization > 0.0) {
            return Err(EatingError::InvalidNormalization(self.normalization));
        }
        let mut warnings = Vec::new();
        for v in valuations {
            let meta = v.meta();
            if !(meta.claimed_sos && meta.monotone) {
                let msg = format!(
                    "bidder {} is not declared monotone SOS; feasibility is not guaranteed",
                    v.bidder()
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
        let values = true_values(s, valuations)?;
        let n = s.len();
        let mut weights = Vec::with_capacity(n);
        let mut processes = Vec::with_capacity(n);
        let mut curves = Vec::with_capacity(n);
        let mut allocations = Vec::with_capacity(n);
        let mut payments = Vec::with_capacity(n);
        for i in 0..n {
            let w = mixed_weights(s, valuations, i, &self.shadow)?;
            let process = eat(&w);
            let curve = allocation_curve(&w, i, self.normalization)?;
            allocations.push(process.shares[i] / self.normalization);
            payments.push(payment_of(&curve, values[i])?);
            weights.push(w);
            processes.push(process);
            curves.push(curve);
        }
        let total_allocation: f64 = allocations.iter().sum();
        let feasible = total_allocation <= 1.0 + PROPERTY_TOL;
        if !feasible {
            let msg = format!("allocation probabilities sum to {total_allocation} > 1");
            log::warn!("{msg}");
            warnings.push(msg);
        }
        Ok(EatingOutcome {
            values,
            allocations,
            payments,
            weights,
            processes,
            curves,
            normalization: self.normalization,
            total_allocation,
            feasible,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::{ValuationMeta, ValuationOracle};
    use std::f64::consts::E;

    fn w(v: &[f64]) -> WeightFunction {
        WeightFunction::new(v.to_vec()).unwrap()
    }

    /// Independent oracle for the stopping time: bisection on the monotone
    /// map `t -> sum_j (t + ln w_j)^+`.
    fn bisect_stopping_time(weights: &[f64]) -> f64 {
        let total = |t: f64| -> f64 {
            weights.iter().filter(|&&x| x > 0.0).map(|&x| (t + x.ln()).max(0.0)).sum()
        };
        let (mut lo, mut hi) = (-1e3, 1e3);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if total(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Independent oracle for the payment: composite Simpson on many panels
    /// between the curve breakpoints.
    fn quadrature_integral(curve: &AllocationCurve, v: f64) -> f64 {
        let mut knots: Vec<f64> =
            curve.breakpoints().into_iter().filter(|&b| b > 0.0 && b < v).collect();
        knots.insert(0, 0.0);
        knots.push(v);
        let f = |x: f64| curve.allocation_at(x);
        knots
            .windows(2)
            .map(|ab| {
                let (a, b) = (ab[0], ab[1]);
                let panels = 20_000;
                let h = (b - a) / panels as f64;
                let mut acc = f(a) + f(b);
                for k in 1..panels {
                    acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
                }
                acc * h / 3.0
            })
            .sum()
    }

    #[test]
    fn eat_examples() {
        let r = eat(&w(&[E]));
        assert!((r.stopping_time.unwrap() - 0.0).abs() < 1e-15);
        assert!((r.shares[0] - 1.0).abs() < 1e-15);

        let r = eat(&w(&[1.0, 1.0]));
        assert_eq!(r.stopping_time, Some(0.5));
        assert_eq!(r.shares, vec![0.5, 0.5]);

        let r = eat(&w(&[1.0, (-0.5f64).exp()]));
        assert!((r.stopping_time.unwrap() - 0.75).abs() < 1e-15);
        assert!((r.shares[0] - 0.75).abs() < 1e-15);
        assert!((r.shares[1] - 0.25).abs() < 1e-15);

        let r = eat(&w(&[1.0, 0.0]));
        assert_eq!(r.shares, vec![1.0, 0.0]);
        assert_eq!(r.start_times[1], None);
    }

    #[test]
    fn eat_all_zero_is_flagged() {
        let r = eat(&w(&[0.0, 0.0]));
        assert_eq!(r.stopping_time, None);
        assert_eq!(r.shares, vec![0.0, 0.0]);
    }

    #[test]
    fn eat_matches_bisection_oracle() {
        let cases: [&[f64]; 4] =
            [&[3.0, 1.0, 0.2, 0.0], &[1e-6, 2e-6, 5.0], &[7.0, 7.0, 7.0], &[0.5, 40.0, 39.0, 1.0]];
        for weights in cases {
            let r = eat(&w(weights));
            let t = bisect_stopping_time(weights);
            assert!((r.stopping_time.unwrap() - t).abs() < 1e-9, "{weights:?}");
            assert!((r.shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_bidder_curve() {
        let curve = allocation_curve(&w(&[0.0, 1.0]), 0, 4.0).unwrap();
        assert!((curve.entry - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(curve.segments.len(), 2);
        assert!((curve.segments[0].upper - E).abs() < 1e-12);
        assert!((curve.segments[0].intercept - 0.5).abs() < 1e-15);
        assert!((curve.segments[0].slope - 0.5).abs() < 1e-15);
        assert_eq!(curve.segments[1].intercept, 1.0);
        for k in 1..=100 {
            let v = 0.05 * k as f64;
            let direct = eat(&w(&[v, 1.0])).shares[0];
            assert!((curve.share_at(v) - direct).abs() < 1e-12, "v = {v}");
        }
    }

    #[test]
    fn single_bidder_curve_is_flat() {
        let curve = allocation_curve(&w(&[3.0]), 0, 4.0).unwrap();
        assert_eq!(curve.entry, 0.0);
        assert_eq!(curve.segments.len(), 1);
        assert_eq!(curve.share_at(1e-9), 1.0);
        assert_eq!(payment_of(&curve, 7.0).unwrap(), 0.0);
    }

    #[test]
    fn two_bidder_payment_at_one() {
        let curve = allocation_curve(&w(&[0.0, 1.0]), 0, 4.0).unwrap();
        // x(1) = 1/8, ∫_{1/e}^1 (1 + ln τ)/2 dτ = 1/(2e), so p = (1 - 1/e)/8.
        let expected = (1.0 - (-1.0f64).exp()) / 8.0;
        let p = payment_of(&curve, 1.0).unwrap();
        assert!((p - expected).abs() < 1e-15);
        let numeric = curve.allocation_at(1.0) - quadrature_integral(&curve, 1.0);
        assert!((p - numeric).abs() < 1e-9);
    }

    #[test]
    fn payments_match_quadrature_on_multi_segment_curves() {
        let weights = w(&[0.0, 2.0, 0.7, 0.3, 1.1]);
        let curve = allocation_curve(&weights, 0, 4.0).unwrap();
        assert!(curve.segments.len() >= 3);
        for v in [0.1, 0.5, 1.0, 2.5, 9.0] {
            let p = payment_of(&curve, v).unwrap();
            let numeric = curve.allocation_at(v) * v - quadrature_integral(&curve, v);
            assert!((p - numeric).abs() < 1e-9, "v = {v}: {p} vs {numeric}");
            assert!(p >= 0.0 && p <= curve.allocation_at(v) * v);
        }
    }

    #[test]
    fn step_curve_payment_is_threshold_times_height() {
        // Threshold payment identity on a pure step: ∫_0^v q·1[τ > θ] dτ = q(v - θ).
        let theta = 2.0;
        let q = 0.25;
        let v = 5.0;
        let integral = q * (v - theta);
        assert_eq!(q * v - integral, q * theta);
    }

    #[test]
    fn payment_rejects_bad_report() {
        let curve = allocation_curve(&w(&[0.0, 1.0]), 0, 4.0).unwrap();
        assert!(payment_of(&curve, -1.0).is_err());
        assert!(payment_of(&curve, f64::NAN).is_err());
    }

    #[test]
    fn mechanism_single_bidder() {
        let v = ValuationOracle::constant(0, 1, 7.0);
        let s = SignalProfile::new(vec![0.0]).unwrap();
        let out = EatingMechanism::default().run(&s, &[v]).unwrap();
        assert_eq!(out.allocations, vec![0.25]);
        assert_eq!(out.payments, vec![0.0]);
    }

    #[test]
    fn mechanism_two_bidder_max_signal() {
        let vals: Vec<_> = (0..2)
            .map(|i| {
                ValuationOracle::from_fn(i, 2, ValuationMeta { claimed_sos: true, claimed_d: Some(1), monotone: true }, |s| {
                    s[0].max(s[1])
                })
            })
            .collect();
        let s = SignalProfile::new(vec![0.0, 1.0]).unwrap();
        let out = EatingMechanism::default().run(&s, &vals).unwrap();
        assert_eq!(out.weights[0].as_slice(), &[1.0, 1.0]);
        assert_eq!(out.weights[1].as_slice(), &[0.0, 1.0]);
        assert_eq!(out.allocations, vec![0.125, 0.25]);
        assert!(out.feasible);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn symmetric_bidders_get_equal_allocations() {
        let n = 5;
        let vals: Vec<_> = (0..n).map(|i| ValuationOracle::constant(i, n, 2.0)).collect();
        let s = SignalProfile::new(vec![1.0; n]).unwrap();
        let out = EatingMechanism::default().run(&s, &vals).unwrap();
        for x in &out.allocations {
            assert!((x - 0.05).abs() < 1e-15);
        }
    }

    #[test]
    fn non_sos_input_gets_diagnostic_not_normalisation() {
        // Product valuations: each bidder's shadow collapses to 0, so every
        // own-process share is 1 and the sum of allocations is n/4.
        let n = 6;
        let vals: Vec<_> = (0..n)
            .map(|i| ValuationOracle::from_fn(i, n, ValuationMeta::default(), |s| s.iter().product()))
            .collect();
        let s = SignalProfile::new(vec![1.5; n]).unwrap();
        let out = EatingMechanism::default().run(&s, &vals).unwrap();
        assert!(!out.feasible);
        assert!((out.total_allocation - 1.5).abs() < 1e-12);
        assert!(out.warnings.len() > n);
    }

    #[test]
    fn welfare_factor_minimum() {
        let (y, f) = (0..=100_000)
            .map(|k| {
                let y = k as f64 / 100_000.0;
                (y, welfare_factor(y))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!((f - 0.8005).abs() < 1e-3);
        assert!((y - 0.44).abs() < 0.02);
    }
}
