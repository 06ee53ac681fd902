//! Unilateral deviation audits.
//!
//! Both mechanisms see bidder `i`'s report only through the scalar
//! `v̂_i(s)`, so a deviation is modelled by replacing `i`'s valuation with a
//! constant function of the reported value and rerunning the whole mechanism.
//! Utility is always measured against the true value.

use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::cp::{ratio_to_f64, CpMechanism, HeteroDReport};
use crate::eating::EatingMechanism;
use crate::matroid::MatroidOracle;
use crate::tolerance::PROPERTY_TOL;
use crate::valuation::{SignalProfile, ValuationOracle};

/// Utility gains below this are treated as rounding.
pub const AUDIT_TOL: f64 = PROPERTY_TOL;
/// Truthful utility may dip this far below zero from rounding alone.
pub const IR_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum AuditedMechanism<'a> {
    Eating(EatingMechanism),
    Cp { matroid: &'a MatroidOracle, d: usize, mechanism: CpMechanism },
    CpHetero { matroid: &'a MatroidOracle, reports: HeteroDReport, mechanism: CpMechanism },
}

impl AuditedMechanism<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            AuditedMechanism::Eating(_) => "eating",
            AuditedMechanism::Cp { .. } => "cp",
            AuditedMechanism::CpHetero { .. } => "cp-hetero",
        }
    }

    /// Allocation probability and payment of bidder `i` under `valuations`.
    fn evaluate(
        &self,
        s: &SignalProfile,
        valuations: &[ValuationOracle],
        i: usize,
    ) -> Result<(f64, f64), VerifyError> {
        Ok(match self {
            AuditedMechanism::Eating(mech) => {
                let out = mech.run(s, valuations)?;
                (out.allocations[i], out.payments[i])
            }
            AuditedMechanism::Cp { matroid, d, mechanism } => {
                let plan = mechanism.plan(s, valuations, matroid, *d)?;
                (ratio_to_f64(plan.probabilities[i]), plan.payments[i])
            }
            AuditedMechanism::CpHetero { matroid, reports, mechanism } => {
                let plan = mechanism.plan_hetero(s, valuations, matroid, reports)?;
                (ratio_to_f64(plan.probabilities[i]), plan.payments[i])
            }
        })
    }
}

/// `points` evenly spaced reports on `[0, 2v]` (on `[0, 1]` when `v = 0`).
pub fn value_grid(v: f64, points: usize) -> Vec<f64> {
    let hi = if v > 0.0 { 2.0 * v } else { 1.0 };
    let steps = points.max(2) - 1;
    (0..=steps).map(|k| hi * k as f64 / steps as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub reported: f64,
    pub utility: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub bidder: usize,
    pub true_value: f64,
    pub truthful_allocation: f64,
    pub truthful_payment: f64,
    pub truthful_utility: f64,
    /// Reports in `grid` that beat truth-telling by more than [`AUDIT_TOL`].
    pub profitable: Vec<Deviation>,
    /// Allocation is non-decreasing over the sorted grid.
    pub monotone: bool,
    /// `0 <= p(r) <= x(r) r` at every audited report, truth included.
    pub payments_in_range: bool,
    pub individually_rational: bool,
    pub points: usize,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.profitable.is_empty() && self.monotone && self.payments_in_range && self.individually_rational
    }
}

/// Audits bidder `i` against every report in `grid`.
pub fn truthfulness_audit(
    mechanism: &AuditedMechanism<'_>,
    s: &SignalProfile,
    valuations: &[ValuationOracle],
    i: usize,
    grid: &[f64],
) -> Result<AuditReport, VerifyError> {
    let n = s.len();
    if i >= n {
        return Err(VerifyError::BidderOutOfRange { index: i, n });
    }
    let true_value = valuations[i].value(s)?;
    let (x_true, p_true) = mechanism.evaluate(s, valuations, i)?;
    let u_true = x_true * true_value - p_true;
    let payment_ok = |x: f64, p: f64, r: f64| p >= 0.0 && p <= x * r + AUDIT_TOL * (1.0 + r);
    let mut payments_in_range = payment_ok(x_true, p_true, true_value);

    let mut reports: Vec<f64> = grid.to_vec();
    reports.sort_by(f64::total_cmp);
    let mut profitable = Vec::new();
    let mut monotone = true;
    let mut last_x = f64::NEG_INFINITY;
    let mut deviated = valuations.to_vec();
    for &r in &reports {
        deviated[i] = ValuationOracle::constant(i, n, r);
        let (x, p) = mechanism.evaluate(s, &deviated, i)?;
        let utility = x * true_value - p;
        if utility > u_true + AUDIT_TOL {
            log::warn!("bidder {i}: report {r} yields {utility} > truthful {u_true}");
            profitable.push(Deviation { reported: r, utility, gain: utility - u_true });
        }
        monotone &= x >= last_x - AUDIT_TOL;
        last_x = x;
        payments_in_range &= payment_ok(x, p, r);
    }
    Ok(AuditReport {
        bidder: i,
        true_value,
        truthful_allocation: x_true,
        truthful_payment: p_true,
        truthful_utility: u_true,
        profitable,
        monotone,
        payments_in_range,
        individually_rational: u_true >= -IR_TOL,
        points: reports.len(),
    })
}
