//! Numeric tolerances shared across the crate.

/// Slack allowed when checking the SOS inequality and self-bounding.
pub const PROPERTY_TOL: f64 = 1e-9;

/// Strictness band for `v(s_{-j}, 0_j) < v(s)` when counting critical signals.
pub const CRITICALITY_TOL: f64 = 1e-12;

/// Two weights closer than this are treated as tied; ties go to the lower index.
pub const WEIGHT_TIE_BAND: f64 = 1e-12;

/// Pivot and feasibility tolerance of the dense simplex oracle.
pub const SIMPLEX_EPS: f64 = 1e-11;

/// Payments below zero by at most this much are rounding noise and clamp to zero.
pub const PAYMENT_CLAMP: f64 = 1e-12;
