//! Truthful auctions for interdependent values with private valuation functions.
//!
//! The crate is organised around five pieces:
//!
//! - [`valuation`]: signal profiles, valuation oracles, shadow values, concrete
//!   valuation families and grid checkers for SOS, self-bounding and
//!   d-criticality.
//! - [`matroid`]: independence oracles, rank, greedy with lower-index
//!   tie-breaking, critical weights and matroid partitioning.
//! - [`eating`]: the eating mechanism for single-item auctions with SOS
//!   valuations, including allocation curves and exact payments.
//! - [`cp`]: the candidate partitioning mechanism for matroid environments with
//!   d-critical valuations, plus the heterogeneous-d variant.
//! - [`verify`]: independent oracles (dense simplex, dual certificates,
//!   brute-force optima, truthfulness audits).

pub mod cp;
pub mod eating;
pub mod matroid;
pub mod tolerance;
pub mod valuation;
pub mod verify;

pub use cp::{CandidateSet, CpMechanism, CpOutcome, CpPlan, HeteroDReport};
pub use eating::{AllocationCurve, EatingMechanism, EatingOutcome, EatingResult};
pub use matroid::{IndependentSetPartition, MatroidOracle, WeightFunction};
pub use valuation::{ShadowOperator, SignalProfile, ValuationFamilySpec, ValuationOracle};
