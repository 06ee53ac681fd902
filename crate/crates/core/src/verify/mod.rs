//! Independent machinery for certifying the mechanisms: an LP solver for the
//! share programs, explicit dual certificates, exhaustive optima and
//! deviation audits.

pub mod audit;
pub mod brute;
pub mod certificate;
pub mod simplex;

use thiserror::Error;

use crate::cp::CpError;
use crate::eating::EatingError;
use crate::matroid::MatroidError;
use crate::valuation::ValuationError;

pub use audit::{truthfulness_audit, value_grid, AuditReport, AuditedMechanism, Deviation, AUDIT_TOL, IR_TOL};
pub use brute::{brute_force_max_weight, brute_force_opt, OptResult, BRUTE_FORCE_LIMIT};
pub use certificate::{build_dual_certificate, certify, gamma, CertificateCheck, DualCertificate};
pub use simplex::{
    dual_share_lp, lp_share, share_lp, stopping_time_lp, LinearProgram, LpError, LpSolution, Relation,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Matroid(#[from] MatroidError),
    #[error(transparent)]
    Eating(#[from] EatingError),
    #[error(transparent)]
    Cp(#[from] CpError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("{n} elements exceed the enumeration limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("expected {expected} entries, got {got}")]
    BidderCount { expected: usize, got: usize },
    #[error("bidder index {index} out of range for {n} bidders")]
    BidderOutOfRange { index: usize, n: usize },
}
