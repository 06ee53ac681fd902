//! Explicit dual solutions bounding the sum of eating shares.

use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::eating::eat;
use crate::tolerance::PROPERTY_TOL;
use crate::valuation::{mixed_weights, true_values, ShadowOperator, SignalProfile, ValuationOracle};

/// `(1 - r) / (-ln r)` for `r = low / value`, continuous at both ends:
/// 1 when `low >= value`, 0 when `low = 0`.
pub fn gamma(low: f64, value: f64) -> f64 {
    if low >= value {
        return 1.0;
    }
    if low <= 0.0 {
        return 0.0;
    }
    let r = low / value;
    // -ln r = -ln_1p(r - 1) keeps precision when r is close to 1.
    let gap = -(r - 1.0).ln_1p();
    if gap <= 0.0 {
        1.0
    } else {
        (1.0 - r) / gap
    }
}

/// A feasible solution to every bidder's dual share program, built over the
/// bidders with a positive share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    /// Bidders the certificate covers, ascending; the others have share 0.
    pub support: Vec<usize>,
    /// `α_i`, zero outside the support.
    pub alpha: Vec<f64>,
    /// `β_{i,j} = γ_{i,j} γ_{j,i} / |support|`, zero outside the support.
    pub beta: Vec<Vec<f64>>,
    /// `γ_{i,j}` computed from `v_i(s_{-j}, 0_j) / v_i(s)`.
    pub gamma: Vec<Vec<f64>>,
    /// Dual objective of each bidder's program; bounds their share.
    pub objectives: Vec<f64>,
    /// Sum of the dual objectives.
    pub bound: f64,
    /// Sum of the own-process shares being bounded.
    pub sum_y: f64,
    /// `1 + (3/n) sum_i sum_{j != i} (1 - v_i(s_{-j},0_j) / v_i(s))`.
    pub analytic_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub dual_feasible: bool,
    pub gamma_in_range: bool,
    /// `sum_y <= bound`.
    pub dominates: bool,
    /// `bound <= analytic_bound`.
    pub within_analytic: bool,
    /// `analytic_bound <= 4`.
    pub at_most_four: bool,
}

impl CertificateCheck {
    pub fn all(&self) -> bool {
        self.dual_feasible && self.gamma_in_range && self.dominates && self.within_analytic && self.at_most_four
    }
}

/// Builds the certificate for the eating mechanism's shares at profile `s`.
pub fn build_dual_certificate(
    s: &SignalProfile,
    valuations: &[ValuationOracle],
    op: &ShadowOperator,
) -> Result<DualCertificate, VerifyError> {
    let n = s.len();
    if valuations.len() != n {
        return Err(VerifyError::BidderCount { expected: n, got: valuations.len() });
    }
    let values = true_values(s, valuations)?;
    let weights = (0..n).map(|i| mixed_weights(s, valuations, i, op)).collect::<Result<Vec<_>, _>>()?;
    let shares: Vec<f64> = (0..n).map(|i| eat(&weights[i]).shares[i]).collect();
    let sum_y = shares.iter().sum();
    // Bidders with no share drop out; removing them only raises the others'
    // shares, so bounding the restricted instance bounds the original.
    let support: Vec<usize> = (0..n).filter(|&i| shares[i] > 0.0 && values[i] > 0.0).collect();
    let k = support.len().max(1) as f64;

    // low[i][j] = v_i(s_{-j}, 0_j) = w_j(i).
    let low = |i: usize, j: usize| weights[j].get(i);
    let mut gamma_m = vec![vec![0.0; n]; n];
    for &i in &support {
        for &j in &support {
            if i != j {
                gamma_m[i][j] = gamma(low(i, j), values[i]);
            }
        }
    }
    let mut alpha = vec![0.0; n];
    let mut beta = vec![vec![0.0; n]; n];
    let mut objectives = vec![0.0; n];
    let mut analytic = 0.0;
    for &i in &support {
        for &j in &support {
            if i != j {
                beta[i][j] = gamma_m[i][j] * gamma_m[j][i] / k;
                analytic += 1.0 - (low(i, j) / values[i]).min(1.0);
            }
        }
        alpha[i] = 1.0 - beta[i].iter().sum::<f64>();
        // Dual objective of bidder i's program on weights w_i, restricted to the support.
        let wi = &weights[i];
        let mut obj = alpha[i];
        for &j in &support {
            if j != i && beta[i][j] > 0.0 {
                obj += beta[i][j] * (wi.get(i).ln() - wi.get(j).ln());
            }
        }
        objectives[i] = obj;
    }
    let bound = objectives.iter().sum();
    let analytic_bound = 1.0 + 3.0 / k * analytic;
    Ok(DualCertificate { support, alpha, beta, gamma: gamma_m, objectives, bound, sum_y, analytic_bound })
}

impl DualCertificate {
    pub fn check(&self, s_values: &[f64], lows: impl Fn(usize, usize) -> f64) -> CertificateCheck {
        let tol = PROPERTY_TOL;
        let mut dual_feasible = true;
        let mut gamma_in_range = true;
        for &i in &self.support {
            let row_sum: f64 = self.beta[i].iter().sum();
            dual_feasible &= self.alpha[i] + row_sum >= 1.0 - tol;
            for &j in &self.support {
                if i == j {
                    continue;
                }
                let b = self.beta[i][j];
                dual_feasible &= b >= 0.0 && self.alpha[i] >= b - tol;
                let g = self.gamma[i][j];
                let ratio = (lows(i, j) / s_values[i]).min(1.0);
                gamma_in_range &= ratio <= g + tol && g <= 1.0 + tol;
            }
        }
        CertificateCheck {
            dual_feasible,
            gamma_in_range,
            dominates: self.sum_y <= self.bound + tol,
            within_analytic: self.bound <= self.analytic_bound + tol,
            at_most_four: self.analytic_bound <= 4.0 + tol,
        }
    }
}

/// Builds and checks the certificate in one go.
pub fn certify(
    s: &SignalProfile,
    valuations: &[ValuationOracle],
    op: &ShadowOperator,
) -> Result<(DualCertificate, CertificateCheck), VerifyError> {
    let cert = build_dual_certificate(s, valuations, op)?;
    let values = true_values(s, valuations)?;
    let weights = (0..s.len()).map(|j| mixed_weights(s, valuations, j, op)).collect::<Result<Vec<_>, _>>()?;
    let check = cert.check(&values, |i, j| weights[j].get(i));
    Ok((cert, check))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::ValuationMeta;

    fn p(v: &[f64]) -> SignalProfile {
        SignalProfile::new(v.to_vec()).unwrap()
    }

    #[test]
    fn gamma_limits_and_range() {
        assert_eq!(gamma(2.0, 2.0), 1.0);
        assert_eq!(gamma(0.0, 2.0), 0.0);
        let g = gamma((-1.0f64).exp(), 1.0);
        assert!((g - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        for r in [1e-9, 0.01, 0.3, 0.7, 0.999_999, 1.0 - 1e-14] {
            let g = gamma(r, 1.0);
            assert!(r <= g + 1e-15 && g <= 1.0, "r = {r}, γ = {g}");
        }
    }

    #[test]
    fn equal_values_case() {
        let vals: Vec<_> = (0..2).map(|i| ValuationOracle::constant(i, 2, 1.0)).collect();
        let (c, check) = certify(&p(&[0.0, 0.0]), &vals, &ShadowOperator::ZeroOut).unwrap();
        assert_eq!(c.gamma[0][1], 1.0);
        assert_eq!(c.beta[0][1], 0.5);
        assert_eq!(c.alpha, vec![0.5, 0.5]);
        assert_eq!(c.bound, 1.0);
        assert_eq!(c.sum_y, 1.0);
        assert!(check.all(), "{check:?}");
    }

    #[test]
    fn shadows_at_one_over_e() {
        // v = (1, 1); zeroing the other bidder's signal drops each value to 1/e.
        let e1 = (-1.0f64).exp();
        let meta = ValuationMeta { claimed_sos: true, claimed_d: Some(1), monotone: true };
        let vals: Vec<_> = (0..2)
            .map(|i| {
                ValuationOracle::from_fn(i, 2, meta, move |s| if s[1 - i] > 0.0 { 1.0 } else { e1 })
            })
            .collect();
        let (c, check) = certify(&p(&[1.0, 1.0]), &vals, &ShadowOperator::ZeroOut).unwrap();
        assert!((c.gamma[0][1] - (1.0 - e1)).abs() < 1e-15);
        assert!(c.bound.is_finite() && c.bound >= c.sum_y);
        assert!(check.all(), "{check:?}");
    }
}
