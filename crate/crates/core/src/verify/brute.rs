//! Exhaustive welfare optimum over independent sets.

use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::matroid::{greedy_max_weight, MatroidOracle, WeightFunction};
use crate::valuation::{true_values, SignalProfile, ValuationOracle};

pub const BRUTE_FORCE_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub value: f64,
    /// Optimal set, ascending.
    pub set: Vec<usize>,
}

fn sum_ascending(set: &[usize], w: &WeightFunction) -> f64 {
    set.iter().map(|&e| w.get(e)).sum()
}

/// Maximum-weight independent set by enumeration. Among optimal sets the
/// greedy one is preferred, so the two can be compared set-for-set.
pub fn brute_force_max_weight(m: &MatroidOracle, w: &WeightFunction) -> Result<OptResult, VerifyError> {
    let n = m.ground_size();
    if n > BRUTE_FORCE_LIMIT {
        return Err(VerifyError::TooLarge { n, limit: BRUTE_FORCE_LIMIT });
    }
    if w.len() != n {
        return Err(VerifyError::BidderCount { expected: n, got: w.len() });
    }
    let mut best = OptResult { value: 0.0, set: Vec::new() };
    for bits in 1u32..1 << n {
        let set: Vec<usize> = (0..n).filter(|&e| bits >> e & 1 == 1).collect();
        if !m.is_independent(&set) {
            continue;
        }
        let value = sum_ascending(&set, w);
        if value > best.value {
            best = OptResult { value, set };
        }
    }
    let greedy = greedy_max_weight(m, w).sorted();
    let greedy_value = sum_ascending(&greedy, w);
    if greedy_value >= best.value {
        best = OptResult { value: greedy_value, set: greedy };
    }
    Ok(best)
}

/// Welfare optimum `max_{I independent} sum_{i in I} v_i(s)`.
pub fn brute_force_opt(
    s: &SignalProfile,
    valuations: &[ValuationOracle],
    m: &MatroidOracle,
) -> Result<OptResult, VerifyError> {
    let values = true_values(s, valuations)?;
    let w = WeightFunction::new(values)?;
    brute_force_max_weight(m, &w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[f64]) -> WeightFunction {
        WeightFunction::new(v.to_vec()).unwrap()
    }

    #[test]
    fn examples() {
        let r = brute_force_max_weight(&MatroidOracle::uniform(3, 1), &w(&[2.0, 7.0, 7.0])).unwrap();
        assert_eq!((r.value, r.set), (7.0, vec![1]));
        let r = brute_force_max_weight(&MatroidOracle::uniform(3, 2), &w(&[1.0, 3.0, 2.0])).unwrap();
        assert_eq!((r.value, r.set), (5.0, vec![1, 2]));
        let tri = MatroidOracle::graphic(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let r = brute_force_max_weight(&tri, &w(&[3.0, 2.0, 1.0])).unwrap();
        assert_eq!((r.value, r.set), (5.0, vec![0, 1]));
    }

    #[test]
    fn size_limit() {
        let m = MatroidOracle::uniform(13, 2);
        assert!(matches!(
            brute_force_max_weight(&m, &w(&[1.0; 13])),
            Err(VerifyError::TooLarge { .. })
        ));
    }

    #[test]
    fn from_valuations() {
        let vals: Vec<_> =
            [4.0, 1.0, 3.0].iter().enumerate().map(|(i, &v)| ValuationOracle::constant(i, 3, v)).collect();
        let s = SignalProfile::new(vec![0.0; 3]).unwrap();
        let r = brute_force_opt(&s, &vals, &MatroidOracle::uniform(3, 1)).unwrap();
        assert_eq!((r.value, r.set), (4.0, vec![0]));
    }
}
