use serde::{Deserialize, Serialize};

use super::{MatroidError, MatroidOracle};
use crate::tolerance::WEIGHT_TIE_BAND;

/// Non-negative finite weight per ground element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightFunction(Vec<f64>);

impl WeightFunction {
    pub fn new(weights: Vec<f64>) -> Result<Self, MatroidError> {
        if let Some((index, &value)) =
            weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(MatroidError::InvalidWeight { index, value });
        }
        Ok(Self(weights.into_iter().map(|w| w + 0.0).collect()))
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

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Copy with entry `i` replaced.
    pub fn with_weight(&self, i: usize, value: f64) -> Result<Self, MatroidError> {
        let mut w = self.0.clone();
        w[i] = value;
        Self::new(w)
    }
}

impl TryFrom<Vec<f64>> for WeightFunction {
    type Error = MatroidError;

    fn try_from(w: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(w)
    }
}

impl From<WeightFunction> for Vec<f64> {
    fn from(w: WeightFunction) -> Self {
        w.0
    }
}

/// Scan order of `elements`: non-increasing weight, ties to the lower index.
///
/// Weights within [`WEIGHT_TIE_BAND`] of their neighbour in sorted order are
/// grouped and treated as tied, so float noise cannot reorder equal weights.
pub fn scan_order(w: &WeightFunction, elements: &[usize]) -> Vec<usize> {
    let mut order = elements.to_vec();
    order.sort_by(|&a, &b| w.get(b).total_cmp(&w.get(a)).then(a.cmp(&b)));
    let mut out = Vec::with_capacity(order.len());
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && w.get(order[end - 1]) - w.get(order[end]) <= WEIGHT_TIE_BAND {
            end += 1;
        }
        let mut cluster = order[start..end].to_vec();
        cluster.sort_unstable();
        out.extend(cluster);
        start = end;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyResult {
    /// Selected elements, in the order greedy picked them.
    pub selected: Vec<usize>,
    /// Full scan order, for diagnostics.
    pub order: Vec<usize>,
}

impl GreedyResult {
    pub fn contains(&self, e: usize) -> bool {
        self.selected.contains(&e)
    }

    /// Selected elements in ascending order.
    pub fn sorted(&self) -> Vec<usize> {
        let mut s = self.selected.clone();
        s.sort_unstable();
        s
    }

    /// Total weight, summed in ascending element order.
    pub fn total_weight(&self, w: &WeightFunction) -> f64 {
        self.sorted().iter().map(|&e| w.get(e)).sum()
    }
}

/// Greedy maximum-weight independent set with lower-index tie-breaking.
pub fn greedy_max_weight(m: &MatroidOracle, w: &WeightFunction) -> GreedyResult {
    assert_eq!(w.len(), m.ground_size(), "weight vector must cover the ground set");
    let order = scan_order(w, &m.ground_set());
    let selected = m.max_independent_in(order.iter().copied());
    GreedyResult { selected, order }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalWeight {
    /// Infimum weight at which greedy selects the element; `inf` for loops.
    pub threshold: f64,
    /// The element whose arrival in the scan first spans the queried element.
    pub blocker: Option<usize>,
    /// Whether the element is selected when its weight equals the threshold.
    pub selected_at_threshold: bool,
}

impl CriticalWeight {
    /// Whether greedy selects the element at weight `v`.
    pub fn selects(&self, v: f64) -> bool {
        if v > self.threshold + WEIGHT_TIE_BAND {
            true
        } else if v < self.threshold - WEIGHT_TIE_BAND {
            false
        } else {
            self.selected_at_threshold
        }
    }
}

/// Critical weight of element `i`: greedy selects `i` above the threshold and
/// rejects it below. The entry `w[i]` is ignored.
pub fn critical_weight(
    m: &MatroidOracle,
    i: usize,
    w: &WeightFunction,
) -> Result<CriticalWeight, MatroidError> {
    let n = m.ground_size();
    if i >= n {
        return Err(MatroidError::ElementOutOfRange { element: i, n });
    }
    if w.len() != n {
        return Err(MatroidError::WeightLength { expected: n, got: w.len() });
    }
    if !m.is_independent(&[i]) {
        return Ok(CriticalWeight {
            threshold: f64::INFINITY,
            blocker: None,
            selected_at_threshold: false,
        });
    }
    let others: Vec<usize> = (0..n).filter(|&e| e != i).collect();
    let mut basis: Vec<usize> = Vec::new();
    for e in scan_order(w, &others) {
        basis.push(e);
        if !m.is_independent(&basis) {
            basis.pop();
            continue;
        }
        basis.push(i);
        let spans = !m.is_independent(&basis);
        basis.pop();
        if spans {
            let threshold = w.get(e);
            let at = w.with_weight(i, threshold)?;
            let selected_at_threshold = greedy_max_weight(m, &at).contains(i);
            return Ok(CriticalWeight { threshold, blocker: Some(e), selected_at_threshold });
        }
    }
    Ok(CriticalWeight { threshold: 0.0, blocker: None, selected_at_threshold: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[f64]) -> WeightFunction {
        WeightFunction::new(v.to_vec()).unwrap()
    }

    fn triangle() -> MatroidOracle {
        MatroidOracle::graphic(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    /// Independent oracle: max weight over all independent sets.
    fn brute_max(m: &MatroidOracle, w: &WeightFunction) -> f64 {
        m.independent_sets()
            .unwrap()
            .iter()
            .map(|s| s.iter().map(|&e| w.get(e)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_max_weight(&MatroidOracle::uniform(2, 1), &w(&[5.0, 5.0])).sorted(), vec![0]);
        assert_eq!(
            greedy_max_weight(&MatroidOracle::uniform(3, 2), &w(&[1.0, 3.0, 2.0])).sorted(),
            vec![1, 2]
        );
        let t = triangle();
        let weights = w(&[3.0, 2.0, 1.0]);
        let g = greedy_max_weight(&t, &weights);
        assert_eq!(g.sorted(), vec![0, 1]);
        assert_eq!(g.total_weight(&weights), brute_max(&t, &weights));
        assert_eq!(g.order, vec![0, 1, 2]);
    }

    #[test]
    fn ties_within_band_go_to_lower_index() {
        let weights = w(&[1.0, 1.0 + 1e-14, 1.0 - 1e-14]);
        assert_eq!(scan_order(&weights, &[0, 1, 2]), vec![0, 1, 2]);
        let g = greedy_max_weight(&MatroidOracle::uniform(3, 1), &weights);
        assert_eq!(g.selected, vec![0]);
    }

    #[test]
    fn critical_weight_examples() {
        let u1 = MatroidOracle::uniform(2, 1);
        let c = critical_weight(&u1, 0, &w(&[0.0, 5.0])).unwrap();
        assert_eq!(c.threshold, 5.0);
        assert!(c.selected_at_threshold);

        let c = critical_weight(&u1, 1, &w(&[5.0, 0.0])).unwrap();
        assert_eq!(c.threshold, 5.0);
        assert!(!c.selected_at_threshold);

        let c = critical_weight(&triangle(), 2, &w(&[3.0, 2.0, 0.0])).unwrap();
        assert_eq!(c.threshold, 2.0);
        assert_eq!(c.blocker, Some(1));
    }

    #[test]
    fn critical_weight_matches_bisection() {
        // Bisection over greedy itself on the triangle, edge 2.
        let t = triangle();
        let base = w(&[3.0, 2.0, 0.0]);
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if greedy_max_weight(&t, &base.with_weight(2, mid).unwrap()).contains(2) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let c = critical_weight(&t, 2, &base).unwrap();
        assert!((c.threshold - hi).abs() <= 1e-9);
    }

    #[test]
    fn unblockable_and_loop_elements() {
        let free = MatroidOracle::uniform(3, 3);
        let c = critical_weight(&free, 1, &w(&[4.0, 0.0, 9.0])).unwrap();
        assert_eq!(c.threshold, 0.0);
        assert!(c.selects(0.0));

        let with_loop = MatroidOracle::graphic(2, vec![(0, 1), (1, 1)]).unwrap();
        let c = critical_weight(&with_loop, 1, &w(&[1.0, 0.0])).unwrap();
        assert!(c.threshold.is_infinite());
        assert!(!c.selects(1e300));
    }

    #[test]
    fn weight_validation() {
        assert!(WeightFunction::new(vec![1.0, -1.0]).is_err());
        assert!(WeightFunction::new(vec![f64::INFINITY]).is_err());
        assert!(WeightFunction::new(vec![0.0]).is_ok());
    }
}
