//! Matroids given by independence oracles.
//!
//! Elements are `0..n`. Subsets are passed as slices of distinct element
//! indices in any order. The concrete kinds cover what the mechanisms and the
//! test corpora need: uniform, partition, graphic, linear over the rationals,
//! and explicit lists of independent sets.

mod greedy;
mod partition;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use greedy::{
    critical_weight, greedy_max_weight, scan_order, CriticalWeight, GreedyResult, WeightFunction,
};
pub use partition::{
    partition_into, verify_partition_condition, verify_partition_condition_sampled,
    IndependentSetPartition, PartitionCondition, EXHAUSTIVE_LIMIT,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatroidError {
    #[error("element {element} out of range for ground set of size {n}")]
    ElementOutOfRange { element: usize, n: usize },
    #[error("element {0} appears twice in a subset")]
    DuplicateElement(usize),
    #[error("invalid matroid spec: {0}")]
    InvalidSpec(String),
    #[error("independence family violates the matroid axioms: {0}")]
    NotAMatroid(String),
    #[error("independence oracle is inconsistent: {0}")]
    CorruptOracle(String),
    #[error("partition into {t} independent sets impossible; violating subset {violator:?}")]
    PartitionConditionViolated { violator: Vec<usize>, t: usize },
    #[error("weights must be finite and non-negative; entry {index} is {value}")]
    InvalidWeight { index: usize, value: f64 },
    #[error("weight vector has length {got}, expected {expected}")]
    WeightLength { expected: usize, got: usize },
    #[error("ground set of size {0} too large for this operation")]
    TooLarge(usize),
}

/// A rational matrix entry: an integer or a string such as `"-3/4"`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalEntry(pub BigRational);

impl Serialize for RationalEntry {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for RationalEntry {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Int(i) => Ok(RationalEntry(BigRational::from_integer(BigInt::from(i)))),
            Repr::Text(s) => BigRational::from_str(s.trim())
                .map(RationalEntry)
                .map_err(|e| serde::de::Error::custom(format!("bad rational {s:?}: {e}"))),
        }
    }
}

/// JSON form: `{"kind": "uniform", "params": {"n": 5, "k": 2}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum MatroidSpec {
    Uniform { n: usize, k: usize },
    Partition { blocks: Vec<Vec<usize>>, capacities: Vec<usize> },
    Graphic { vertices: usize, edges: Vec<[usize; 2]> },
    /// Elements are the columns of `rows`.
    Linear { rows: Vec<Vec<RationalEntry>> },
    Explicit { n: usize, independent: Vec<Vec<usize>> },
}

#[derive(Clone)]
enum Kind {
    Uniform { k: usize },
    Partition { block_of: Vec<usize>, capacities: Vec<usize> },
    Graphic { vertices: usize, edges: Vec<(usize, usize)> },
    Linear { columns: Vec<Vec<BigRational>> },
    Explicit { independent: HashSet<u64> },
}

/// Ground set `0..n` with an independence query.
#[derive(Clone)]
pub struct MatroidOracle {
    n: usize,
    kind: Kind,
}

impl fmt::Debug for MatroidOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Uniform { k } => write!(f, "Uniform(n={}, k={k})", self.n),
            Kind::Partition { capacities, .. } => {
                write!(f, "Partition(n={}, capacities={capacities:?})", self.n)
            }
            Kind::Graphic { vertices, edges } => {
                write!(f, "Graphic(vertices={vertices}, edges={edges:?})")
            }
            Kind::Linear { columns } => {
                write!(f, "Linear(n={}, rows={})", self.n, columns.first().map_or(0, Vec::len))
            }
            Kind::Explicit { independent } => {
                write!(f, "Explicit(n={}, independent_sets={})", self.n, independent.len())
            }
        }
    }
}

fn mask_of(subset: &[usize]) -> u64 {
    subset.iter().fold(0u64, |m, &e| m | (1u64 << e))
}

fn elements_of(mask: u64) -> Vec<usize> {
    (0..64).filter(|b| mask >> b & 1 == 1).collect()
}

impl MatroidOracle {
    pub fn uniform(n: usize, k: usize) -> Self {
        Self { n, kind: Kind::Uniform { k } }
    }

    /// Partition matroid: element `e` lies in block `block_of[e]`, and at most
    /// `capacities[b]` elements of block `b` may be chosen.
    pub fn partition(block_of: Vec<usize>, capacities: Vec<usize>) -> Result<Self, MatroidError> {
        if let Some(&b) = block_of.iter().find(|&&b| b >= capacities.len()) {
            return Err(MatroidError::InvalidSpec(format!("block {b} has no capacity")));
        }
        Ok(Self { n: block_of.len(), kind: Kind::Partition { block_of, capacities } })
    }

    /// Graphic matroid: element `e` is edge `edges[e]`; forests are independent.
    pub fn graphic(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self, MatroidError> {
        if let Some(&(a, b)) = edges.iter().find(|(a, b)| *a >= vertices || *b >= vertices) {
            return Err(MatroidError::InvalidSpec(format!(
                "edge ({a}, {b}) references a vertex outside 0..{vertices}"
            )));
        }
        Ok(Self { n: edges.len(), kind: Kind::Graphic { vertices, edges } })
    }

    /// Linear matroid over the rationals; element `e` is column `e` of `rows`.
    pub fn linear(rows: Vec<Vec<BigRational>>) -> Result<Self, MatroidError> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(MatroidError::InvalidSpec("ragged matrix".into()));
        }
        let columns = (0..n).map(|c| rows.iter().map(|r| r[c].clone()).collect()).collect();
        Ok(Self { n, kind: Kind::Linear { columns } })
    }

    /// Explicit family of independent sets; the matroid axioms are verified exhaustively.
    pub fn explicit(n: usize, independent: Vec<Vec<usize>>) -> Result<Self, MatroidError> {
        if n > 20 {
            return Err(MatroidError::TooLarge(n));
        }
        let mut family = HashSet::with_capacity(independent.len() + 1);
        for set in &independent {
            validate_subset(n, set)?;
            family.insert(mask_of(set));
        }
        let oracle = Self { n, kind: Kind::Explicit { independent: family } };
        oracle.check_axioms()?;
        Ok(oracle)
    }

    /// Builds the explicit matroid with the same independent sets as `self`.
    pub fn to_explicit(&self) -> Result<Self, MatroidError> {
        if self.n > 20 {
            return Err(MatroidError::TooLarge(self.n));
        }
        let independent = (0u64..1 << self.n)
            .filter(|&m| self.is_independent(&elements_of(m)))
            .collect();
        Ok(Self { n: self.n, kind: Kind::Explicit { independent } })
    }

    pub fn from_spec(spec: &MatroidSpec) -> Result<Self, MatroidError> {
        match spec {
            MatroidSpec::Uniform { n, k } => Ok(Self::uniform(*n, *k)),
            MatroidSpec::Partition { blocks, capacities } => {
                if blocks.len() != capacities.len() {
                    return Err(MatroidError::InvalidSpec(
                        "one capacity per block required".into(),
                    ));
                }
                let n: usize = blocks.iter().map(Vec::len).sum();
                let mut block_of = vec![usize::MAX; n];
                for (b, block) in blocks.iter().enumerate() {
                    for &e in block {
                        if e >= n {
                            return Err(MatroidError::ElementOutOfRange { element: e, n });
                        }
                        if block_of[e] != usize::MAX {
                            return Err(MatroidError::DuplicateElement(e));
                        }
                        block_of[e] = b;
                    }
                }
                Self::partition(block_of, capacities.clone())
            }
            MatroidSpec::Graphic { vertices, edges } => {
                Self::graphic(*vertices, edges.iter().map(|[a, b]| (*a, *b)).collect())
            }
            MatroidSpec::Linear { rows } => {
                Self::linear(rows.iter().map(|r| r.iter().map(|x| x.0.clone()).collect()).collect())
            }
            MatroidSpec::Explicit { n, independent } => Self::explicit(*n, independent.clone()),
        }
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn ground_set(&self) -> Vec<usize> {
        (0..self.n).collect()
    }

    /// Independence query. Elements must be distinct and `< n`.
    pub fn is_independent(&self, subset: &[usize]) -> bool {
        debug_assert!(subset.iter().all(|&e| e < self.n));
        match &self.kind {
            Kind::Uniform { k } => subset.len() <= *k,
            Kind::Partition { block_of, capacities } => {
                let mut used = vec![0usize; capacities.len()];
                subset.iter().all(|&e| {
                    let b = block_of[e];
                    used[b] += 1;
                    used[b] <= capacities[b]
                })
            }
            Kind::Graphic { vertices, edges } => {
                let mut uf = UnionFind::<usize>::new(*vertices);
                subset.iter().all(|&e| {
                    let (a, b) = edges[e];
                    uf.union(a, b)
                })
            }
            Kind::Linear { columns } => {
                let cols: Vec<&Vec<BigRational>> = subset.iter().map(|&e| &columns[e]).collect();
                column_rank(&cols) == subset.len()
            }
            Kind::Explicit { independent } => independent.contains(&mask_of(subset)),
        }
    }

    /// Validated independence query.
    pub fn independent(&self, subset: &[usize]) -> Result<bool, MatroidError> {
        validate_subset(self.n, subset)?;
        Ok(self.is_independent(subset))
    }

    /// Greedy augmentation in the given order.
    pub(crate) fn rank_unchecked(&self, subset: &[usize]) -> usize {
        self.max_independent_in(subset.iter().copied()).len()
    }

    pub(crate) fn max_independent_in(&self, elements: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut basis = Vec::new();
        for e in elements {
            basis.push(e);
            if !self.is_independent(&basis) {
                basis.pop();
            }
        }
        basis
    }

    /// Size of a maximal independent subset of `subset`.
    ///
    /// Augments greedily in both ascending and descending element order; in a
    /// matroid every maximal independent subset has the same size, so a
    /// disagreement exposes an oracle that breaks the exchange property.
    pub fn rank(&self, subset: &[usize]) -> Result<usize, MatroidError> {
        validate_subset(self.n, subset)?;
        if !self.is_independent(&[]) {
            return Err(MatroidError::CorruptOracle("empty set is dependent".into()));
        }
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        let forward = self.max_independent_in(sorted.iter().copied());
        let backward = self.max_independent_in(sorted.iter().rev().copied());
        if forward.len() != backward.len() {
            return Err(MatroidError::CorruptOracle(format!(
                "maximal independent subsets {forward:?} and {backward:?} of {sorted:?} differ in size"
            )));
        }
        Ok(forward.len())
    }

    /// Rank of the whole ground set.
    pub fn full_rank(&self) -> usize {
        self.rank_unchecked(&self.ground_set())
    }

    /// Exhaustive check of the matroid axioms (ground sets up to 20 elements).
    pub fn check_axioms(&self) -> Result<(), MatroidError> {
        if self.n > 20 {
            return Err(MatroidError::TooLarge(self.n));
        }
        if !self.is_independent(&[]) {
            return Err(MatroidError::NotAMatroid("empty set must be independent".into()));
        }
        let independent: Vec<u64> = (0u64..1 << self.n)
            .filter(|&m| self.is_independent(&elements_of(m)))
            .collect();
        let family: HashSet<u64> = independent.iter().copied().collect();
        for &m in &independent {
            for e in elements_of(m) {
                if !family.contains(&(m & !(1 << e))) {
                    return Err(MatroidError::NotAMatroid(format!(
                        "not downward closed: {:?} independent but {:?} is not",
                        elements_of(m),
                        elements_of(m & !(1 << e))
                    )));
                }
            }
        }
        for &a in &independent {
            for &b in &independent {
                if a.count_ones() >= b.count_ones() {
                    continue;
                }
                let extendable = elements_of(b & !a).into_iter().any(|e| family.contains(&(a | 1 << e)));
                if !extendable {
                    return Err(MatroidError::NotAMatroid(format!(
                        "exchange fails for A={:?}, B={:?}",
                        elements_of(a),
                        elements_of(b)
                    )));
                }
            }
        }
        Ok(())
    }

    /// All independent sets, as sorted element lists (ground sets up to 20 elements).
    pub fn independent_sets(&self) -> Result<Vec<Vec<usize>>, MatroidError> {
        if self.n > 20 {
            return Err(MatroidError::TooLarge(self.n));
        }
        Ok((0u64..1 << self.n)
            .map(elements_of)
            .filter(|s| self.is_independent(s))
            .collect())
    }
}

pub(crate) fn validate_subset(n: usize, subset: &[usize]) -> Result<(), MatroidError> {
    let mut seen = HashSet::with_capacity(subset.len());
    for &e in subset {
        if e >= n {
            return Err(MatroidError::ElementOutOfRange { element: e, n });
        }
        if !seen.insert(e) {
            return Err(MatroidError::DuplicateElement(e));
        }
    }
    Ok(())
}

/// Exact rank of a set of rational column vectors by Gaussian elimination.
fn column_rank(cols: &[&Vec<BigRational>]) -> usize {
    if cols.is_empty() {
        return 0;
    }
    let rows = cols[0].len();
    // Work on the transpose: one row per column vector.
    let mut m: Vec<Vec<BigRational>> = cols.iter().map(|c| (*c).clone()).collect();
    let mut rank = 0;
    for pivot_col in 0..rows {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][pivot_col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let inv = BigRational::one() / m[rank][pivot_col].clone();
        for r in rank + 1..m.len() {
            if m[r][pivot_col].is_zero() {
                continue;
            }
            let factor = m[r][pivot_col].clone() * inv.clone();
            for c in pivot_col..rows {
                let delta = factor.clone() * m[rank][c].clone();
                m[r][c] -= delta;
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn triangle() -> MatroidOracle {
        MatroidOracle::graphic(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(MatroidOracle::uniform(5, 2).rank(&[0, 1, 2]).unwrap(), 2);
        assert_eq!(triangle().rank(&[0, 1, 2]).unwrap(), 2);
        assert_eq!(triangle().rank(&[]).unwrap(), 0);
        assert_eq!(MatroidOracle::uniform(5, 2).rank(&[]).unwrap(), 0);
    }

    #[test]
    fn rank_rejects_bad_subsets() {
        let m = MatroidOracle::uniform(3, 1);
        assert_eq!(m.rank(&[3]), Err(MatroidError::ElementOutOfRange { element: 3, n: 3 }));
        assert_eq!(m.rank(&[1, 1]), Err(MatroidError::DuplicateElement(1)));
    }

    #[test]
    fn explicit_rejects_non_matroids() {
        // Not downward closed.
        assert!(matches!(
            MatroidOracle::explicit(2, vec![vec![], vec![0, 1]]),
            Err(MatroidError::NotAMatroid(_))
        ));
        // Exchange fails: {2} cannot be extended from {0, 1}.
        let fam = vec![vec![], vec![0], vec![1], vec![2], vec![0, 1]];
        assert!(matches!(MatroidOracle::explicit(3, fam), Err(MatroidError::NotAMatroid(_))));
    }

    #[test]
    fn explicit_matches_source_matroid() {
        let m = triangle();
        let e = m.to_explicit().unwrap();
        e.check_axioms().unwrap();
        assert_eq!(e.independent_sets().unwrap(), m.independent_sets().unwrap());
        assert_eq!(e.independent_sets().unwrap().len(), 7);
    }

    #[test]
    fn partition_and_linear_kinds() {
        let p = MatroidOracle::partition(vec![0, 0, 1, 1, 1], vec![1, 2]).unwrap();
        assert!(p.is_independent(&[0, 2, 3]));
        assert!(!p.is_independent(&[0, 1]));
        assert_eq!(p.full_rank(), 3);

        let json = r#"{"kind": "linear", "params": {"rows": [[1, 0, 1, "1/2"], [0, 1, 1, "1/2"]]}}"#;
        let spec: MatroidSpec = serde_json::from_str(json).unwrap();
        let m = MatroidOracle::from_spec(&spec).unwrap();
        assert!(m.is_independent(&[0, 1]));
        assert!(!m.is_independent(&[2, 3]));
        assert!(!m.is_independent(&[0, 1, 2]));
        assert_eq!(m.full_rank(), 2);
        m.check_axioms().unwrap();
    }

    #[test]
    fn corrupt_oracle_detected_by_rank() {
        // {0,1} and {2} maximal: sizes differ, so not a matroid.
        let corrupt = MatroidOracle {
            n: 3,
            kind: Kind::Explicit { independent: [0b000, 0b001, 0b010, 0b011, 0b100].into() },
        };
        assert!(matches!(corrupt.rank(&[0, 1, 2]), Err(MatroidError::CorruptOracle(_))));
    }

    #[test]
    fn spec_json_shapes() {
        let cases = [
            r#"{"kind": "uniform", "params": {"n": 4, "k": 2}}"#,
            r#"{"kind": "partition", "params": {"blocks": [[0, 1], [2]], "capacities": [1, 1]}}"#,
            r#"{"kind": "graphic", "params": {"vertices": 3, "edges": [[0, 1], [1, 2], [0, 2]]}}"#,
            r#"{"kind": "explicit", "params": {"n": 2, "independent": [[], [0], [1]]}}"#,
        ];
        let ranks = [2, 2, 2, 1];
        for (json, rank) in cases.iter().zip(ranks) {
            let spec: MatroidSpec = serde_json::from_str(json).unwrap();
            assert_eq!(MatroidOracle::from_spec(&spec).unwrap().full_rank(), rank, "{json}");
        }
        let bad = r#"{"kind": "partition", "params": {"blocks": [[0, 0]], "capacities": [1]}}"#;
        let spec: MatroidSpec = serde_json::from_str(bad).unwrap();
        assert!(MatroidOracle::from_spec(&spec).is_err());
    }
}
