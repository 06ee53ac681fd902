use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AggregateKind, Evaluator, LookupTable, ValuationError, ValuationMeta, ValuationOracle};
use crate::matroid::{MatroidOracle, MatroidSpec};

/// A per-bidder coefficient given either once for everyone or as a vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeffs {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Coeffs {
    fn resolve(&self, n: usize, what: &str) -> Result<Vec<f64>, ValuationError> {
        let out = match self {
            Coeffs::Scalar(c) => vec![*c; n],
            Coeffs::Vector(v) if v.len() == n => v.clone(),
            Coeffs::Vector(v) => {
                return Err(malformed(format!("{what} has length {}, expected {n}", v.len())))
            }
        };
        non_negative(&out, what)?;
        Ok(out)
    }
}

/// An `n x n` coefficient matrix, or a scalar filling every entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffMatrix {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl CoeffMatrix {
    fn resolve(&self, n: usize, what: &str) -> Result<Vec<Vec<f64>>, ValuationError> {
        let out = match self {
            CoeffMatrix::Scalar(c) => vec![vec![*c; n]; n],
            CoeffMatrix::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(malformed(format!("{what} must be {n}x{n}")));
                }
                rows.clone()
            }
        };
        for row in &out {
            non_negative(row, what)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregate {
    #[default]
    Sum,
    Max,
}

fn default_exponent() -> f64 {
    1.0
}

fn default_one() -> Coeffs {
    Coeffs::Scalar(1.0)
}

fn default_true() -> bool {
    true
}

/// The concrete valuation families the harness can instantiate.
///
/// Semantics, with `n` bidders and signals `s`:
///
/// - `affine-resale`: `v_i(s) = intercept_i + own_i * s_i + sum_{j != i} cross_ij * s_j`.
/// - `mineral-average`: `v_i(s) = scale_i * (mean_j s_j)^exponent`, `exponent` in `(0, 1]`.
///   Exponent 1 is the average-value model; smaller exponents give a concave
///   common value in the spirit of mineral rights.
/// - `max-signal`: `v_i(s) = scale_i * max_j s_j`.
/// - `weighted-matroid-rank`: `v_i(s) = max_{I independent} sum_{j in I} c_ij * s_j`.
/// - `neighborhood-graph`: sum or max of `c_ij * s_j` over the closed
///   neighbourhood `{i} + adjacency[i]`.
/// - `custom-table`: exact lookup on a declared grid of profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "kebab-case")]
pub enum ValuationFamilySpec {
    AffineResale {
        #[serde(default = "default_one")]
        own: Coeffs,
        #[serde(default = "default_cross")]
        cross: CoeffMatrix,
        #[serde(default)]
        intercept: Option<Coeffs>,
    },
    MineralAverage {
        #[serde(default = "default_one")]
        scale: Coeffs,
        #[serde(default = "default_exponent")]
        exponent: f64,
    },
    MaxSignal {
        #[serde(default = "default_one")]
        scale: Coeffs,
    },
    WeightedMatroidRank {
        matroid: MatroidSpec,
        #[serde(default)]
        coefficients: Option<CoeffMatrix>,
    },
    NeighborhoodGraph {
        adjacency: Vec<Vec<usize>>,
        #[serde(default)]
        aggregate: Aggregate,
        #[serde(default)]
        weights: Option<CoeffMatrix>,
    },
    CustomTable {
        grid: Vec<Vec<f64>>,
        /// Keyed by bidder index written as a string, e.g. `"0"`.
        values: BTreeMap<String, Vec<f64>>,
        #[serde(default)]
        claimed_sos: bool,
        #[serde(default)]
        claimed_d: Option<usize>,
        #[serde(default = "default_true")]
        monotone: bool,
    },
}

fn default_cross() -> CoeffMatrix {
    CoeffMatrix::Scalar(1.0)
}

/// On-disk form: `{"family": "...", "params": {...}, "n": 3}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationSpecFile {
    #[serde(flatten)]
    pub spec: ValuationFamilySpec,
    pub n: usize,
}

impl ValuationSpecFile {
    pub fn build(&self) -> Result<Vec<ValuationOracle>, ValuationError> {
        make_family(&self.spec, self.n)
    }
}

fn malformed(msg: impl Into<String>) -> ValuationError {
    ValuationError::MalformedSpec(msg.into())
}

fn non_negative(values: &[f64], what: &str) -> Result<(), ValuationError> {
    if values.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(malformed(format!("{what} must be finite and non-negative")));
    }
    Ok(())
}

/// Instantiates one oracle per bidder from a family spec.
pub fn make_family(
    spec: &ValuationFamilySpec,
    n: usize,
) -> Result<Vec<ValuationOracle>, ValuationError> {
    if n == 0 {
        return Err(malformed("bidder count must be at least 1"));
    }
    match spec {
        ValuationFamilySpec::AffineResale { own, cross, intercept } => {
            let own = own.resolve(n, "own")?;
            let cross = cross.resolve(n, "cross")?;
            let intercept = match intercept {
                Some(c) => c.resolve(n, "intercept")?,
                None => vec![0.0; n],
            };
            Ok((0..n)
                .map(|i| {
                    let coeffs: Vec<f64> =
                        (0..n).map(|j| if j == i { own[i] } else { cross[i][j] }).collect();
                    let d = coeffs.iter().filter(|c| **c > 0.0).count();
                    let meta = ValuationMeta { claimed_sos: true, claimed_d: Some(d), monotone: true };
                    ValuationOracle::from_evaluator(
                        i,
                        n,
                        Evaluator::Affine { intercept: intercept[i], coeffs },
                        meta,
                    )
                })
                .collect())
        }
        ValuationFamilySpec::MineralAverage { scale, exponent } => {
            if !(*exponent > 0.0 && *exponent <= 1.0) {
                return Err(malformed("mineral-average exponent must lie in (0, 1]"));
            }
            let scale = scale.resolve(n, "scale")?;
            Ok((0..n)
                .map(|i| {
                    let meta = ValuationMeta { claimed_sos: true, claimed_d: Some(n), monotone: true };
                    ValuationOracle::from_evaluator(
                        i,
                        n,
                        Evaluator::MineralAverage { scale: scale[i], exponent: *exponent },
                        meta,
                    )
                })
                .collect())
        }
        ValuationFamilySpec::MaxSignal { scale } => {
            let scale = scale.resolve(n, "scale")?;
            Ok((0..n)
                .map(|i| {
                    let meta = ValuationMeta { claimed_sos: true, claimed_d: Some(1), monotone: true };
                    ValuationOracle::from_evaluator(
                        i,
                        n,
                        Evaluator::MaxSignal { scale: scale[i] },
                        meta,
                    )
                })
                .collect())
        }
        ValuationFamilySpec::WeightedMatroidRank { matroid, coefficients } => {
            let matroid = MatroidOracle::from_spec(matroid)
                .map_err(|e| malformed(format!("signal matroid: {e}")))?;
            if matroid.ground_size() != n {
                return Err(malformed(format!(
                    "signal matroid has {} elements, expected {n}",
                    matroid.ground_size()
                )));
            }
            let coeffs = match coefficients {
                Some(c) => c.resolve(n, "coefficients")?,
                None => vec![vec![1.0; n]; n],
            };
            let rank = matroid.rank_unchecked(&(0..n).collect::<Vec<_>>());
            let matroid = Arc::new(matroid);
            Ok(coeffs
                .into_iter()
                .enumerate()
                .map(|(i, coeffs)| {
                    let meta =
                        ValuationMeta { claimed_sos: false, claimed_d: Some(rank), monotone: true };
                    ValuationOracle::from_evaluator(
                        i,
                        n,
                        Evaluator::MatroidRank { matroid: Arc::clone(&matroid), coeffs },
                        meta,
                    )
                })
                .collect())
        }
        ValuationFamilySpec::NeighborhoodGraph { adjacency, aggregate, weights } => {
            if adjacency.len() != n {
                return Err(malformed(format!("adjacency has {} rows, expected {n}", adjacency.len())));
            }
            let weights = match weights {
                Some(w) => w.resolve(n, "weights")?,
                None => vec![vec![1.0; n]; n],
            };
            let aggregate = match aggregate {
                Aggregate::Sum => AggregateKind::Sum,
                Aggregate::Max => AggregateKind::Max,
            };
            let mut out = Vec::with_capacity(n);
            for (i, neighbours) in adjacency.iter().enumerate() {
                let mut members = vec![i];
                for &j in neighbours {
                    if j >= n {
                        return Err(malformed(format!("neighbour {j} of bidder {i} out of range")));
                    }
                    if !members.contains(&j) {
                        members.push(j);
                    }
                }
                members.sort_unstable();
                let w = members.iter().map(|&j| weights[i][j]).collect();
                let meta = ValuationMeta {
                    claimed_sos: true,
                    claimed_d: Some(members.len()),
                    monotone: true,
                };
                out.push(ValuationOracle::from_evaluator(
                    i,
                    n,
                    Evaluator::Neighborhood { members, weights: w, aggregate },
                    meta,
                ));
            }
            Ok(out)
        }
        ValuationFamilySpec::CustomTable { grid, values, claimed_sos, claimed_d, monotone } => {
            if grid.is_empty() {
                return Err(ValuationError::EmptyGrid);
            }
            for (row, profile) in grid.iter().enumerate() {
                if profile.len() != n {
                    return Err(malformed(format!("grid row {row} has length {}", profile.len())));
                }
                non_negative(profile, "grid signals")?;
            }
            let mut by_bidder = BTreeMap::new();
            for (key, column) in values {
                let i: usize =
                    key.parse().map_err(|_| malformed(format!("bad bidder key {key:?}")))?;
                if i >= n {
                    return Err(malformed(format!("values given for unknown bidder {i}")));
                }
                by_bidder.insert(i, column);
            }
            let mut columns = Vec::with_capacity(n);
            for i in 0..n {
                let column = by_bidder
                    .get(&i)
                    .ok_or_else(|| malformed(format!("missing values for bidder {i}")))?;
                if column.len() != grid.len() {
                    return Err(malformed(format!(
                        "bidder {i} has {} values for {} grid rows",
                        column.len(),
                        grid.len()
                    )));
                }
                non_negative(column, "table values")?;
                columns.push(column.to_vec());
            }
            let table = Arc::new(LookupTable::new(grid, columns));
            let meta =
                ValuationMeta { claimed_sos: *claimed_sos, claimed_d: *claimed_d, monotone: *monotone };
            Ok((0..n)
                .map(|i| ValuationOracle::from_evaluator(i, n, Evaluator::Table(Arc::clone(&table)), meta))
                .collect())
        }
    }
}
