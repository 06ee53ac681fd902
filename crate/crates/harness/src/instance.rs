//! Deterministic instance generation.

use interdep_core::matroid::{MatroidError, MatroidSpec};
use interdep_core::valuation::{make_family, CoeffMatrix, Coeffs, ValuationError};
use interdep_core::{MatroidOracle, SignalProfile, ValuationFamilySpec, ValuationOracle};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ExperimentConfig, MatroidSource, SignalDistribution, ValuationSource};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Matroid(#[from] MatroidError),
    #[error("matroid has {ground} elements but the instance has {n} bidders")]
    Dimension { ground: usize, n: usize },
}

pub struct Instance {
    pub trial: usize,
    pub signals: SignalProfile,
    pub family: ValuationFamilySpec,
    pub valuations: Vec<ValuationOracle>,
    pub matroid_spec: Option<MatroidSpec>,
    pub matroid: Option<MatroidOracle>,
}

#[derive(Serialize)]
struct HashInput<'a> {
    family: &'a ValuationFamilySpec,
    matroid: &'a Option<MatroidSpec>,
    signals: &'a SignalProfile,
}

impl Instance {
    /// First 16 hex digits of the SHA-256 of the instance's JSON description.
    pub fn hash(&self) -> String {
        let input = HashInput { family: &self.family, matroid: &self.matroid_spec, signals: &self.signals };
        let bytes = serde_json::to_vec(&input).expect("instance serialises");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }

    pub fn n(&self) -> usize {
        self.signals.len()
    }

    /// Largest criticality bound any bidder declares (0 when none do).
    pub fn max_claimed_d(&self) -> usize {
        self.valuations.iter().filter_map(|v| v.meta().claimed_d).max().unwrap_or(0)
    }
}

/// Independent stream per trial, so results never depend on scheduling.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

pub fn random_sos_spec<R: Rng>(rng: &mut R, n: usize) -> ValuationFamilySpec {
    let scales = |rng: &mut R| Coeffs::Vector((0..n).map(|_| rng.gen_range(0.1..3.0)).collect());
    match rng.gen_range(0..3) {
        0 => {
            let own = scales(rng);
            let cross = (0..n)
                .map(|_| (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) }).collect())
                .collect();
            let intercept = Coeffs::Vector((0..n).map(|_| rng.gen_range(0.0..0.5)).collect());
            ValuationFamilySpec::AffineResale { own, cross: CoeffMatrix::Matrix(cross), intercept: Some(intercept) }
        }
        1 => ValuationFamilySpec::MaxSignal { scale: scales(rng) },
        _ => ValuationFamilySpec::MineralAverage { scale: scales(rng), exponent: rng.gen_range(0.2..=1.0) },
    }
}

/// Max-signal (d = 1) or weighted rank over `uniform(n, d)` with `d <= max_d`.
pub fn random_critical_spec<R: Rng>(rng: &mut R, n: usize, max_d: usize) -> ValuationFamilySpec {
    let max_d = max_d.clamp(1, n);
    if max_d == 1 || rng.gen_bool(0.5) {
        ValuationFamilySpec::MaxSignal {
            scale: Coeffs::Vector((0..n).map(|_| rng.gen_range(0.5..2.0)).collect()),
        }
    } else {
        let k = rng.gen_range(1..=max_d);
        let coefficients = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0.2..1.5)).collect()).collect();
        ValuationFamilySpec::WeightedMatroidRank {
            matroid: MatroidSpec::Uniform { n, k },
            coefficients: Some(CoeffMatrix::Matrix(coefficients)),
        }
    }
}

/// Uniform, partition or graphic matroid on `n` elements.
pub fn random_matroid_spec<R: Rng>(rng: &mut R, n: usize) -> MatroidSpec {
    match rng.gen_range(0..3) {
        0 => MatroidSpec::Uniform { n, k: rng.gen_range(1..=n) },
        1 => {
            let count = rng.gen_range(1..=n);
            let mut blocks = vec![Vec::new(); count];
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            // Every block gets one element first, so none is empty.
            for (k, e) in order.into_iter().enumerate() {
                let b = if k < count { k } else { rng.gen_range(0..count) };
                blocks[b].push(e);
            }
            for b in &mut blocks {
                b.sort_unstable();
            }
            let capacities = blocks.iter().map(|b| rng.gen_range(1..=b.len().min(2))).collect();
            MatroidSpec::Partition { blocks, capacities }
        }
        _ => {
            let vertices = rng.gen_range(2..=(n + 1).min(6));
            let edges = (0..n)
                .map(|_| {
                    let a = rng.gen_range(0..vertices);
                    let mut b = rng.gen_range(0..vertices - 1);
                    if b >= a {
                        b += 1;
                    }
                    [a.min(b), a.max(b)]
                })
                .collect();
            MatroidSpec::Graphic { vertices, edges }
        }
    }
}

pub fn draw_signals<R: Rng>(rng: &mut R, dist: &SignalDistribution, n: usize) -> SignalProfile {
    let s = (0..n)
        .map(|_| match dist {
            SignalDistribution::Uniform { low, high } => {
                if high > low { rng.gen_range(*low..*high) } else { *low }
            }
            SignalDistribution::Exponential { rate } => -(1.0 - rng.gen::<f64>()).ln() / rate,
            SignalDistribution::Grid { points } => *points.choose(rng).expect("non-empty grid"),
        })
        .collect();
    SignalProfile::new(s).expect("distributions yield valid signals")
}

/// Builds trial `trial` of `cfg`: family, then matroid, then signals, all
/// from the trial's own stream.
pub fn generate_instance(cfg: &ExperimentConfig, trial: usize) -> Result<Instance, InstanceError> {
    let n = cfg.n;
    let mut rng = trial_rng(cfg.seed, trial);
    let family = match &cfg.valuation {
        ValuationSource::Fixed { spec } => spec.clone(),
        ValuationSource::RandomSos => random_sos_spec(&mut rng, n),
        ValuationSource::RandomCritical { max_d } => random_critical_spec(&mut rng, n, *max_d),
    };
    let matroid_spec = cfg.matroid.as_ref().map(|m| match m {
        MatroidSource::Fixed { spec } => spec.clone(),
        MatroidSource::Random => random_matroid_spec(&mut rng, n),
    });
    let signals = draw_signals(&mut rng, &cfg.signals, n);
    let valuations = make_family(&family, n)?;
    let matroid = match &matroid_spec {
        Some(spec) => {
            let m = MatroidOracle::from_spec(spec)?;
            if m.ground_size() != n {
                return Err(InstanceError::Dimension { ground: m.ground_size(), n });
            }
            Some(m)
        }
        None => None,
    };
    Ok(Instance { trial, signals, family, valuations, matroid_spec, matroid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn cfg(extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"{{"schema_version": 1, "mechanism": "eating", "n": 4,
                "valuation": {{"source": "fixed", "spec": {{"family": "max-signal", "params": {{"scale": 1}}}}}},
                "trials": 3, "seed": 42 {extra}}}"#
        );
        ExperimentConfig::from_json(&text).unwrap()
    }

    #[test]
    fn same_seed_same_instance() {
        let c = cfg("");
        let a = generate_instance(&c, 0).unwrap();
        let b = generate_instance(&c, 0).unwrap();
        assert_eq!(a.signals, b.signals);
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), generate_instance(&c, 1).unwrap().hash());
    }

    #[test]
    fn uniform_max_signal_is_one_critical() {
        let inst = generate_instance(&cfg(""), 2).unwrap();
        assert_eq!(inst.n(), 4);
        assert!(inst.signals.as_slice().iter().all(|&s| (0.0..1.0).contains(&s)));
        assert_eq!(inst.max_claimed_d(), 1);
    }

    #[test]
    fn grid_with_zero_produces_zero_signals() {
        let c = cfg(r#", "signals": {"distribution": "grid", "points": [0, 1]}"#);
        let zeros: usize = (0..20)
            .map(|t| generate_instance(&c, t).unwrap().signals.as_slice().iter().filter(|&&s| s == 0.0).count())
            .sum();
        assert!(zeros > 0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let c = cfg(r#", "matroid": {"source": "fixed", "spec": {"kind": "uniform", "params": {"n": 3, "k": 1}}}"#);
        assert!(matches!(generate_instance(&c, 0), Err(InstanceError::Dimension { .. })));
    }

    #[test]
    fn random_matroids_are_well_formed() {
        let mut rng = trial_rng(7, 0);
        for n in 1..=9 {
            for _ in 0..20 {
                let spec = random_matroid_spec(&mut rng, n);
                assert_eq!(MatroidOracle::from_spec(&spec).unwrap().ground_size(), n);
            }
        }
    }
}
