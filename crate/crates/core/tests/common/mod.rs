#![allow(dead_code)]

use interdep_core::matroid::MatroidOracle;
use interdep_core::valuation::{make_family, Coeffs, CoeffMatrix, ValuationFamilySpec};
use interdep_core::{SignalProfile, ValuationOracle};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform, partition or graphic matroid on `n` elements.
pub fn random_matroid(rng: &mut ChaCha8Rng, n: usize) -> MatroidOracle {
    match rng.gen_range(0..3) {
        0 => MatroidOracle::uniform(n, rng.gen_range(1..=n)),
        1 => {
            let blocks = rng.gen_range(1..=n);
            let block_of: Vec<usize> = (0..n).map(|_| rng.gen_range(0..blocks)).collect();
            let caps = (0..blocks).map(|_| rng.gen_range(1..=2)).collect();
            MatroidOracle::partition(block_of, caps).unwrap()
        }
        _ => {
            let vertices = rng.gen_range(2..=5);
            let edges =
                (0..n).map(|_| (rng.gen_range(0..vertices), rng.gen_range(0..vertices))).collect();
            MatroidOracle::graphic(vertices, edges).unwrap()
        }
    }
}

/// Weights drawn from a small integer set (to force ties) or continuously.
pub fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    if rng.gen_bool(0.5) {
        (0..n).map(|_| rng.gen_range(0..5) as f64).collect()
    } else {
        (0..n).map(|_| rng.gen_range(0.0..10.0)).collect()
    }
}

pub fn random_signals(rng: &mut ChaCha8Rng, n: usize) -> SignalProfile {
    let s = (0..n)
        .map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.0..1.0) })
        .collect();
    SignalProfile::new(s).unwrap()
}

/// A monotone SOS family: affine resale, max-signal or mineral average.
pub fn random_sos_family(rng: &mut ChaCha8Rng, n: usize) -> ValuationFamilySpec {
    match rng.gen_range(0..3) {
        0 => ValuationFamilySpec::AffineResale {
            own: Coeffs::Vector((0..n).map(|_| rng.gen_range(0.1..3.0)).collect()),
            cross: CoeffMatrix::Matrix(
                (0..n)
                    .map(|_| {
                        (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) }).collect()
                    })
                    .collect(),
            ),
            intercept: Some(Coeffs::Vector((0..n).map(|_| rng.gen_range(0.0..0.5)).collect())),
        },
        1 => ValuationFamilySpec::MaxSignal {
            scale: Coeffs::Vector((0..n).map(|_| rng.gen_range(0.1..3.0)).collect()),
        },
        _ => ValuationFamilySpec::MineralAverage {
            scale: Coeffs::Vector((0..n).map(|_| rng.gen_range(0.1..3.0)).collect()),
            exponent: rng.gen_range(0.2..=1.0),
        },
    }
}

pub fn build(spec: &ValuationFamilySpec, n: usize) -> Vec<ValuationOracle> {
    make_family(spec, n).unwrap()
}

pub fn shuffled(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    v
}
