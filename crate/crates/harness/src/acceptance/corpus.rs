//! Explicit matroid corpora for the exhaustive matroid criteria.

use interdep_core::matroid::MatroidError;
use interdep_core::MatroidOracle;
use rand::Rng;

use crate::instance::random_matroid_spec;

/// Largest ground set for which every labelled matroid is enumerated.
pub const COMPLETE_LIMIT: usize = 6;

/// Every matroid on `0..n`, each given by its family of bases as bitmasks.
///
/// For each rank `r`, every non-empty family of `r`-subsets is tested
/// against the basis exchange axiom.
pub fn all_basis_families(n: usize) -> Vec<Vec<u32>> {
    assert!(n <= COMPLETE_LIMIT, "complete enumeration is limited to n <= {COMPLETE_LIMIT}");
    let mut out = Vec::new();
    for r in 0..=n as u32 {
        let subsets: Vec<u32> = (0u32..1 << n).filter(|b| b.count_ones() == r).collect();
        let mut index = vec![usize::MAX; 1 << n];
        for (k, &b) in subsets.iter().enumerate() {
            index[b as usize] = k;
        }
        let k = subsets.len();
        for family in 1u64..1 << k {
            let member = |b: u32| family >> index[b as usize] & 1 == 1;
            let bases: Vec<u32> = (0..k).filter(|&j| family >> j & 1 == 1).map(|j| subsets[j]).collect();
            if exchange_holds(&bases, &member) {
                out.push(bases);
            }
        }
    }
    out
}

fn exchange_holds(bases: &[u32], member: &impl Fn(u32) -> bool) -> bool {
    for &b1 in bases {
        for &b2 in bases {
            let mut only1 = b1 & !b2;
            while only1 != 0 {
                let x = only1 & only1.wrapping_neg();
                only1 ^= x;
                let mut only2 = b2 & !b1;
                let mut found = false;
                while only2 != 0 {
                    let y = only2 & only2.wrapping_neg();
                    only2 ^= y;
                    if member((b1 ^ x) | y) {
                        found = true;
                        break;
                    }
                }
                if !found {
                    return false;
                }
            }
        }
    }
    true
}

pub fn from_bases(n: usize, bases: &[u32]) -> Result<MatroidOracle, MatroidError> {
    let independent = (0u32..1 << n)
        .filter(|&s| bases.iter().any(|&b| s & !b == 0))
        .map(|s| (0..n).filter(|&e| s >> e & 1 == 1).collect())
        .collect();
    MatroidOracle::explicit(n, independent)
}

/// All matroids with `n <= limit` (enumerated completely up to
/// [`COMPLETE_LIMIT`]), plus `per_size` seeded explicit matroids for each
/// larger ground set up to `max_n`.
pub fn corpus<R: Rng>(rng: &mut R, max_n: usize, per_size: usize) -> Result<Vec<MatroidOracle>, MatroidError> {
    let mut out = Vec::new();
    for n in 0..=max_n.min(COMPLETE_LIMIT) {
        for bases in all_basis_families(n) {
            out.push(from_bases(n, &bases)?);
        }
    }
    for n in COMPLETE_LIMIT + 1..=max_n {
        for _ in 0..per_size {
            out.push(MatroidOracle::from_spec(&random_matroid_spec(rng, n))?.to_explicit()?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labelled_matroid_counts() {
        // Number of matroids on a labelled n-set.
        let expected = [1, 2, 5, 16, 68, 406, 3807];
        for (n, &count) in expected.iter().enumerate() {
            assert_eq!(all_basis_families(n).len(), count, "n = {n}");
        }
    }

    #[test]
    fn families_build_valid_oracles() {
        for bases in all_basis_families(4) {
            let m = from_bases(4, &bases).unwrap();
            assert_eq!(m.full_rank(), bases[0].count_ones() as usize);
        }
    }
}
