//! Partitioning a set into few independent sets (matroid union).
//!
//! A set `S` splits into `t` independent sets iff `|A| <= t * rank(A)` for all
//! `A ⊆ S`. [`partition_into`] builds the split by augmenting paths in the
//! exchange graph; [`verify_partition_condition`] checks the rank condition
//! directly and produces the violating subset when the split cannot exist.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{validate_subset, MatroidError, MatroidOracle};

/// Largest set checked exhaustively by [`verify_partition_condition`].
pub const EXHAUSTIVE_LIMIT: usize = 20;

const SAMPLED_CHECKS: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionCondition {
    Pass,
    Violated(Vec<usize>),
}

impl PartitionCondition {
    pub fn passed(&self) -> bool {
        matches!(self, PartitionCondition::Pass)
    }
}

/// Disjoint independent sets covering a given set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependentSetPartition {
    /// Non-empty parts, each sorted ascending.
    pub parts: Vec<Vec<usize>>,
    /// Maximum number of parts that was allowed.
    pub bound: usize,
}

impl IndependentSetPartition {
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Index of the part holding `e`.
    pub fn part_of(&self, e: usize) -> Option<usize> {
        self.parts.iter().position(|p| p.contains(&e))
    }

    /// Checks independence of each part, pairwise disjointness, exact cover of
    /// `cover` and the part-count bound.
    pub fn validate(&self, m: &MatroidOracle, cover: &[usize]) -> Result<(), String> {
        if self.parts.len() > self.bound {
            return Err(format!("{} parts exceed bound {}", self.parts.len(), self.bound));
        }
        let mut seen = HashSet::new();
        for part in &self.parts {
            if !m.is_independent(part) {
                return Err(format!("part {part:?} is dependent"));
            }
            for &e in part {
                if !seen.insert(e) {
                    return Err(format!("element {e} in two parts"));
                }
            }
        }
        let target: HashSet<usize> = cover.iter().copied().collect();
        if seen != target {
            return Err(format!("parts cover {seen:?}, expected {target:?}"));
        }
        Ok(())
    }
}

fn subset_from_bits(sorted: &[usize], bits: u64) -> Vec<usize> {
    sorted.iter().enumerate().filter(|(b, _)| bits >> b & 1 == 1).map(|(_, &e)| e).collect()
}

fn violates(m: &MatroidOracle, subset: &[usize], t: usize) -> bool {
    subset.len() > t * m.rank_unchecked(subset)
}

/// Checks `|A| <= t * rank(A)` for subsets `A ⊆ S`.
///
/// Up to [`EXHAUSTIVE_LIMIT`] elements every subset is checked, in binary-counter
/// order over the ascending elements of `S` (bit `b` selects the `b`-th
/// smallest); the first violator in that order is returned. Larger sets fall
/// back to [`verify_partition_condition_sampled`] with a fixed seed.
pub fn verify_partition_condition(
    m: &MatroidOracle,
    s: &[usize],
    t: usize,
) -> Result<PartitionCondition, MatroidError> {
    validate_subset(m.ground_size(), s)?;
    if t == 0 {
        return Err(MatroidError::InvalidSpec("t must be positive".into()));
    }
    if s.len() > EXHAUSTIVE_LIMIT {
        return verify_partition_condition_sampled(m, s, t, SAMPLED_CHECKS, 0);
    }
    let mut sorted = s.to_vec();
    sorted.sort_unstable();
    for bits in 1u64..1 << sorted.len() {
        let subset = subset_from_bits(&sorted, bits);
        if violates(m, &subset, t) {
            return Ok(PartitionCondition::Violated(subset));
        }
    }
    Ok(PartitionCondition::Pass)
}

/// Random-subset version of [`verify_partition_condition`]; `S` itself is
/// always checked first. A pass is evidence, not proof.
pub fn verify_partition_condition_sampled(
    m: &MatroidOracle,
    s: &[usize],
    t: usize,
    samples: usize,
    seed: u64,
) -> Result<PartitionCondition, MatroidError> {
    validate_subset(m.ground_size(), s)?;
    if t == 0 {
        return Err(MatroidError::InvalidSpec("t must be positive".into()));
    }
    let mut sorted = s.to_vec();
    sorted.sort_unstable();
    if violates(m, &sorted, t) {
        return Ok(PartitionCondition::Violated(sorted));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let subset: Vec<usize> = sorted.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if violates(m, &subset, t) {
            return Ok(PartitionCondition::Violated(subset));
        }
    }
    Ok(PartitionCondition::Pass)
}

/// Splits `s` into at most `t` disjoint independent sets.
///
/// Elements are inserted in ascending order. Each insertion runs a
/// breadth-first search for a shortest augmenting path: an element may enter
/// part `r` directly when `I_r + e` is independent, or displace `f ∈ I_r` when
/// `I_r + e - f` is independent, in which case `f` must be re-homed. Parts are
/// tried in ascending order and displaced elements in ascending order, so the
/// output is deterministic.
pub fn partition_into(
    m: &MatroidOracle,
    s: &[usize],
    t: usize,
) -> Result<IndependentSetPartition, MatroidError> {
    validate_subset(m.ground_size(), s)?;
    if t == 0 {
        return Err(MatroidError::InvalidSpec("t must be positive".into()));
    }
    let mut sorted = s.to_vec();
    sorted.sort_unstable();

    let mut parts: Vec<Vec<usize>> = vec![Vec::new(); t];
    let mut owner: HashMap<usize, usize> = HashMap::new();

    for &x in &sorted {
        match augmenting_path(m, &parts, &owner, x) {
            Ok(moves) => apply_moves(&mut parts, &mut owner, &moves),
            Err(reachable) => return Err(failure_certificate(m, &sorted, t, reachable)),
        }
        if let Some(bad) = parts.iter().find(|p| !m.is_independent(p)) {
            return Err(MatroidError::CorruptOracle(format!(
                "augmentation produced dependent part {bad:?}"
            )));
        }
    }

    let parts: Vec<Vec<usize>> = parts
        .into_iter()
        .filter(|p| !p.is_empty())
        .map(|mut p| {
            p.sort_unstable();
            p
        })
        .collect();
    Ok(IndependentSetPartition { parts, bound: t })
}

/// A single relocation: `element` moves to part `to`.
struct Move {
    element: usize,
    to: usize,
}

/// BFS over the exchange graph from `x`. On failure returns the set of
/// elements reached, which violates the rank condition.
fn augmenting_path(
    m: &MatroidOracle,
    parts: &[Vec<usize>],
    owner: &HashMap<usize, usize>,
    x: usize,
) -> Result<Vec<Move>, Vec<usize>> {
    let t = parts.len();
    let mut parent: HashMap<usize, (usize, usize)> = HashMap::new();
    let mut visited: HashSet<usize> = HashSet::from([x]);
    let mut queue = VecDeque::from([x]);
    let mut probe = Vec::new();

    while let Some(e) = queue.pop_front() {
        let home = owner.get(&e).copied();
        let sink = (0..t).filter(|&r| Some(r) != home).find(|&r| {
            probe.clear();
            probe.extend_from_slice(&parts[r]);
            probe.push(e);
            m.is_independent(&probe)
        });
        if let Some(r) = sink {
            let mut moves = vec![Move { element: e, to: r }];
            let mut cur = e;
            while let Some(&(prev, part)) = parent.get(&cur) {
                moves.push(Move { element: prev, to: part });
                cur = prev;
            }
            return Ok(moves);
        }
        for r in (0..t).filter(|&r| Some(r) != home) {
            let mut members = parts[r].clone();
            members.sort_unstable();
            for f in members {
                if visited.contains(&f) {
                    continue;
                }
                probe.clear();
                probe.extend(parts[r].iter().copied().filter(|&g| g != f));
                probe.push(e);
                if m.is_independent(&probe) {
                    visited.insert(f);
                    parent.insert(f, (e, r));
                    queue.push_back(f);
                }
            }
        }
    }
    let mut reached: Vec<usize> = visited.into_iter().collect();
    reached.sort_unstable();
    Err(reached)
}

fn apply_moves(parts: &mut [Vec<usize>], owner: &mut HashMap<usize, usize>, moves: &[Move]) {
    for mv in moves {
        if let Some(from) = owner.get(&mv.element) {
            parts[*from].retain(|&g| g != mv.element);
        }
    }
    for mv in moves {
        parts[mv.to].push(mv.element);
        owner.insert(mv.element, mv.to);
    }
}

fn failure_certificate(
    m: &MatroidOracle,
    s: &[usize],
    t: usize,
    reachable: Vec<usize>,
) -> MatroidError {
    if s.len() <= EXHAUSTIVE_LIMIT {
        if let Ok(PartitionCondition::Violated(violator)) = verify_partition_condition(m, s, t) {
            return MatroidError::PartitionConditionViolated { violator, t };
        }
    }
    if violates(m, &reachable, t) {
        return MatroidError::PartitionConditionViolated { violator: reachable, t };
    }
    MatroidError::CorruptOracle(format!(
        "no augmenting path for a set satisfying the rank condition (reached {reachable:?})"
    ))
}
