//! Candidate partitioning: a randomized, truthful mechanism for matroid
//! feasibility constraints and d-critical valuations.
//!
//! Bidder `i` becomes a candidate when greedy selects them under the weights
//! of their own view (real value for `i`, shadow values for everyone else).
//! The candidates are split into at most `d+1` independent sets; one of `d+1`
//! slots is served uniformly at random, with missing parts served as the
//! empty set. Payments are critical weight times serving probability.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matroid::{
    critical_weight, greedy_max_weight, partition_into, verify_partition_condition,
    IndependentSetPartition, MatroidError, MatroidOracle, PartitionCondition, WeightFunction,
};
use crate::valuation::{
    mixed_weights, true_values, ShadowOperator, SignalProfile, ValuationError, ValuationOracle,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CpError {
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Matroid(#[from] MatroidError),
    #[error("{got} valuations for a profile of {expected} signals")]
    BidderCount { expected: usize, got: usize },
    #[error("matroid ground set has {ground} elements but there are {bidders} bidders")]
    GroundSize { ground: usize, bidders: usize },
    #[error("at least one bidder is required")]
    NoBidders,
    #[error(
        "candidates {violator:?} cannot be split into {parts} independent sets; \
         some valuation is more than {d}-critical"
    )]
    CriticalityViolated { violator: Vec<usize>, parts: usize, d: usize },
    #[error("partition produced an invalid cover: {0}")]
    InvalidPartition(String),
}

/// Per-bidder greedy views and the resulting candidate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    /// Candidates, ascending.
    pub candidates: Vec<usize>,
    /// `I_i`, ascending, for every bidder.
    pub greedy_sets: Vec<Vec<usize>>,
    /// `w_i`: real value for `i`, shadows for `j != i`.
    pub weights: Vec<WeightFunction>,
}

impl CandidateSet {
    pub fn contains(&self, i: usize) -> bool {
        self.candidates.binary_search(&i).is_ok()
    }
}

fn check_instance(
    s: &SignalProfile,
    valuations: &[ValuationOracle],
    m: &MatroidOracle,
) -> Result<(), CpError> {
    if s.is_empty() {
        return Err(CpError::NoBidders);
    }
    if valuations.len() != s.len() {
        return Err(CpError::BidderCount { expected: s.len(), got: valuations.len() });
    }
    if m.ground_size() != s.len() {
        return Err(CpError::GroundSize { ground: m.ground_size(), bidders: s.len() });
    }
    Ok(())
}

/// Greedy on each bidder's own view; `i` is a candidate iff `i ∈ I_i`.
pub fn candidate_set(
    s: &SignalProfile,
    valuations: &[ValuationOracle],
    m: &MatroidOracle,
    op: &ShadowOperator,
) -> Result<CandidateSet, CpError> {
    check_instance(s, valuations, m)?;
    let mut candidates = Vec::new();
    let mut greedy_sets = Vec::with_capacity(s.len());
    let mut weights = Vec::with_capacity(s.len());
    for i in 0..s.len() {
        let w = mixed_weights(s, valuations, i, op)?;
        let g = greedy_max_weight(m, &w);
        if g.contains(i) {
            candidates.push(i);
        }
        greedy_sets.push(g.sorted());
        weights.push(w);
    }
    Ok(CandidateSet { candidates, greedy_sets, weights })
}

/// Reported criticality bounds for the heterogeneous variant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeteroDReport {
    pub reported: Vec<usize>,
    /// `max_{j != i} d̂_j`, with the empty maximum taken as 0.
    pub dbar: Vec<usize>,
    /// Lowest index among the maximal reports.
    pub top: usize,
}

impl HeteroDReport {
    pub fn new(reported: Vec<usize>) -> Result<Self, CpError> {
        if reported.is_empty() {
            return Err(CpError::NoBidders);
        }
        let top = (0..reported.len())
            .max_by(|&a, &b| reported[a].cmp(&reported[b]).then(b.cmp(&a)))
            .expect("non-empty");
        let dbar = (0..reported.len())
            .map(|i| {
                reported.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &d)| d).max().unwrap_or(0)
            })
            .collect();
        Ok(Self { reported, dbar, top })
    }

    /// Slots used in the tails branch: the top report plus one. This equals
    /// `dbar[i] + 1` for every `i != top`, so no other bidder's report moves it.
    pub fn tails_slots(&self) -> usize {
        self.reported[self.top] + 1
    }
}

/// One branch of the serving lottery: served with `probability`, then one
/// slot drawn uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServingBranch {
    pub probability: Ratio<u64>,
    /// Exactly as many slots as the branch draws from; padding slots are empty.
    pub slots: Vec<Vec<usize>>,
}

/// Everything about a CP run except the random draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpPlan {
    pub values: Vec<f64>,
    pub candidates: CandidateSet,
    /// Partition of the candidates that share slots (all candidates, or all
    /// but the top reporter in the heterogeneous variant).
    pub partition: IndependentSetPartition,
    pub branches: Vec<ServingBranch>,
    /// Probability bidder `i` would be served if they were a candidate.
    pub step_heights: Vec<Ratio<u64>>,
    /// Actual serving probability: the step height for candidates, else 0.
    pub probabilities: Vec<Ratio<u64>>,
    /// Critical weight of each candidate in their own view.
    pub thresholds: Vec<Option<f64>>,
    pub payments: Vec<f64>,
    pub hetero: Option<HeteroDReport>,
}

fn uniform_branch(probability: Ratio<u64>, parts: &[Vec<usize>], slots: usize) -> ServingBranch {
    let mut all = parts.to_vec();
    all.resize(slots, Vec::new());
    ServingBranch { probability, slots: all }
}

fn split(
    m: &MatroidOracle,
    set: &[usize],
    parts: usize,
    d: usize,
) -> Result<IndependentSetPartition, CpError> {
    if let PartitionCondition::Violated(violator) = verify_partition_condition(m, set, parts)? {
        log::error!("partition condition fails on {violator:?} for {parts} parts");
        return Err(CpError::CriticalityViolated { violator, parts, d });
    }
    let partition = partition_into(m, set, parts).map_err(|e| match e {
        MatroidError::PartitionConditionViolated { violator, t } => {
            CpError::CriticalityViolated { violator, parts: t, d }
        }
        other => CpError::Matroid(other),
    })?;
    partition.validate(m, set).map_err(CpError::InvalidPartition)?;
    Ok(partition)
}

fn warn_on_claimed_d(valuations: &[ValuationOracle], d: usize) {
    for v in valuations {
        match v.meta().claimed_d {
            Some(c) if c <= d => {}
            Some(c) => log::warn!("bidder {} claims d = {c} above the mechanism's d = {d}", v.bidder()),
            None => log::warn!("bidder {} declares no criticality bound", v.bidder()),
        }
    }
}

impl CpPlan {
    fn finish(
        values: Vec<f64>,
        candidates: CandidateSet,
        partition: IndependentSetPartition,
        branches: Vec<ServingBranch>,
        step_heights: Vec<Ratio<u64>>,
        m: &MatroidOracle,
        hetero: Option<HeteroDReport>,
    ) -> Result<Self, CpError> {
        let n = values.len();
        let mut probabilities = vec![Ratio::zero(); n];
        let mut thresholds = vec![None; n];
        let mut payments = vec![0.0; n];
        for &i in &candidates.candidates {
            probabilities[i] = step_heights[i];
            let theta = critical_weight(m, i, &candidates.weights[i])?.threshold;
            thresholds[i] = Some(theta);
            // A candidate inside the tie band may sit a hair below θ; never
            // charge more than the reported value.
            payments[i] = theta.min(values[i]) * ratio_to_f64(step_heights[i]);
        }
        Ok(Self {
            values,
            candidates,
            partition,
            branches,
            step_heights,
            probabilities,
            thresholds,
            payments,
            hetero,
        })
    }

    /// Draws one served set.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let branch = if self.branches.len() == 1 {
            &self.branches[0]
        } else {
            let den = self.branches.iter().fold(1u64, |acc, b| lcm(acc, *b.probability.denom()));
            let mut ticket = rng.gen_range(0..den);
            let mut chosen = self.branches.last().expect("at least one branch");
            for b in &self.branches {
                let mass = b.probability.numer() * (den / b.probability.denom());
                if ticket < mass {
                    chosen = b;
                    break;
                }
                ticket -= mass;
            }
            chosen
        };
        let slot = rng.gen_range(0..branch.slots.len());
        branch.slots[slot].clone()
    }

    /// `sum_i P(i served) v_i` in floating point.
    pub fn expected_welfare(&self) -> f64 {
        self.values.iter().zip(&self.probabilities).map(|(v, p)| v * ratio_to_f64(*p)).sum()
    }

    /// `sum_i P(i served) v_i` exactly, treating each value as the rational
    /// number its float represents.
    pub fn expected_welfare_exact(&self) -> BigRational {
        self.values
            .iter()
            .zip(&self.probabilities)
            .map(|(&v, p)| exact(v) * BigRational::new(BigInt::from(*p.numer()), BigInt::from(*p.denom())))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// Probability of each bidder being served, recomputed from the lottery.
    pub fn lottery_marginals(&self) -> Vec<Ratio<u64>> {
        let mut out = vec![Ratio::zero(); self.values.len()];
        for b in &self.branches {
            let per_slot = b.probability / Ratio::from_integer(b.slots.len() as u64);
            for slot in &b.slots {
                for &i in slot {
                    out[i] += per_slot;
                }
            }
        }
        out
    }

    pub fn utilities(&self) -> Vec<f64> {
        (0..self.values.len())
            .map(|i| ratio_to_f64(self.probabilities[i]) * self.values[i] - self.payments[i])
            .collect()
    }
}

/// Exact rational value of a finite float.
pub fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite value")
}

pub fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn lcm(a: u64, b: u64) -> u64 {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    a / gcd(a, b) * b
}

/// Outcome of a run: the plan plus the realised draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpOutcome {
    pub plan: CpPlan,
    pub served: Vec<usize>,
    pub seed: u64,
}

/// Flat JSON export of an outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpExport {
    pub candidates: Vec<usize>,
    pub partition: Vec<Vec<usize>>,
    /// Serving probabilities as reduced fractions, e.g. `"1/2"`.
    pub probabilities: Vec<String>,
    pub payments: Vec<f64>,
    pub served: Vec<usize>,
    pub seed: u64,
}

impl CpOutcome {
    pub fn export(&self) -> CpExport {
        CpExport {
            candidates: self.plan.candidates.candidates.clone(),
            partition: self.plan.partition.parts.clone(),
            probabilities: self.plan.probabilities.iter().map(|p| p.to_string()).collect(),
            payments: self.plan.payments.clone(),
            served: self.served.clone(),
            seed: self.seed,
        }
    }
}

/// Mechanism configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CpMechanism {
    pub shadow: ShadowOperator,
}

impl CpMechanism {
    /// Deterministic part of the mechanism for criticality bound `d`.
    pub fn plan(
        &self,
        s: &SignalProfile,
        valuations: &[ValuationOracle],
        m: &MatroidOracle,
        d: usize,
    ) -> Result<CpPlan, CpError> {
        warn_on_claimed_d(valuations, d);
        let candidates = candidate_set(s, valuations, m, &self.shadow)?;
        let values = true_values(s, valuations)?;
        let slots = d + 1;
        let partition = split(m, &candidates.candidates, slots, d)?;
        let branch = uniform_branch(Ratio::one(), &partition.parts, slots);
        let heights = vec![Ratio::new(1, slots as u64); s.len()];
        CpPlan::finish(values, candidates, partition, vec![branch], heights, m, None)
    }

    /// Deterministic part of the heterogeneous variant.
    ///
    /// A fair coin picks a branch. Heads serves the top reporter `ĩ` alone,
    /// if they are a candidate, in one of `dbar[ĩ] + 1` slots. Tails drops
    /// `ĩ` and splits the remaining candidates into `d̂_ĩ + 1` slots.
    pub fn plan_hetero(
        &self,
        s: &SignalProfile,
        valuations: &[ValuationOracle],
        m: &MatroidOracle,
        reports: &HeteroDReport,
    ) -> Result<CpPlan, CpError> {
        if reports.reported.len() != s.len() {
            return Err(CpError::BidderCount { expected: s.len(), got: reports.reported.len() });
        }
        let top = reports.top;
        let candidates = candidate_set(s, valuations, m, &self.shadow)?;
        let values = true_values(s, valuations)?;
        let half = Ratio::new(1, 2);

        let heads_slots = reports.dbar[top] + 1;
        let heads_parts: Vec<Vec<usize>> =
            if candidates.contains(top) { vec![vec![top]] } else { Vec::new() };
        let heads = uniform_branch(half, &heads_parts, heads_slots);

        let tails_slots = reports.tails_slots();
        let rest: Vec<usize> = candidates.candidates.iter().copied().filter(|&i| i != top).collect();
        let partition = split(m, &rest, tails_slots, tails_slots - 1)?;
        let tails = uniform_branch(half, &partition.parts, tails_slots);

        let heights = (0..s.len())
            .map(|i| {
                let slots = if i == top { heads_slots } else { tails_slots };
                half / Ratio::from_integer(slots as u64)
            })
            .collect();
        CpPlan::finish(
            values,
            candidates,
            partition,
            vec![heads, tails],
            heights,
            m,
            Some(reports.clone()),
        )
    }

    pub fn run(
        &self,
        s: &SignalProfile,
        valuations: &[ValuationOracle],
        m: &MatroidOracle,
        d: usize,
        seed: u64,
    ) -> Result<CpOutcome, CpError> {
        let plan = self.plan(s, valuations, m, d)?;
        let served = plan.sample(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok(CpOutcome { plan, served, seed })
    }

    pub fn run_hetero(
        &self,
        s: &SignalProfile,
        valuations: &[ValuationOracle],
        m: &MatroidOracle,
        reports: &HeteroDReport,
        seed: u64,
    ) -> Result<CpOutcome, CpError> {
        let plan = self.plan_hetero(s, valuations, m, reports)?;
        let served = plan.sample(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok(CpOutcome { plan, served, seed })
    }
}

/// Runs the mechanism with the default (zero-out) shadow operator.
pub fn run_cp(
    s: &SignalProfile,
    valuations: &[ValuationOracle],
    m: &MatroidOracle,
    d: usize,
    seed: u64,
) -> Result<CpOutcome, CpError> {
    CpMechanism::default().run(s, valuations, m, d, seed)
}

pub fn run_cp_hetero(
    s: &SignalProfile,
    valuations: &[ValuationOracle],
    m: &MatroidOracle,
    reports: &HeteroDReport,
    seed: u64,
) -> Result<CpOutcome, CpError> {
    CpMechanism::default().run_hetero(s, valuations, m, reports, seed)
}

/// Threshold payment of bidder `i`: `θ/(d+1)` for candidates, else 0.
pub fn cp_payment(
    i: usize,
    s: &SignalProfile,
    valuations: &[ValuationOracle],
    m: &MatroidOracle,
    d: usize,
) -> Result<f64, CpError> {
    check_instance(s, valuations, m)?;
    let w = mixed_weights(s, valuations, i, &ShadowOperator::ZeroOut)?;
    if !greedy_max_weight(m, &w).contains(i) {
        return Ok(0.0);
    }
    let theta = critical_weight(m, i, &w)?.threshold;
    Ok(theta.min(w.get(i)) / (d + 1) as f64)
}
