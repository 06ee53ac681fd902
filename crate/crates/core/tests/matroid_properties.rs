mod common;

use common::{random_matroid, random_weights, rng};
use interdep_core::matroid::{
    critical_weight, greedy_max_weight, partition_into, verify_partition_condition, PartitionCondition,
};
use interdep_core::verify::brute_force_max_weight;
use interdep_core::WeightFunction;
use proptest::prelude::*;
use rand::Rng;

fn wf(v: Vec<f64>) -> WeightFunction {
    WeightFunction::new(v).unwrap()
}

/// Tries every assignment of `set` to `t` labelled parts.
fn assignment_exists(m: &interdep_core::MatroidOracle, set: &[usize], t: usize) -> bool {
    let total = t.pow(set.len() as u32);
    (0..total).any(|mut code| {
        let mut parts = vec![Vec::new(); t];
        for &e in set {
            parts[code % t].push(e);
            code /= t;
        }
        parts.iter().all(|p| m.is_independent(p))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn greedy_equals_enumeration(seed in any::<u64>(), n in 1usize..=9) {
        let mut r = rng(seed);
        let m = random_matroid(&mut r, n);
        let w = wf(random_weights(&mut r, n));
        let g = greedy_max_weight(&m, &w);
        let opt = brute_force_max_weight(&m, &w).unwrap();
        prop_assert!(m.is_independent(&g.selected));
        prop_assert!((g.total_weight(&w) - opt.value).abs() <= 1e-9);
    }

    #[test]
    fn raising_own_and_lowering_others_keeps_selection(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let m = random_matroid(&mut r, n);
        let w = random_weights(&mut r, n);
        let g = greedy_max_weight(&m, &wf(w.clone()));
        for &i in &g.selected {
            let mut hat = w.clone();
            for (j, x) in hat.iter_mut().enumerate() {
                if j == i {
                    *x += if r.gen_bool(0.3) { 0.0 } else { r.gen_range(0.0..3.0) };
                } else if r.gen_bool(0.5) {
                    *x *= if r.gen_bool(0.3) { 0.0 } else { r.gen_range(0.0..1.0) };
                }
            }
            prop_assert!(greedy_max_weight(&m, &wf(hat)).contains(i));
        }
    }

    #[test]
    fn rank_is_submodular(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let m = random_matroid(&mut r, n);
        let t: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.6)).collect();
        let s: Vec<usize> = t.iter().copied().filter(|_| r.gen_bool(0.5)).collect();
        let i = r.gen_range(0..n);
        let with = |set: &[usize]| {
            let mut v = set.to_vec();
            if !v.contains(&i) {
                v.push(i);
            }
            m.rank(&v).unwrap()
        };
        let gain_s = with(&s) - m.rank(&s).unwrap();
        let gain_t = with(&t) - m.rank(&t).unwrap();
        prop_assert!(gain_s >= gain_t);
    }

    #[test]
    fn partition_matches_condition_and_assignments(seed in any::<u64>(), n in 1usize..=6, t in 1usize..=3) {
        let mut r = rng(seed);
        let m = random_matroid(&mut r, n);
        let set: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.7)).collect();
        let condition = verify_partition_condition(&m, &set, t).unwrap();
        let brute = assignment_exists(&m, &set, t);
        prop_assert_eq!(condition.passed(), brute);
        match partition_into(&m, &set, t) {
            Ok(p) => {
                prop_assert!(brute);
                prop_assert!(p.validate(&m, &set).is_ok());
                prop_assert!(p.len() <= t);
            }
            Err(_) => {
                prop_assert!(!brute);
                prop_assert!(matches!(condition, PartitionCondition::Violated(_)));
            }
        }
    }

    #[test]
    fn critical_weight_matches_bisection(seed in any::<u64>(), n in 2usize..=7) {
        let mut r = rng(seed);
        let m = random_matroid(&mut r, n);
        let w = wf(random_weights(&mut r, n));
        let i = r.gen_range(0..n);
        let c = critical_weight(&m, i, &w).unwrap();
        if c.threshold.is_infinite() {
            prop_assert!(!greedy_max_weight(&m, &w.with_weight(i, 1e6).unwrap()).contains(i));
            return Ok(());
        }
        let selects = |x: f64| greedy_max_weight(&m, &w.with_weight(i, x).unwrap()).contains(i);
        let (mut lo, mut hi) = (0.0, 20.0);
        if selects(lo) {
            hi = 0.0;
        } else {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if selects(mid) { hi = mid } else { lo = mid }
            }
        }
        prop_assert!((c.threshold - hi).abs() <= 1e-9, "θ = {}, bisection = {}", c.threshold, hi);
        prop_assert_eq!(selects(c.threshold), c.selected_at_threshold);
    }
}
