mod common;

use common::{random_sos_family, rng};
use interdep_core::matroid::MatroidSpec;
use interdep_core::valuation::{
    check_self_bounding, check_sos, criticality_at, make_family, product_grid, shadow_value, Aggregate,
    ValuationFamilySpec,
};
use interdep_core::ShadowOperator;
use proptest::prelude::*;
use rand::Rng;

fn grid(n: usize) -> Vec<interdep_core::SignalProfile> {
    product_grid(&vec![vec![0.0, 0.5, 1.0]; n])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn sos_families_pass_grid_checks(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let spec = random_sos_family(&mut r, n);
        let vals = make_family(&spec, n).unwrap();
        let g = grid(n);
        let op = ShadowOperator::ZeroOut;
        for v in &vals {
            prop_assert!(v.meta().claimed_sos);
            prop_assert!(check_sos(v, &g, 0.5).unwrap().passed(), "{:?}", spec);
            let d = v.meta().claimed_d.unwrap();
            for s in &g {
                prop_assert!(check_self_bounding(v, s, &op).unwrap().satisfied());
                prop_assert!(criticality_at(v, s, &op).unwrap() <= d);
            }
        }
    }

    #[test]
    fn rank_and_neighbourhood_families_respect_claimed_d(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let k = r.gen_range(1..=n);
        let rank = make_family(
            &ValuationFamilySpec::WeightedMatroidRank { matroid: MatroidSpec::Uniform { n, k }, coefficients: None },
            n,
        )
        .unwrap();
        let adjacency: Vec<Vec<usize>> =
            (0..n).map(|i| (0..n).filter(|&j| j != i && r.gen_bool(0.4)).collect()).collect();
        let hood = make_family(
            &ValuationFamilySpec::NeighborhoodGraph { adjacency, aggregate: Aggregate::Max, weights: None },
            n,
        )
        .unwrap();
        let op = ShadowOperator::ZeroOut;
        for v in rank.iter().chain(&hood) {
            let d = v.meta().claimed_d.unwrap();
            for s in &grid(n) {
                prop_assert!(criticality_at(v, s, &op).unwrap() <= d);
            }
        }
    }

    #[test]
    fn zeroing_is_idempotent(seed in any::<u64>(), n in 1usize..=5) {
        let mut r = rng(seed);
        let spec = random_sos_family(&mut r, n);
        let vals = make_family(&spec, n).unwrap();
        let s = common::random_signals(&mut r, n);
        let i = r.gen_range(0..n);
        let zeroed = s.with_signal(i, 0.0).unwrap();
        for v in &vals {
            let once = shadow_value(v, &s, i, &ShadowOperator::ZeroOut).unwrap();
            let twice = shadow_value(v, &zeroed, i, &ShadowOperator::ZeroOut).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
