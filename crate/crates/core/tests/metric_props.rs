mod common;

use proptest::prelude::*;
use suplab::metric::{covering_number, entropy_profile, greedy_net, CoverMode};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn covering_is_monotone_in_eps(seed in any::<u64>(), n in 2usize..14, e1 in 0.01f64..1.0, e2 in 0.01f64..1.0) {
        let space = common::random_space(&mut common::rng(seed), n, 2);
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        for mode in [CoverMode::Exact, CoverMode::Greedy] {
            prop_assert!(covering_number(&space, lo, mode).unwrap() >= covering_number(&space, hi, mode).unwrap());
        }
    }

    #[test]
    fn exact_matches_brute_force_and_greedy_dominates(seed in any::<u64>(), n in 2usize..12, eps in 0.05f64..0.8) {
        let space = common::random_space(&mut common::rng(seed), n, 2);
        let exact = covering_number(&space, eps, CoverMode::Exact).unwrap();
        prop_assert_eq!(exact, common::brute_force_cover(&space, eps));
        prop_assert!(covering_number(&space, eps, CoverMode::Greedy).unwrap() >= exact);
    }

    #[test]
    fn separated_net_fits_in_half_cover(seed in any::<u64>(), n in 2usize..16, eps in 0.05f64..1.0) {
        let space = common::random_space(&mut common::rng(seed), n, 3);
        let net = greedy_net(&space, eps);
        prop_assert!(net.len() <= covering_number(&space, eps / 2.0, CoverMode::Exact).unwrap());
    }

    #[test]
    fn profile_scales_with_distances(seed in any::<u64>(), n in 2usize..12, lambda in 0.1f64..10.0) {
        let space = common::random_space(&mut common::rng(seed), n, 2);
        let p = entropy_profile(&space, CoverMode::Exact).unwrap();
        let q = entropy_profile(&space.scaled(lambda), CoverMode::Exact).unwrap();
        prop_assert_eq!(&p.counts, &q.counts);
        for (a, b) in p.breakpoints.iter().zip(&q.breakpoints) {
            prop_assert!((a * lambda - b).abs() <= 1e-12 * b.abs());
        }
    }
}
