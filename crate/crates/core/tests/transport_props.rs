mod common;

use proptest::prelude::*;
use rand::Rng;
use suplab::transport::{kl_divergence, transport_cost, Cost, DiscreteMeasure};

fn random_measure(r: &mut impl Rng, k: usize, lo: f64, hi: f64) -> DiscreteMeasure {
    let mut xs: Vec<f64> = (0..k).map(|_| r.random_range(lo..hi)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let raw: Vec<f64> = xs.iter().map(|_| r.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let rest: f64 = w[1..].iter().sum();
    w[0] = 1.0 - rest;
    DiscreteMeasure::on_line(&xs, w).unwrap()
}

fn pairs(m: &DiscreteMeasure) -> Vec<(f64, f64)> {
    m.atoms().iter().zip(m.weights()).map(|(a, &w)| (a[0], w)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplex_matches_monotone_coupling(seed in any::<u64>(), k1 in 1usize..30, k2 in 1usize..30) {
        let mut r = common::rng(seed);
        let mu = random_measure(&mut r, k1, -3.0, 3.0);
        let nu = random_measure(&mut r, k2, -1.0, 5.0);
        let s = transport_cost(&mu, &nu, &Cost::Quadratic).unwrap();
        prop_assert!((s.value - common::sorted_coupling_cost(&pairs(&mu), &pairs(&nu))).abs() <= 1e-9);
        prop_assert!(s.plan.marginal_error(mu.weights(), nu.weights()) <= 1e-9);
        prop_assert!(s.certificate_residual <= 1e-8);
    }

    #[test]
    fn table_costs_are_certified_and_symmetric(seed in any::<u64>(), k1 in 1usize..12, k2 in 1usize..12) {
        let mut r = common::rng(seed);
        let mu = random_measure(&mut r, k1, 0.0, 1.0);
        let nu = random_measure(&mut r, k2, 0.0, 1.0);
        // symmetric cost |x - y| + 0.3 |x - y|^3 between the atoms
        let w = |a: f64, b: f64| (a - b).abs() + 0.3 * (a - b).abs().powi(3);
        let table = |p: &DiscreteMeasure, q: &DiscreteMeasure| -> Vec<Vec<f64>> {
            p.atoms().iter().map(|a| q.atoms().iter().map(|b| w(a[0], b[0])).collect()).collect()
        };
        let ab = transport_cost(&mu, &nu, &Cost::Table(table(&mu, &nu))).unwrap();
        let ba = transport_cost(&nu, &mu, &Cost::Table(table(&nu, &mu))).unwrap();
        prop_assert!((ab.value - ba.value).abs() <= 1e-9);
        prop_assert!(ab.certificate_residual <= 1e-8);
        prop_assert!(ab.plan.marginal_error(mu.weights(), nu.weights()) <= 1e-9);
    }

    #[test]
    fn quadratic_cost_scales_by_lambda_squared(seed in any::<u64>(), k in 1usize..20, lambda in 0.1f64..10.0) {
        let mut r = common::rng(seed);
        let mu = random_measure(&mut r, k, -2.0, 2.0);
        let nu = random_measure(&mut r, k, -2.0, 2.0);
        let base = transport_cost(&mu, &nu, &Cost::Quadratic).unwrap().value;
        let scaled = transport_cost(&mu.dilated(lambda).unwrap(), &nu.dilated(lambda).unwrap(), &Cost::Quadratic).unwrap().value;
        prop_assert!((scaled - lambda * lambda * base).abs() <= 1e-9 * scaled.max(1.0));
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_equal(seed in any::<u64>(), k in 1usize..20) {
        let mut r = common::rng(seed);
        let nu = random_measure(&mut r, k, 0.0, 10.0);
        let raw: Vec<f64> = (0..nu.len()).map(|_| r.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let rest: f64 = w[1..].iter().sum();
        w[0] = 1.0 - rest;
        let mu = DiscreteMeasure::new(nu.atoms().to_vec(), w).unwrap();
        prop_assert!(kl_divergence(&mu, &nu).unwrap() >= 0.0);
        prop_assert_eq!(kl_divergence(&nu, &nu).unwrap(), 0.0);
    }
}

#[test]
fn two_point_example() {
    let mu = DiscreteMeasure::on_line(&[0.0, 1.0], vec![0.5, 0.5]).unwrap();
    let nu = DiscreteMeasure::on_line(&[2.0, 3.0], vec![0.5, 0.5]).unwrap();
    let s = transport_cost(&mu, &nu, &Cost::Quadratic).unwrap();
    assert!((s.value - common::sorted_coupling_cost(&pairs(&mu), &pairs(&nu))).abs() < 1e-12);
    assert!((s.value - 4.0).abs() < 1e-12);
}
