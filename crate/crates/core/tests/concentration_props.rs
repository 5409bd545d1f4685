mod common;

use proptest::prelude::*;
use rand::seq::index;
use rand::Rng;
use suplab::concentration::{
    check_exp_moment, convex_distance, dual_check, enlargement_measure, min_norm_point, ProductSpaceInstance,
    DEFAULT_TOL,
};

fn random_set(r: &mut impl Rng, q: usize, n: usize) -> Vec<Vec<usize>> {
    let size = q.pow(n as u32);
    let k = r.random_range(1..=size);
    index::sample(r, size, k)
        .into_iter()
        .map(|mut i| {
            (0..n)
                .map(|_| {
                    let d = i % q;
                    i /= q;
                    d
                })
                .collect()
        })
        .collect()
}

fn random_point(r: &mut impl Rng, q: usize, n: usize) -> Vec<usize> {
    (0..n).map(|_| r.random_range(0..q)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convex_distance_basic_properties(seed in any::<u64>(), q in 2usize..4, n in 1usize..7) {
        let mut r = common::rng(seed);
        let a = random_set(&mut r, q, n);
        let x = random_point(&mut r, q, n);
        let fc = convex_distance(&a, &x, DEFAULT_TOL).unwrap().value;
        prop_assert_eq!(fc == 0.0, a.contains(&x));
        prop_assert!(fc <= (n as f64).sqrt() + 1e-12);
        let mut bigger = a.clone();
        let extra = random_point(&mut r, q, n);
        if !bigger.contains(&extra) {
            bigger.push(extra);
        }
        prop_assert!(convex_distance(&bigger, &x, DEFAULT_TOL).unwrap().value <= fc + 1e-9);
    }

    #[test]
    fn wolfe_matches_face_enumeration(seed in any::<u64>(), n in 2usize..9, k in 1usize..7) {
        let mut r = common::rng(seed);
        let pts: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| f64::from(r.random::<bool>() as u8)).collect())
            .collect();
        let wolfe = min_norm_point(&pts, DEFAULT_TOL).unwrap().norm();
        prop_assert!((wolfe - common::hull_min_norm(&pts)).abs() <= 1e-6);
    }

    #[test]
    fn wolfe_never_worse_than_simplex_grid(seed in any::<u64>(), n in 2usize..6, k in 1usize..5) {
        let mut r = common::rng(seed);
        let pts: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let wolfe = min_norm_point(&pts, DEFAULT_TOL).unwrap().norm();
        prop_assert!(wolfe <= common::hull_grid_min(&pts, 64) + 1e-9);
    }

    #[test]
    fn convex_distance_is_permutation_equivariant(seed in any::<u64>(), n in 2usize..7) {
        let mut r = common::rng(seed);
        let a = random_set(&mut r, 2, n);
        let x = random_point(&mut r, 2, n);
        let perm = index::sample(&mut r, n, n).into_vec();
        let apply = |v: &Vec<usize>| perm.iter().map(|&p| v[p]).collect::<Vec<_>>();
        let pa: Vec<Vec<usize>> = a.iter().map(apply).collect();
        let f1 = convex_distance(&a, &x, DEFAULT_TOL).unwrap().value;
        let f2 = convex_distance(&pa, &apply(&x), DEFAULT_TOL).unwrap().value;
        prop_assert!((f1 - f2).abs() <= 1e-9);
    }

    #[test]
    fn exponential_moment_and_enlargement(seed in any::<u64>(), q in 2usize..4, n in 1usize..5) {
        let mut r = common::rng(seed);
        let raw: Vec<f64> = (0..q).map(|_| r.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let rest: f64 = w[1..].iter().sum();
        w[0] = 1.0 - rest;
        let inst = ProductSpaceInstance::new(q, n, w, random_set(&mut r, q, n)).unwrap();
        prop_assert!(check_exp_moment(&inst).unwrap().margin >= -1e-9);
        for k in 0..=8 {
            let e = enlargement_measure(&inst, 0.25 * k as f64).unwrap();
            prop_assert!(e.measure >= e.bound - 1e-9);
        }
    }

    #[test]
    fn min_norm_direction_separates(seed in any::<u64>(), n in 2usize..7, t in 0.1f64..2.0) {
        let mut r = common::rng(seed);
        let inst = ProductSpaceInstance::uniform(2, n, random_set(&mut r, 2, n)).unwrap();
        let x = random_point(&mut r, 2, n);
        let d = dual_check(&inst, &x, t, 50, seed).unwrap();
        prop_assert!(d.holds);
        if d.convex_distance > t + 1e-9 {
            prop_assert!(d.witness.is_some());
        }
    }
}
