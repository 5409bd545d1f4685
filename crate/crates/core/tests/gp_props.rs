mod common;

use proptest::prelude::*;
use suplab::gp::{canonical_metric, estimate_esup, sample_paths, GaussianProcessSpec};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn embedding_metric_is_euclidean(seed in any::<u64>(), n in 2usize..10, dim in 1usize..5) {
        let pts = common::random_points(&mut common::rng(seed), n, dim);
        let m = canonical_metric(&GaussianProcessSpec::embedding(pts.clone()).unwrap()).unwrap();
        for i in 0..n {
            for j in 0..n {
                let d: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                prop_assert!((m.d(i, j) - d).abs() <= 1e-12 * d.max(1.0));
            }
        }
    }

    #[test]
    fn translation_leaves_metric_unchanged(seed in any::<u64>(), n in 2usize..10, shift in -5.0f64..5.0) {
        let pts = common::random_points(&mut common::rng(seed), n, 3);
        let moved: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|x| x + shift).collect()).collect();
        let a = canonical_metric(&GaussianProcessSpec::embedding(pts).unwrap()).unwrap();
        let b = canonical_metric(&GaussianProcessSpec::embedding(moved).unwrap()).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((a.d(i, j) - b.d(i, j)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn dyadic_scaling_scales_samples(seed in any::<u64>(), n in 2usize..8, k in -3i32..4) {
        let lambda = 2f64.powi(k);
        let pts = common::random_points(&mut common::rng(seed), n, 2);
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|x| x * lambda).collect()).collect();
        let a = sample_paths(&GaussianProcessSpec::Embed(pts.clone()), 200, seed).unwrap();
        let b = sample_paths(&GaussianProcessSpec::Embed(scaled.clone()), 200, seed).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            for (x, y) in ra.iter().zip(rb) {
                prop_assert_eq!(lambda * x, *y);
            }
        }
        let ea = estimate_esup(&GaussianProcessSpec::Embed(pts), 500, seed).unwrap();
        let eb = estimate_esup(&GaussianProcessSpec::Embed(scaled), 500, seed).unwrap();
        prop_assert_eq!(lambda * ea.mean, eb.mean);
    }
}

#[test]
fn maximum_concentrates() {
    let mut r = common::rng(5);
    for n in [4, 12, 24] {
        let pts = common::random_points(&mut r, n, 3);
        let spec = GaussianProcessSpec::embedding(pts).unwrap();
        let sd_max = spec.variances().iter().cloned().fold(0.0, f64::max).sqrt();
        let e = estimate_esup(&spec, 100_000, n as u64).unwrap();
        assert!(e.sd <= 1.05 * sd_max, "n={n}: sd {} vs {}", e.sd, sd_max);
    }
}
