//! Independent reference computations for the integration tests. None of
//! these reuse the library's algorithms.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use suplab::metric::FiniteMetricSpace;
use suplab::spinglass::{hamiltonian, SKInstance};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// `E max(Z_1..Z_n)` for i.i.d. standard normals:
/// `∫ x n φ(x) Φ(x)^{n-1} dx` by composite Simpson on `[-12, 12]`.
pub fn expected_max_normals(n: usize) -> f64 {
    let z = Normal::standard();
    let (a, b, m) = (-12.0, 12.0, 48_000);
    let h = (b - a) / m as f64;
    let f = |x: f64| x * n as f64 * z.pdf(x) * z.cdf(x).powi(n as i32 - 1);
    let mut s = f(a) + f(b);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `½ E log(4 cosh(βg/√2))` for standard normal `g`, the per-site log
/// partition function of two spins, by Simpson's rule.
pub fn two_spin_phi(beta: f64) -> f64 {
    let z = Normal::standard();
    let (a, b, m) = (-12.0, 12.0, 24_000);
    let h = (b - a) / m as f64;
    let f = |g: f64| z.pdf(g) * (4.0 * (beta * g / 2f64.sqrt()).cosh()).ln();
    let mut s = f(a) + f(b);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    0.5 * s * h / 3.0
}

/// Disagreement indicators `1{x_i ≠ y_i}` for `y ∈ A`, reduced to the
/// minimal ones under coordinatewise order.
pub fn minimal_patterns(a: &[Vec<usize>], x: &[usize]) -> Vec<Vec<f64>> {
    let mut pats: Vec<Vec<bool>> = a
        .iter()
        .map(|y| y.iter().zip(x).map(|(u, v)| u != v).collect())
        .collect();
    pats.sort();
    pats.dedup();
    let below = |p: &Vec<bool>, q: &Vec<bool>| p.iter().zip(q).all(|(a, b)| !a || *b);
    let keep: Vec<Vec<bool>> = pats
        .iter()
        .filter(|q| !pats.iter().any(|p| p != *q && below(p, q)))
        .cloned()
        .collect();
    keep.into_iter()
        .map(|p| p.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Distance from the origin to the hull of `points`, by enumerating every
/// face spanned by at most `dim + 1` points and solving the equality
/// constrained least-squares problem on it.
pub fn hull_min_norm(points: &[Vec<f64>]) -> f64 {
    let k = points.len();
    let dim = points[0].len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        if idx.len() > dim + 1 {
            continue;
        }
        let s = idx.len();
        let mut kkt = DMatrix::<f64>::zeros(s + 1, s + 1);
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                kkt[(r, c)] = points[i].iter().zip(&points[j]).map(|(a, b)| a * b).sum();
            }
            kkt[(r, s)] = 1.0;
            kkt[(s, r)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(s + 1);
        rhs[s] = 1.0;
        let Some(sol) = kkt.lu().solve(&rhs) else {
            continue;
        };
        let lam: Vec<f64> = (0..s).map(|r| sol[r]).collect();
        if lam.iter().any(|l| !l.is_finite() || *l < -1e-12) {
            continue;
        }
        let total: f64 = lam.iter().map(|l| l.max(0.0)).sum();
        if (total - 1.0).abs() > 1e-9 {
            continue;
        }
        let mut p = vec![0.0; dim];
        for (l, &i) in lam.iter().zip(&idx) {
            for (pc, v) in p.iter_mut().zip(&points[i]) {
                *pc += l.max(0.0) / total * v;
            }
        }
        best = best.min(p.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    best
}

/// Smallest norm over convex combinations whose weights are multiples of
/// `1/steps`.
pub fn hull_grid_min(points: &[Vec<f64>], steps: usize) -> f64 {
    fn rec(points: &[Vec<f64>], i: usize, left: usize, steps: usize, acc: &mut Vec<f64>, best: &mut f64) {
        if i + 1 == points.len() {
            let w = left as f64 / steps as f64;
            let n: f64 = acc.iter().zip(&points[i]).map(|(a, v)| (a + w * v).powi(2)).sum();
            *best = best.min(n.sqrt());
            return;
        }
        for take in 0..=left {
            let w = take as f64 / steps as f64;
            for (a, v) in acc.iter_mut().zip(&points[i]) {
                *a += w * v;
            }
            rec(points, i + 1, left - take, steps, acc, best);
            for (a, v) in acc.iter_mut().zip(&points[i]) {
                *a -= w * v;
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut acc = vec![0.0; points[0].len()];
    rec(points, 0, steps, steps, &mut acc, &mut best);
    best
}

/// Quadratic cost of the monotone coupling of two 1-D measures given as
/// `(position, weight)` lists.
pub fn sorted_coupling_cost(mu: &[(f64, f64)], nu: &[(f64, f64)]) -> f64 {
    let mut a = mu.to_vec();
    let mut b = nu.to_vec();
    a.sort_by(|p, q| p.0.total_cmp(&q.0));
    b.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut cost = 0.0;
    loop {
        let m = ra.min(rb);
        cost += m * (a[i].0 - b[j].0).powi(2);
        ra -= m;
        rb -= m;
        if ra <= 1e-15 {
            i += 1;
            if i == a.len() {
                break;
            }
            ra += a[i].1;
        }
        if rb <= 1e-15 {
            j += 1;
            if j == b.len() {
                break;
            }
            rb += b[j].1;
        }
    }
    cost
}

/// `log Σ_σ exp(-β H(σ))` by evaluating the Hamiltonian from scratch on
/// every configuration.
pub fn naive_log_z(inst: &SKInstance, beta: f64) -> f64 {
    let n = inst.n();
    let xs: Vec<f64> = (0..1u64 << n)
        .map(|m| {
            let s: Vec<i8> = (0..n).map(|i| if m >> i & 1 == 1 { -1 } else { 1 }).collect();
            -beta * hamiltonian(inst, &s).unwrap()
        })
        .collect();
    let mx = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    mx + xs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Minimum number of closed `eps`-balls centred in the space, by trying
/// every subset in order of size.
pub fn brute_force_cover(space: &FiniteMetricSpace, eps: f64) -> usize {
    let n = space.len();
    let masks: Vec<u32> = (0..n)
        .map(|c| (0..n).filter(|&t| space.d(c, t) <= eps).fold(0u32, |m, t| m | 1 << t))
        .collect();
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    for size in 1..=n {
        let mut found = false;
        for_each_subset(n, size, &mut |set| {
            if !found && set.iter().fold(0u32, |m, &c| m | masks[c]) == full {
                found = true;
            }
        });
        if found {
            return size;
        }
    }
    n
}

fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    go(0, n, k, &mut Vec::new(), f);
}

/// Uniform points in the unit cube of `dim` dimensions.
pub fn random_points(r: &mut impl Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| r.random::<f64>()).collect()).collect()
}

pub fn random_space(r: &mut impl Rng, n: usize, dim: usize) -> FiniteMetricSpace {
    FiniteMetricSpace::from_points(&random_points(r, n, dim)).unwrap()
}
