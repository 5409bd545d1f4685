//! Concentration on product spaces and in high dimension.
//!
//! The centerpiece is the convex distance `f_c(A, x)`: the Euclidean norm
//! of the minimum-norm point of the convex hull of the disagreement
//! patterns between `x` and the points of `A`. It is computed with Wolfe's
//! minimum-norm-point algorithm and fed into exhaustive checks of the
//! exponential-moment inequality and its enlargement corollary. The
//! remaining checks are Monte Carlo tail comparisons for Lipschitz
//! functionals on the sphere and in Gauss space, sums of bounded random
//! vectors, and the 2-smoothness of `ℓ_p`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::stats::{self, binomial_stderr, VIOLATION_SIGMAS};
use crate::{rng, Error, Result};

/// Upper limit on `q^N` for operations that enumerate the whole space.
pub const EXHAUSTIVE_LIMIT: usize = 1 << 20;

/// Patterns are bit masks, so the number of factors is capped by the mask
/// width.
pub const MAX_FACTORS: usize = 64;

/// Default optimality tolerance for the minimum-norm-point solver.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Slack used when comparing a computed `f_c` against a threshold `t`.
const THRESHOLD_SLACK: f64 = 1e-9;

/// Factor weights as written in instance files: either one probability
/// vector shared by every factor, or one vector per factor (accepted only
/// when all of them coincide).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum WeightSpec {
    Shared(Vec<f64>),
    PerFactor(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawInstance {
    q: usize,
    #[serde(rename = "N")]
    n: usize,
    weights: WeightSpec,
    #[serde(rename = "A")]
    a: Vec<Vec<usize>>,
}

/// `Ω = {0..q-1}` with weights `μ`, the product `Ω^N` with `P = μ^N`, and
/// an explicit subset `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct ProductSpaceInstance {
    q: usize,
    n: usize,
    weights: Vec<f64>,
    a: Vec<Vec<usize>>,
}

impl TryFrom<RawInstance> for ProductSpaceInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        let weights = match raw.weights {
            WeightSpec::Shared(w) => w,
            WeightSpec::PerFactor(ws) => {
                let first = ws
                    .first()
                    .cloned()
                    .ok_or_else(|| Error::InvalidInstance("no factor weights".into()))?;
                if ws.len() != raw.n || ws.iter().any(|w| *w != first) {
                    return Err(Error::InvalidInstance(
                        "factor measures must be identical".into(),
                    ));
                }
                first
            }
        };
        Self::new(raw.q, raw.n, weights, raw.a)
    }
}

impl From<ProductSpaceInstance> for RawInstance {
    fn from(p: ProductSpaceInstance) -> Self {
        RawInstance {
            q: p.q,
            n: p.n,
            weights: WeightSpec::Shared(p.weights),
            a: p.a,
        }
    }
}

impl ProductSpaceInstance {
    pub fn new(q: usize, n: usize, weights: Vec<f64>, a: Vec<Vec<usize>>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidInstance(m));
        if q == 0 || n == 0 {
            return bad(format!("q = {q}, N = {n}"));
        }
        if n > MAX_FACTORS {
            return bad(format!("N = {n} exceeds {MAX_FACTORS}"));
        }
        if weights.len() != q {
            return bad(format!("{} weights for alphabet of size {q}", weights.len()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("weights must be nonnegative".into());
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return bad(format!("weights sum to {total}"));
        }
        if a.is_empty() {
            return Err(Error::EmptySet);
        }
        for (k, y) in a.iter().enumerate() {
            if y.len() != n {
                return bad(format!("point {k} has {} coordinates", y.len()));
            }
            if y.iter().any(|&c| c >= q) {
                return bad(format!("point {k} has a coordinate outside 0..{q}"));
            }
        }
        let mut sorted = a.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("points of A must be distinct".into());
        }
        Ok(Self { q, n, weights, a })
    }

    /// Uniform weights on `{0..q-1}`.
    pub fn uniform(q: usize, n: usize, a: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(q, n, vec![1.0 / q as f64; q], a)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("product instance: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn factors(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set(&self) -> &[Vec<usize>] {
        &self.a
    }

    /// `q^N`, or `None` on overflow.
    pub fn space_size(&self) -> Option<usize> {
        (self.q as u128)
            .checked_pow(self.n as u32)
            .and_then(|s| usize::try_from(s).ok())
    }

    fn check_exhaustive(&self) -> Result<usize> {
        match self.space_size() {
            Some(s) if s <= EXHAUSTIVE_LIMIT => Ok(s),
            s => Err(Error::SizeLimitExceeded {
                what: "exhaustive product-space sweep",
                size: s.unwrap_or(usize::MAX),
                limit: EXHAUSTIVE_LIMIT,
            }),
        }
    }

    /// Point with base-`q` index `idx`, coordinate 0 least significant.
    pub fn point(&self, mut idx: usize) -> Vec<usize> {
        (0..self.n)
            .map(|_| {
                let c = idx % self.q;
                idx /= self.q;
                c
            })
            .collect()
    }

    pub fn prob(&self, x: &[usize]) -> f64 {
        x.iter().map(|&c| self.weights[c]).product()
    }

    /// `P(A)`.
    pub fn measure_of_set(&self) -> f64 {
        self.a.iter().map(|y| self.prob(y)).sum()
    }
}

/// `f_h(A, x) = min_{y∈A} Σ_i h(x_i, y_i)`.
pub fn hamming_f(h: &[Vec<f64>], a: &[Vec<usize>], x: &[usize]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    for (i, row) in h.iter().enumerate() {
        if row.len() != h.len() {
            return Err(Error::NotSquare {
                row: i,
                len: row.len(),
                expected: h.len(),
            });
        }
        if row[i] != 0.0 || row.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Domain(
                "cost table must be nonnegative with zero diagonal".into(),
            ));
        }
    }
    let in_range = |c: usize| c < h.len();
    if !x.iter().all(|&c| in_range(c)) {
        return Err(Error::Domain("point outside the cost table alphabet".into()));
    }
    let mut best = f64::INFINITY;
    for y in a {
        if y.len() != x.len() || !y.iter().all(|&c| in_range(c)) {
            return Err(Error::Domain("point of A does not match x".into()));
        }
        let cost: f64 = x.iter().zip(y).map(|(&xi, &yi)| h[xi][yi]).sum();
        best = best.min(cost);
    }
    Ok(best)
}

/// The 0/1 cost `h(a, b) = [a ≠ b]` on an alphabet of size `q`.
pub fn zero_one_cost(q: usize) -> Vec<Vec<f64>> {
    (0..q)
        .map(|a| (0..q).map(|b| if a == b { 0.0 } else { 1.0 }).collect())
        .collect()
}

/// Bit `i` set iff `x_i ≠ y_i`.
pub fn disagreement_mask(x: &[usize], y: &[usize]) -> u64 {
    x.iter()
        .zip(y)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .fold(0, |m, (i, _)| m | (1 << i))
}

/// Expand a pattern mask into a 0/1 vector of length `n`.
pub fn mask_to_vec(mask: u64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (mask >> i & 1) as f64).collect()
}

/// Minimal disagreement patterns between `x` and the points of `A`, as bit
/// masks sorted by (weight, value). Their upward closure is the pattern set
/// `U_A(x)`, and since the norm is monotone on the nonnegative orthant the
/// convex hull of these generators has the same minimum-norm point as the
/// hull of all of `U_A(x)`.
pub fn pattern_generators(a: &[Vec<usize>], x: &[usize]) -> Result<Vec<u64>> {
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    if x.len() > MAX_FACTORS {
        return Err(Error::Domain(format!("at most {MAX_FACTORS} factors supported")));
    }
    let mut masks: Vec<u64> = a.iter().map(|y| disagreement_mask(x, y)).collect();
    Ok(minimal_masks(&mut masks))
}

fn minimal_masks(masks: &mut Vec<u64>) -> Vec<u64> {
    masks.sort_unstable_by_key(|m| (m.count_ones(), *m));
    masks.dedup();
    let mut kept: Vec<u64> = Vec::with_capacity(masks.len());
    for &m in masks.iter() {
        if !kept.iter().any(|&k| k & m == k) {
            kept.push(m);
        }
    }
    kept
}

/// Minimum-norm point of a convex hull.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinNormPoint {
    pub point: Vec<f64>,
    /// `(vertex index, weight)` of the active convex combination.
    pub combination: Vec<(usize, f64)>,
    /// `⟨p,p⟩ - min_v ⟨p,v⟩` at termination.
    pub gap: f64,
    pub iterations: usize,
}

impl MinNormPoint {
    pub fn norm(&self) -> f64 {
        dot(&self.point, &self.point).sqrt()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Wolfe's minimum-norm-point algorithm over the hull of `vertices`.
///
/// Terminates when `⟨p,p⟩ - min_v ⟨p,v⟩ ≤ tol·(1 + ⟨p,p⟩)`. Each affine
/// minimization counts as one iteration; the cap is
/// `10 · dim · |vertices|`.
pub fn min_norm_point(vertices: &[Vec<f64>], tol: f64) -> Result<MinNormPoint> {
    if vertices.is_empty() {
        return Err(Error::EmptySet);
    }
    let dim = vertices[0].len();
    let cap = (10 * dim * vertices.len()).max(10);
    let norms: Vec<f64> = vertices.iter().map(|v| dot(v, v)).collect();
    let start = (0..vertices.len())
        .min_by(|&i, &j| norms[i].total_cmp(&norms[j]))
        .unwrap();
    let mut active = vec![start];
    let mut lambda = vec![1.0];
    let mut x = vertices[start].clone();
    let mut iterations = 0;
    let gap;
    loop {
        let xx = dot(&x, &x);
        let (j, val) = vertices
            .iter()
            .enumerate()
            .map(|(j, v)| (j, dot(&x, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let g = xx - val;
        if g <= tol * (1.0 + xx) || active.contains(&j) {
            gap = g;
            break;
        }
        active.push(j);
        lambda.push(0.0);
        loop {
            iterations += 1;
            if iterations > cap {
                return Err(Error::NonConvergence(iterations - 1));
            }
            let alpha = affine_minimizer(vertices, &active);
            if alpha.iter().all(|&a| a > 1e-14) {
                lambda = alpha;
                break;
            }
            // step from lambda toward alpha until a weight hits zero
            let theta = lambda
                .iter()
                .zip(&alpha)
                .filter(|(_, &a)| a <= 1e-14)
                .map(|(&l, &a)| if l - a > 0.0 { l / (l - a) } else { 0.0 })
                .fold(1.0f64, f64::min);
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = theta * a + (1.0 - theta) * *l;
            }
            let (mut kept_a, mut kept_l) = (Vec::new(), Vec::new());
            let drop_idx = lambda
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap();
            for (i, (&v, &l)) in active.iter().zip(&lambda).enumerate() {
                if i != drop_idx && l > 1e-14 {
                    kept_a.push(v);
                    kept_l.push(l);
                }
            }
            let total: f64 = kept_l.iter().sum();
            kept_l.iter_mut().for_each(|l| *l /= total);
            active = kept_a;
            lambda = kept_l;
            if active.len() == 1 {
                lambda = vec![1.0];
                break;
            }
        }
        x = combine(vertices, &active, &lambda, dim);
    }
    Ok(MinNormPoint {
        point: x,
        combination: active.into_iter().zip(lambda).collect(),
        gap,
        iterations,
    })
}

fn combine(vertices: &[Vec<f64>], active: &[usize], lambda: &[f64], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (&i, &l) in active.iter().zip(lambda) {
        for (xk, vk) in x.iter_mut().zip(&vertices[i]) {
            *xk += l * vk;
        }
    }
    x
}

/// Coefficients (summing to one) of the point of minimum norm in the
/// affine hull of the active vertices, from the KKT system
/// `[G 1; 1ᵀ 0] [α; μ] = [0; 1]` with `G` the Gram matrix.
fn affine_minimizer(vertices: &[Vec<f64>], active: &[usize]) -> Vec<f64> {
    let k = active.len();
    let mut kkt = DMatrix::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            kkt[(a, b)] = dot(&vertices[active[a]], &vertices[active[b]]);
        }
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = kkt
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .unwrap_or_else(|| {
            kkt.svd(true, true)
                .solve(&rhs, 1e-12)
                .expect("svd solve with computed factors")
        });
    let mut alpha: Vec<f64> = sol.iter().take(k).copied().collect();
    let total: f64 = alpha.iter().sum();
    if total.abs() > 1e-300 {
        alpha.iter_mut().for_each(|a| *a /= total);
    }
    alpha
}

/// Convex distance together with its certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexDistanceResult {
    pub value: f64,
    /// Minimum-norm point of the hull.
    pub point: Vec<f64>,
    /// `(generator mask, weight)` pairs of the optimal convex combination.
    pub witness: Vec<(u64, f64)>,
    pub iterations: usize,
}

/// `f_c(A, x)`: distance from the origin to the convex hull of `U_A(x)`.
pub fn convex_distance(a: &[Vec<usize>], x: &[usize], tol: f64) -> Result<ConvexDistanceResult> {
    let gens = pattern_generators(a, x)?;
    convex_distance_from_generators(&gens, x.len(), tol)
}

pub fn convex_distance_from_generators(gens: &[u64], n: usize, tol: f64) -> Result<ConvexDistanceResult> {
    if gens.is_empty() {
        return Err(Error::EmptySet);
    }
    if gens[0] == 0 {
        return Ok(ConvexDistanceResult {
            value: 0.0,
            point: vec![0.0; n],
            witness: vec![(0, 1.0)],
            iterations: 0,
        });
    }
    if gens.len() == 1 {
        return Ok(ConvexDistanceResult {
            value: (gens[0].count_ones() as f64).sqrt(),
            point: mask_to_vec(gens[0], n),
            witness: vec![(gens[0], 1.0)],
            iterations: 0,
        });
    }
    let vertices: Vec<Vec<f64>> = gens.iter().map(|&m| mask_to_vec(m, n)).collect();
    let mnp = min_norm_point(&vertices, tol)?;
    Ok(ConvexDistanceResult {
        value: mnp.norm(),
        witness: mnp.combination.iter().map(|&(i, w)| (gens[i], w)).collect(),
        point: mnp.point,
        iterations: mnp.iterations,
    })
}

/// `f_c(A, x)` for every `x ∈ Ω^N`, indexed as in
/// [`ProductSpaceInstance::point`].
pub fn convex_distance_table(instance: &ProductSpaceInstance) -> Result<Vec<f64>> {
    let size = instance.check_exhaustive()?;
    (0..size)
        .into_par_iter()
        .map(|idx| {
            let x = instance.point(idx);
            convex_distance(instance.set(), &x, DEFAULT_TOL).map(|r| r.value)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpMoment {
    /// `∫ exp(f_c²/4) dP`
    pub lhs: f64,
    /// `1 / P(A)`
    pub rhs: f64,
    pub margin: f64,
}

/// Exhaustive evaluation of both sides of `∫ exp(f_c²/4) dP ≤ 1/P(A)`.
pub fn check_exp_moment(instance: &ProductSpaceInstance) -> Result<ExpMoment> {
    let table = convex_distance_table(instance)?;
    Ok(exp_moment_from_table(instance, &table))
}

pub fn exp_moment_from_table(instance: &ProductSpaceInstance, table: &[f64]) -> ExpMoment {
    let lhs: f64 = table
        .iter()
        .enumerate()
        .map(|(idx, fc)| instance.prob(&instance.point(idx)) * (fc * fc / 4.0).exp())
        .sum();
    let rhs = 1.0 / instance.measure_of_set();
    ExpMoment {
        lhs,
        rhs,
        margin: rhs - lhs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enlargement {
    pub t: f64,
    /// `P(A_t)`
    pub measure: f64,
    /// `1 - e^{-t²/4} / P(A)`
    pub bound: f64,
}

/// `P{x : f_c(A, x) ≤ t}` by enumeration, with its lower bound.
pub fn enlargement_measure(instance: &ProductSpaceInstance, t: f64) -> Result<Enlargement> {
    let table = convex_distance_table(instance)?;
    enlargement_from_table(instance, &table, t)
}

pub fn enlargement_from_table(instance: &ProductSpaceInstance, table: &[f64], t: f64) -> Result<Enlargement> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    let measure = table
        .iter()
        .enumerate()
        .filter(|(_, &fc)| fc <= t + THRESHOLD_SLACK)
        .map(|(idx, _)| instance.prob(&instance.point(idx)))
        .sum();
    Ok(Enlargement {
        t,
        measure,
        bound: 1.0 - (-t * t / 4.0).exp() / instance.measure_of_set(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCheck {
    pub holds: bool,
    pub convex_distance: f64,
    /// Direction that certifies `x ∉ A_t`, when `f_c > t`.
    pub witness: Option<Vec<f64>>,
    /// Direction for which the expected inequality failed.
    pub counterexample: Option<Vec<f64>>,
}

/// Check the dual description of the enlargement: `f_c(A,x) ≤ t` iff for
/// every `α` some `y ∈ A` has `Σ_{i: x_i≠y_i} α_i ≤ t‖α‖`.
///
/// When `f_c > t` the normalized minimum-norm point must separate; when
/// `f_c ≤ t`, `n_directions` random Gaussian directions are tried and each
/// must be matched by some `y`.
pub fn dual_check(
    instance: &ProductSpaceInstance,
    x: &[usize],
    t: f64,
    n_directions: usize,
    seed: u64,
) -> Result<DualCheck> {
    instance.check_exhaustive()?;
    if x.len() != instance.factors() || x.iter().any(|&c| c >= instance.q()) {
        return Err(Error::Domain("x is not a point of the product space".into()));
    }
    let n = instance.factors();
    let fc = convex_distance(instance.set(), x, DEFAULT_TOL)?;
    let diffs: Vec<u64> = instance.set().iter().map(|y| disagreement_mask(x, y)).collect();
    let min_over_a = |alpha: &[f64]| {
        diffs
            .iter()
            .map(|&m| {
                alpha
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| m >> i & 1 == 1)
                    .map(|(_, a)| a)
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    };
    if fc.value > t + THRESHOLD_SLACK {
        let alpha: Vec<f64> = fc.point.iter().map(|p| p / fc.value).collect();
        let holds = min_over_a(&alpha) > t;
        return Ok(DualCheck {
            holds,
            convex_distance: fc.value,
            witness: holds.then(|| alpha.clone()),
            counterexample: (!holds).then_some(alpha),
        });
    }
    let mut rng = rng::stream(seed, 0);
    for _ in 0..n_directions {
        let alpha: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = dot(&alpha, &alpha).sqrt();
        if min_over_a(&alpha) > (t + THRESHOLD_SLACK) * norm {
            return Ok(DualCheck {
                holds: false,
                convex_distance: fc.value,
                witness: None,
                counterexample: Some(alpha),
            });
        }
    }
    Ok(DualCheck {
        holds: true,
        convex_distance: fc.value,
        witness: None,
        counterexample: None,
    })
}

/// One grid point of a centered tail comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenteredTail {
    pub t: f64,
    /// Frequency of `|F - M| ≥ t·scale` about the empirical median.
    pub empirical_median: f64,
    /// Same about the empirical mean.
    pub empirical_mean: f64,
    pub bound: f64,
    pub stderr: f64,
    /// Judged on the center the inequality is stated for.
    pub violation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Center {
    Median,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub trials: usize,
    pub median: f64,
    pub mean: f64,
    /// Deviation unit: σ for vector sums, 1 otherwise.
    pub scale: f64,
    pub asserted_center: Center,
    pub records: Vec<CenteredTail>,
}

impl TailReport {
    pub fn violations(&self) -> usize {
        self.records.iter().filter(|r| r.violation).count()
    }

    fn build(
        values: &[f64],
        scale: f64,
        grid: &[f64],
        asserted_center: Center,
        bound: impl Fn(f64) -> f64,
    ) -> Self {
        let trials = values.len();
        let median = stats::median(values);
        let mean = values.iter().sum::<f64>() / trials as f64;
        let freq = |c: f64, t: f64| {
            values.iter().filter(|v| (*v - c).abs() >= t * scale).count() as f64 / trials as f64
        };
        let records = grid
            .iter()
            .map(|&t| {
                let b = bound(t);
                let stderr = binomial_stderr(b, trials);
                let empirical_median = freq(median, t);
                let empirical_mean = freq(mean, t);
                let judged = match asserted_center {
                    Center::Median => empirical_median,
                    Center::Mean => empirical_mean,
                };
                CenteredTail {
                    t,
                    empirical_median,
                    empirical_mean,
                    bound: b,
                    stderr,
                    violation: judged - b > VIOLATION_SIGMAS * stderr,
                }
            })
            .collect();
        Self {
            trials,
            median,
            mean,
            scale,
            asserted_center,
            records,
        }
    }
}

/// Evaluate `f` on `trials` independent draws, block-parallel and
/// deterministic in `seed`.
fn monte_carlo<F>(trials: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    let spans: Vec<_> = rng::blocks(trials).collect();
    spans
        .into_par_iter()
        .map(|(b, range)| {
            let mut r = rng::stream(seed, b);
            range.map(|_| f(&mut r)).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorNorm {
    L2,
    Linf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientLaw {
    Rademacher,
    Uniform,
}

/// `σ = sup_{‖w*‖≤1} (Σ_i w*(v_i)²)^{1/2}` for the chosen norm: the root of
/// the top eigenvalue of `Σ v_i v_iᵀ` for ℓ₂, the largest coordinate-wise
/// root sum of squares for ℓ∞ (whose dual ball has the ±e_j as vertices).
pub fn weak_variance(vectors: &[Vec<f64>], norm: VectorNorm) -> f64 {
    let d = vectors.first().map_or(0, Vec::len);
    match norm {
        VectorNorm::L2 => {
            let mut gram = DMatrix::<f64>::zeros(d, d);
            for v in vectors {
                let col = DVector::from_column_slice(v);
                gram += &col * col.transpose();
            }
            gram.symmetric_eigenvalues().max().max(0.0).sqrt()
        }
        VectorNorm::Linf => (0..d)
            .map(|j| vectors.iter().map(|v| v[j] * v[j]).sum::<f64>().sqrt())
            .fold(0.0, f64::max),
    }
}

/// Deviation of `‖Σ Y_i v_i‖` from its median against `4 e^{-t²/16}`, in
/// units of the weak variance σ.
pub fn vector_sum_tail_check(
    vectors: &[Vec<f64>],
    norm: VectorNorm,
    law: CoefficientLaw,
    t_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<TailReport> {
    if vectors.is_empty() || trials == 0 {
        return Err(Error::Domain("need at least one vector and one trial".into()));
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d || v.iter().any(|x| !x.is_finite())) {
        return Err(Error::Domain("vectors must be finite and of equal dimension".into()));
    }
    let sigma = weak_variance(vectors, norm);
    let values = monte_carlo(trials, seed, |r| {
        let mut s = vec![0.0; d];
        for v in vectors {
            let y = match law {
                CoefficientLaw::Rademacher => {
                    if r.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
                CoefficientLaw::Uniform => r.random_range(-1.0..=1.0),
            };
            for (sk, vk) in s.iter_mut().zip(v) {
                *sk += y * vk;
            }
        }
        match norm {
            VectorNorm::L2 => dot(&s, &s).sqrt(),
            VectorNorm::Linf => s.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    });
    Ok(TailReport::build(&values, sigma, t_grid, Center::Median, |t| {
        4.0 * (-t * t / 16.0).exp()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SphereFunctional {
    /// `θ ↦ θ_1`
    Coordinate,
    /// `θ ↦ ‖θ - e_1‖`
    DistanceToPoint,
}

fn gaussian_vec(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(r)).collect()
}

/// Tail of a 1-Lipschitz functional on `S^{n-1}` about its median against
/// `2 e^{-(n-1)ε²}`.
pub fn sphere_tail_check(
    n: usize,
    f: SphereFunctional,
    eps_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<TailReport> {
    if n < 2 || trials == 0 {
        return Err(Error::Domain("sphere check needs n >= 2 and trials >= 1".into()));
    }
    let values = monte_carlo(trials, seed, |r| {
        let g = gaussian_vec(r, n);
        let norm = dot(&g, &g).sqrt();
        match f {
            SphereFunctional::Coordinate => g[0] / norm,
            SphereFunctional::DistanceToPoint => {
                let d0 = g[0] / norm - 1.0;
                let rest: f64 = g[1..].iter().map(|x| (x / norm).powi(2)).sum();
                (d0 * d0 + rest).sqrt()
            }
        }
    });
    let nm1 = (n - 1) as f64;
    Ok(TailReport::build(&values, 1.0, eps_grid, Center::Median, |e| {
        2.0 * (-nm1 * e * e).exp()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaussFunctional {
    EuclideanNorm,
    MaxCoordinate,
    /// Distance to the point `(2, 0, …, 0)`.
    DistanceToPoint,
}

/// Tail of a 1-Lipschitz functional of a standard Gaussian vector in `R^n`
/// about its mean against the dimension-free `2 e^{-t²/2}`.
pub fn gauss_tail_check(
    n: usize,
    f: GaussFunctional,
    t_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<TailReport> {
    if n == 0 || trials == 0 {
        return Err(Error::Domain("gauss check needs n >= 1 and trials >= 1".into()));
    }
    let values = monte_carlo(trials, seed, |r| {
        let g = gaussian_vec(r, n);
        match f {
            GaussFunctional::EuclideanNorm => dot(&g, &g).sqrt(),
            GaussFunctional::MaxCoordinate => g.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            GaussFunctional::DistanceToPoint => {
                let d0 = g[0] - 2.0;
                (d0 * d0 + g[1..].iter().map(|x| x * x).sum::<f64>()).sqrt()
            }
        }
    });
    Ok(TailReport::build(&values, 1.0, t_grid, Center::Mean, |t| {
        2.0 * (-t * t / 2.0).exp()
    }))
}

fn p_norm(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

fn random_direction(r: &mut impl Rng, dim: usize) -> Vec<f64> {
    let mut v = gaussian_vec(r, dim);
    // sparse directions probe the corners of the ℓ_p ball
    if r.random::<bool>() {
        let keep = r.random_range(1..=dim);
        for (i, x) in v.iter_mut().enumerate() {
            if i >= keep {
                *x = 0.0;
            }
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSmoothReport {
    pub p: f64,
    pub dim: usize,
    pub trials: usize,
    /// `max ½(‖f+g‖ + ‖f-g‖) - 1 - C‖g‖²` over the trials, `C = (p-1)/2`.
    pub max_violation: f64,
}

/// Random search for violations of `½(‖f+g‖+‖f-g‖) ≤ 1 + ((p-1)/2)‖g‖²` in
/// `ℓ_p^dim` over unit `f` and `‖g‖ ≤ 1`. Radii of `g` are drawn half
/// uniformly, half log-uniformly down to `1e-6`.
pub fn two_smooth_check(p: f64, dim: usize, trials: usize, seed: u64) -> Result<TwoSmoothReport> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::Domain(format!("2-smoothness needs p >= 2, got {p}")));
    }
    if dim == 0 || trials == 0 {
        return Err(Error::Domain("need dim >= 1 and trials >= 1".into()));
    }
    let c = (p - 1.0) / 2.0;
    let values = monte_carlo(trials, seed, |r| {
        let mut f = random_direction(r, dim);
        let fnorm = p_norm(&f, p);
        if fnorm == 0.0 {
            return f64::NEG_INFINITY;
        }
        f.iter_mut().for_each(|x| *x /= fnorm);
        let mut g = random_direction(r, dim);
        let gnorm = p_norm(&g, p);
        if gnorm == 0.0 {
            return f64::NEG_INFINITY;
        }
        let radius = if r.random::<bool>() {
            r.random::<f64>()
        } else {
            10f64.powf(-6.0 * r.random::<f64>())
        };
        g.iter_mut().for_each(|x| *x *= radius / gnorm);
        let plus: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        let minus: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a - b).collect();
        let gn = p_norm(&g, p);
        0.5 * (p_norm(&plus, p) + p_norm(&minus, p)) - 1.0 - c * gn * gn
    });
    Ok(TwoSmoothReport {
        p,
        dim,
        trials,
        max_violation: values.into_iter().fold(f64::NEG_INFINITY, f64::max),
    })
}
