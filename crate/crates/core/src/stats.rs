//! Small statistical helpers shared by the Monte Carlo checks.

use serde::Serialize;

/// Number of binomial standard errors an empirical frequency may exceed a
/// bound by before it counts as a violation.
pub const VIOLATION_SIGMAS: f64 = 3.0;

/// Sample mean and unbiased sample variance (two-pass).
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1) as f64)
}

/// Standard error of the mean, `sd / sqrt(n)`.
pub fn std_error(xs: &[f64]) -> f64 {
    let (_, var) = mean_var(xs);
    (var / xs.len() as f64).sqrt()
}

/// Empirical median as the midpoint order statistic: the element of rank
/// `floor((n-1)/2)` in sorted order.
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "median of empty sample");
    let mut v = xs.to_vec();
    let mid = (v.len() - 1) / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Standard error of a frequency estimated from `n` Bernoulli trials whose
/// success probability sits at the bound `p` (clamped to `[0, 1]`).
pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Standard error of the mean of a correlated trace by non-overlapping batch
/// means.
pub fn batch_means_stderr(trace: &[f64], n_batches: usize) -> f64 {
    let n_batches = n_batches.max(2).min(trace.len());
    let len = trace.len() / n_batches;
    if len == 0 {
        return f64::NAN;
    }
    let means: Vec<f64> = trace
        .chunks_exact(len)
        .take(n_batches)
        .map(|c| c.iter().sum::<f64>() / len as f64)
        .collect();
    std_error(&means)
}

/// One comparison of an empirical tail frequency against a bound.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TailRecord {
    /// Grid parameter (λ, t, ε or u depending on the check).
    pub param: f64,
    pub empirical: f64,
    pub bound: f64,
    pub stderr: f64,
    pub violation: bool,
}

impl TailRecord {
    pub fn new(param: f64, hits: usize, trials: usize, bound: f64) -> Self {
        let empirical = hits as f64 / trials as f64;
        let stderr = binomial_stderr(bound, trials);
        Self {
            param,
            empirical,
            bound,
            stderr,
            violation: empirical - bound > VIOLATION_SIGMAS * stderr,
        }
    }
}
