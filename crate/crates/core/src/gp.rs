//! Centered Gaussian processes on finite index sets.
//!
//! A process is given either by its covariance matrix or by a Euclidean
//! embedding `t ↦ p_t`, in which case `X_t = ⟨g, p_t⟩` for a standard
//! Gaussian vector `g`. Both are sampled as `X = F g` for a factor `F`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metric::FiniteMetricSpace;
use crate::stats::{self, TailRecord};
use crate::{rng, Error, Result};

/// Relative floor on the smallest covariance eigenvalue accepted at
/// ingestion.
pub const PSD_RTOL: f64 = 1e-8;

/// Squared canonical distances below `-DEGENERATE_TOL` are rejected.
pub const DEGENERATE_TOL: f64 = 1e-9;

const JITTER_ESCALATIONS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum GaussianProcessSpec {
    Cov(Vec<Vec<f64>>),
    Embed(Vec<Vec<f64>>),
}

impl GaussianProcessSpec {
    pub fn covariance(rows: Vec<Vec<f64>>) -> Result<Self> {
        let spec = Self::Cov(rows);
        spec.validate()?;
        Ok(spec)
    }

    pub fn embedding(points: Vec<Vec<f64>>) -> Result<Self> {
        let spec = Self::Embed(points);
        spec.validate()?;
        Ok(spec)
    }

    /// `n` independent standard normals.
    pub fn iid(n: usize) -> Self {
        Self::Cov(
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("process spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    /// Number of indices.
    pub fn len(&self) -> usize {
        match self {
            Self::Cov(c) => c.len(),
            Self::Embed(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Cov(c) => {
                let n = c.len();
                if n == 0 {
                    return Err(Error::EmptySet);
                }
                for (row, r) in c.iter().enumerate() {
                    if r.len() != n {
                        return Err(Error::NotSquare {
                            row,
                            len: r.len(),
                            expected: n,
                        });
                    }
                    if let Some(j) = r.iter().position(|x| !x.is_finite()) {
                        return Err(Error::NonFinite(row, j));
                    }
                }
                let scale = c.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
                for i in 0..n {
                    for j in (i + 1)..n {
                        if (c[i][j] - c[j][i]).abs() > 1e-12 * scale {
                            return Err(Error::InvalidCovariance(format!(
                                "asymmetric at ({i},{j})"
                            )));
                        }
                    }
                }
                let eig = to_matrix(c).symmetric_eigenvalues();
                let max = eig.max();
                let min = eig.min();
                if min < -PSD_RTOL * max.max(0.0) {
                    return Err(Error::InvalidCovariance(format!(
                        "smallest eigenvalue {min:e} below -{PSD_RTOL:e} x largest {max:e}"
                    )));
                }
                Ok(())
            }
            Self::Embed(p) => {
                if p.is_empty() {
                    return Err(Error::EmptySet);
                }
                let dim = p[0].len();
                for (i, row) in p.iter().enumerate() {
                    if row.len() != dim {
                        return Err(Error::InvalidInstance(format!(
                            "embedding point {i} has dimension {}, expected {dim}",
                            row.len()
                        )));
                    }
                    if let Some(j) = row.iter().position(|x| !x.is_finite()) {
                        return Err(Error::NonFinite(i, j));
                    }
                }
                Ok(())
            }
        }
    }

    /// Variance of each coordinate.
    pub fn variances(&self) -> Vec<f64> {
        match self {
            Self::Cov(c) => (0..c.len()).map(|i| c[i][i]).collect(),
            Self::Embed(p) => p.iter().map(|x| x.iter().map(|v| v * v).sum()).collect(),
        }
    }

    /// Build the sampling factor.
    pub fn sampler(&self) -> Result<ProcessSampler> {
        let factor = match self {
            Self::Embed(p) => {
                let n = p.len();
                let m = p[0].len();
                DMatrix::from_fn(n, m, |i, k| p[i][k])
            }
            Self::Cov(c) => symmetric_sqrt(&to_matrix(c))?,
        };
        Ok(ProcessSampler { factor })
    }
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Symmetric square root `V diag(√λ) Vᵀ`. If the eigensolver fails or
/// reports a clearly negative eigenvalue, the diagonal is jittered by
/// `1e-12·trace/n`, then ten and a hundred times that, before giving up.
fn symmetric_sqrt(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    let base = 1e-12 * cov.trace().abs() / n as f64;
    let mut jitter = 0.0;
    for attempt in 0..=JITTER_ESCALATIONS {
        if attempt > 0 {
            jitter = base * 10f64.powi(attempt as i32 - 1);
        }
        let m = cov + DMatrix::identity(n, n) * jitter;
        let Some(eig) = m.try_symmetric_eigen(f64::EPSILON, 0) else {
            continue;
        };
        let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
        let tol = n as f64 * f64::EPSILON * scale;
        if eig.eigenvalues.min() < -tol {
            continue;
        }
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let v = &eig.eigenvectors;
        return Ok(v * DMatrix::from_diagonal(&roots) * v.transpose());
    }
    Err(Error::FactorizationFailure { jitter })
}

/// Canonical metric `d(s,t) = (E|X_s - X_t|²)^{1/2}`.
pub fn canonical_metric(spec: &GaussianProcessSpec) -> Result<FiniteMetricSpace> {
    spec.validate()?;
    match spec {
        GaussianProcessSpec::Embed(p) => FiniteMetricSpace::from_points(p),
        GaussianProcessSpec::Cov(c) => {
            let n = c.len();
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let sq = c[i][i] + c[j][j] - 2.0 * c[i][j];
                    if sq < -DEGENERATE_TOL {
                        return Err(Error::DegenerateCovariance { i, j, value: sq });
                    }
                    let d = sq.max(0.0).sqrt();
                    dist[i * n + j] = d;
                    dist[j * n + i] = d;
                }
            }
            FiniteMetricSpace::from_flat(n, dist)
        }
    }
}

/// Draws `X = F g` with `g` standard Gaussian.
#[derive(Debug, Clone)]
pub struct ProcessSampler {
    factor: DMatrix<f64>,
}

impl ProcessSampler {
    pub fn len(&self) -> usize {
        self.factor.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows `range` of the sample matrix under `seed`, row-major.
    fn block(&self, seed: u64, block: u64, rows: usize) -> Vec<f64> {
        let (n, m) = self.factor.shape();
        let mut rng = rng::stream(seed, block);
        let mut out = Vec::with_capacity(rows * n);
        let mut g = DVector::zeros(m);
        for _ in 0..rows {
            for k in 0..m {
                g[k] = StandardNormal.sample(&mut rng);
            }
            let x = &self.factor * &g;
            out.extend(x.iter());
        }
        out
    }

    /// Apply `f` to every block of `n_samples` rows in parallel; results come
    /// back in block order.
    pub fn map_blocks<T, F>(&self, n_samples: usize, seed: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[f64], usize) -> T + Sync,
    {
        let n = self.len();
        let spans: Vec<_> = rng::blocks(n_samples).collect();
        spans
            .into_par_iter()
            .map(|(b, range)| {
                let rows = range.len();
                let data = self.block(seed, b, rows);
                debug_assert_eq!(data.len(), rows * n);
                f(&data, rows)
            })
            .collect()
    }
}

/// `n_samples × n` matrix of i.i.d. path draws, row-major.
pub fn sample_paths(spec: &GaussianProcessSpec, n_samples: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be at least 1".into()));
    }
    let sampler = spec.sampler()?;
    let n = sampler.len();
    let blocks = sampler.map_blocks(n_samples, seed, |data, _| data.to_vec());
    Ok(blocks
        .into_iter()
        .flat_map(|b| b.chunks(n).map(<[f64]>::to_vec).collect::<Vec<_>>())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsupEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub confidence_95: (f64, f64),
    /// Sample standard deviation of `max_t X_t`.
    pub sd: f64,
}

/// Monte Carlo estimate of `E max_t X_t` (plain sample mean).
pub fn estimate_esup(spec: &GaussianProcessSpec, n_samples: usize, seed: u64) -> Result<EsupEstimate> {
    if n_samples < 100 {
        return Err(Error::Domain(format!(
            "estimate_esup needs at least 100 samples, got {n_samples}"
        )));
    }
    let sampler = spec.sampler()?;
    let n = sampler.len();
    let maxima: Vec<f64> = sampler
        .map_blocks(n_samples, seed, |data, _| {
            data.chunks(n)
                .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect();
    let (mean, var) = stats::mean_var(&maxima);
    let sd = var.sqrt();
    let std_error = sd / (n_samples as f64).sqrt();
    Ok(EsupEstimate {
        mean,
        std_error,
        n_samples,
        confidence_95: (mean - 1.96 * std_error, mean + 1.96 * std_error),
        sd,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTailRecord {
    pub pair: (usize, usize),
    pub lambda: f64,
    pub empirical: f64,
    pub bound: f64,
    pub stderr: f64,
    pub violation: bool,
}

/// Compare `P[X_a - X_b > λ]` with `exp(-λ²/(2 d(a,b)²))` for every pair and
/// every λ on the grid.
pub fn pairwise_tail_check(
    spec: &GaussianProcessSpec,
    pairs: &[(usize, usize)],
    lambdas: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<PairTailRecord>> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be at least 1".into()));
    }
    let metric = canonical_metric(spec)?;
    for &(a, b) in pairs {
        if a >= metric.len() || b >= metric.len() {
            return Err(Error::Domain(format!("pair ({a},{b}) out of range")));
        }
        if metric.d(a, b) <= 0.0 {
            return Err(Error::ZeroDistancePair(a, b));
        }
    }
    let sampler = spec.sampler()?;
    let n = sampler.len();
    let cells = pairs.len() * lambdas.len();
    let per_block = sampler.map_blocks(n_samples, seed, |data, _| {
        let mut hits = vec![0usize; cells];
        for row in data.chunks(n) {
            for (p, &(a, b)) in pairs.iter().enumerate() {
                let inc = row[a] - row[b];
                for (l, &lambda) in lambdas.iter().enumerate() {
                    if inc > lambda {
                        hits[p * lambdas.len() + l] += 1;
                    }
                }
            }
        }
        hits
    });
    let mut hits = vec![0usize; cells];
    for block in per_block {
        for (h, x) in hits.iter_mut().zip(block) {
            *h += x;
        }
    }
    let mut out = Vec::with_capacity(cells);
    for (p, &(a, b)) in pairs.iter().enumerate() {
        let d = metric.d(a, b);
        for (l, &lambda) in lambdas.iter().enumerate() {
            let bound = (-lambda * lambda / (2.0 * d * d)).exp();
            let r = TailRecord::new(lambda, hits[p * lambdas.len() + l], n_samples, bound);
            out.push(PairTailRecord {
                pair: (a, b),
                lambda,
                empirical: r.empirical,
                bound,
                stderr: r.stderr,
                violation: r.violation,
            });
        }
    }
    Ok(out)
}
