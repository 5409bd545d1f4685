//! Sherrington–Kirkpatrick model: Hamiltonian, exact partition functions by
//! Gray-code enumeration, Gibbs expectations, Metropolis sampling, and the
//! quenched free energy over disorder.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::stats::{batch_means_stderr, mean_var};
use crate::{Error, Result};

/// Largest `N` for exhaustive enumeration.
pub const ENUMERATION_LIMIT: usize = 24;

/// Flips between exact recomputations of the energy and local fields.
const RESYNC_EVERY: u64 = 1 << 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct SKInstance {
    n: usize,
    couplings: Vec<f64>,
    h: f64,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    #[serde(rename = "N")]
    n: usize,
    couplings: Vec<f64>,
    h: f64,
}

impl TryFrom<RawInstance> for SKInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        SKInstance::new(raw.n, raw.couplings, raw.h)
    }
}

impl From<SKInstance> for RawInstance {
    fn from(s: SKInstance) -> Self {
        RawInstance {
            n: s.n,
            couplings: s.couplings,
            h: s.h,
        }
    }
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    // row-major upper triangle, i < j
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl SKInstance {
    /// Couplings `g_ij`, `i < j`, in row-major order.
    pub fn new(n: usize, couplings: Vec<f64>, h: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("N must be positive".into()));
        }
        let want = n * (n - 1) / 2;
        if couplings.len() != want {
            return Err(Error::InvalidInstance(format!(
                "{} couplings for N = {n}, expected {want}",
                couplings.len()
            )));
        }
        if couplings.iter().any(|g| !g.is_finite()) || !h.is_finite() {
            return Err(Error::InvalidInstance("couplings and field must be finite".into()));
        }
        Ok(Self { n, couplings, h })
    }

    /// Standard normal couplings from stream `idx` of `seed`.
    pub fn random(n: usize, h: f64, seed: u64, idx: u64) -> Result<Self> {
        let mut rng = crate::rng::stream(seed, idx);
        let couplings = (0..n * n.saturating_sub(1) / 2)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        Self::new(n, couplings, h)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("SK instance: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn field(&self) -> f64 {
        self.h
    }

    pub fn g(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.couplings[pair_index(self.n, i, j)],
            std::cmp::Ordering::Greater => self.couplings[pair_index(self.n, j, i)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// Copy with the field replaced.
    pub fn with_field(&self, h: f64) -> Self {
        Self { h, ..self.clone() }
    }

    /// Copy with every coupling touching spin `i` negated.
    pub fn gauge_flip(&self, i: usize) -> Self {
        let mut out = self.clone();
        for j in 0..self.n {
            if j != i {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                out.couplings[pair_index(self.n, a, b)] *= -1.0;
            }
        }
        out
    }

    /// `L_i = N^{-1/2} Σ_{j≠i} g_ij σ_j + h`, so `H = -½ Σ σ_i (L_i - h) - h Σ σ_i`.
    fn local_fields(&self, sigma: &[i8]) -> Vec<f64> {
        let scale = 1.0 / (self.n as f64).sqrt();
        (0..self.n)
            .map(|i| {
                let s: f64 = (0..self.n)
                    .filter(|&j| j != i)
                    .map(|j| self.g(i, j) * f64::from(sigma[j]))
                    .sum();
                scale * s + self.h
            })
            .collect()
    }

    /// Dense `N × N` matrix of `g_ij / √N` with zero diagonal.
    fn scaled_matrix(&self) -> Vec<f64> {
        let n = self.n;
        let scale = 1.0 / (n as f64).sqrt();
        let mut j = vec![0.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let g = scale * self.couplings[pair_index(n, a, b)];
                j[a * n + b] = g;
                j[b * n + a] = g;
            }
        }
        j
    }

    fn energy_unchecked(&self, sigma: &[i8]) -> f64 {
        let scale = 1.0 / (self.n as f64).sqrt();
        let mut pair = 0.0;
        let mut k = 0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                pair += self.couplings[k] * f64::from(sigma[i] * sigma[j]);
                k += 1;
            }
        }
        let mag: f64 = sigma.iter().map(|&s| f64::from(s)).sum();
        -scale * pair - self.h * mag
    }
}

/// `H_N(σ) = -N^{-1/2} Σ_{i<j} g_ij σ_i σ_j - h Σ σ_i`.
pub fn hamiltonian(instance: &SKInstance, sigma: &[i8]) -> Result<f64> {
    if sigma.len() != instance.n {
        return Err(Error::BadConfiguration(format!(
            "configuration has {} spins, instance has {}",
            sigma.len(),
            instance.n
        )));
    }
    if sigma.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::BadConfiguration("spins must be +1 or -1".into()));
    }
    Ok(instance.energy_unchecked(sigma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    beta: f64,
}

impl ThermalParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("inverse temperature must be >= 0, got {beta}")));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `ξ(x) = β x² / 2`
    pub fn xi(&self, x: f64) -> f64 {
        self.beta * x * x / 2.0
    }
}

/// Running `log Σ exp(x_k)` together with `Σ exp(x_k) a_k` for one
/// observable, both relative to the running maximum.
#[derive(Clone, Copy)]
struct LogSumExp {
    max: f64,
    sum: f64,
    weighted: f64,
}

impl LogSumExp {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            weighted: 0.0,
        }
    }

    #[inline]
    fn push(&mut self, x: f64, a: f64) {
        if x > self.max {
            let r = (self.max - x).exp();
            self.sum = self.sum * r + 1.0;
            self.weighted = self.weighted * r + a;
            self.max = x;
        } else {
            let w = (x - self.max).exp();
            self.sum += w;
            self.weighted += w * a;
        }
    }

    fn merge(&mut self, other: &Self) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max > self.max {
            let r = (self.max - other.max).exp();
            self.sum = self.sum * r + other.sum;
            self.weighted = self.weighted * r + other.weighted;
            self.max = other.max;
        } else {
            let r = (other.max - self.max).exp();
            self.sum += other.sum * r;
            self.weighted += other.weighted * r;
        }
    }

    fn log(&self) -> f64 {
        self.max + self.sum.ln()
    }

    fn mean(&self) -> f64 {
        self.weighted / self.sum
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "config")]
pub enum Observable {
    Energy,
    /// `N^{-1} Σ σ_i`
    Magnetization,
    /// `N^{-1} Σ σ_i τ_i` against a fixed `τ`.
    Overlap(Vec<i8>),
}

fn check_size(n: usize) -> Result<()> {
    if n > ENUMERATION_LIMIT {
        return Err(Error::SizeLimitExceeded {
            what: "spins for exact enumeration",
            size: n,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// Visit all `2^N` configurations in Gray-code order, calling
/// `visit(sigma, energy)` for each. Spins start at all `+1`.
fn gray_walk(instance: &SKInstance, mut visit: impl FnMut(&[i8], f64)) {
    let n = instance.n;
    let coupling = instance.scaled_matrix();
    let mut sigma = vec![1i8; n];
    let mut fields = instance.local_fields(&sigma);
    let mut energy = instance.energy_unchecked(&sigma);
    visit(&sigma, energy);
    let total: u64 = 1 << n;
    for k in 1..total {
        let i = k.trailing_zeros() as usize;
        let old = f64::from(sigma[i]);
        energy += 2.0 * old * fields[i];
        sigma[i] = -sigma[i];
        let delta = -2.0 * old;
        for (f, c) in fields.iter_mut().zip(&coupling[i * n..(i + 1) * n]) {
            *f += delta * c;
        }
        if k % RESYNC_EVERY == 0 {
            fields = instance.local_fields(&sigma);
            energy = instance.energy_unchecked(&sigma);
        }
        visit(&sigma, energy);
    }
}

/// Blocked accumulation so that each partial sum covers a bounded number of
/// terms.
fn enumerate(instance: &SKInstance, beta: f64, obs: impl Fn(&[i8], f64) -> f64) -> LogSumExp {
    let mut total = LogSumExp::new();
    let mut chunk = LogSumExp::new();
    let mut count = 0u64;
    gray_walk(instance, |sigma, energy| {
        chunk.push(-beta * energy, obs(sigma, energy));
        count += 1;
        if count % RESYNC_EVERY == 0 {
            total.merge(&chunk);
            chunk = LogSumExp::new();
        }
    });
    total.merge(&chunk);
    total
}

/// `log Z_N = log Σ_σ exp(-β H_N(σ))`.
pub fn log_partition_exact(instance: &SKInstance, beta: f64) -> Result<f64> {
    ThermalParams::new(beta)?;
    check_size(instance.n)?;
    if beta == 0.0 {
        return Ok(instance.n as f64 * std::f64::consts::LN_2);
    }
    Ok(enumerate(instance, beta, |_, _| 0.0).log())
}

/// `(1/N) log Z_N`, exactly `log 2` at `β = 0`.
pub fn log_partition_per_site(instance: &SKInstance, beta: f64) -> Result<f64> {
    if beta == 0.0 {
        ThermalParams::new(beta)?;
        check_size(instance.n)?;
        return Ok(std::f64::consts::LN_2);
    }
    Ok(log_partition_exact(instance, beta)? / instance.n as f64)
}

/// Gibbs average of `observable` under `μ_β(σ) ∝ exp(-β H_N(σ))`.
pub fn gibbs_expectation_exact(instance: &SKInstance, beta: f64, observable: &Observable) -> Result<f64> {
    ThermalParams::new(beta)?;
    check_size(instance.n)?;
    let n = instance.n as f64;
    let acc = match observable {
        Observable::Energy => enumerate(instance, beta, |_, e| e),
        Observable::Magnetization => enumerate(instance, beta, |s, _| {
            s.iter().map(|&x| f64::from(x)).sum::<f64>() / n
        }),
        Observable::Overlap(tau) => {
            if tau.len() != instance.n || tau.iter().any(|&t| t != 1 && t != -1) {
                return Err(Error::BadConfiguration("overlap reference must be N spins of +-1".into()));
            }
            enumerate(instance, beta, |s, _| {
                s.iter().zip(tau).map(|(&a, &b)| f64::from(a * b)).sum::<f64>() / n
            })
        }
    };
    Ok(acc.mean())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyEstimate {
    /// Mean of `(1/N) log Z_N` over disorder.
    pub phi: f64,
    pub std_error: f64,
    pub n_disorder: usize,
    /// `-phi / β`, absent at `β = 0`.
    pub f: Option<f64>,
}

/// Per-site log partition function averaged over `n_disorder` independent
/// coupling draws; draw `d` uses stream `d` of `seed`.
pub fn quenched_free_energy(n: usize, beta: f64, h: f64, n_disorder: usize, seed: u64) -> Result<FreeEnergyEstimate> {
    ThermalParams::new(beta)?;
    check_size(n)?;
    if n_disorder < 10 {
        return Err(Error::Domain(format!("need at least 10 disorder draws, got {n_disorder}")));
    }
    if beta == 0.0 {
        // log Z_N = N log 2 for every draw
        return Ok(FreeEnergyEstimate {
            phi: std::f64::consts::LN_2,
            std_error: 0.0,
            n_disorder,
            f: None,
        });
    }
    let values = (0..n_disorder as u64)
        .into_par_iter()
        .map(|d| log_partition_per_site(&SKInstance::random(n, h, seed, d)?, beta))
        .collect::<Result<Vec<f64>>>()?;
    let (phi, var) = mean_var(&values);
    Ok(FreeEnergyEstimate {
        phi,
        std_error: (var / n_disorder as f64).sqrt(),
        n_disorder,
        f: (beta > 0.0).then(|| -phi / beta),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetropolisTrace {
    pub energy: Vec<f64>,
    pub magnetization: Vec<f64>,
    pub acceptance_rate: f64,
}

impl MetropolisTrace {
    /// Trace mean and batch-means standard error over 20 batches.
    pub fn energy_estimate(&self) -> (f64, f64) {
        let (m, _) = mean_var(&self.energy);
        (m, batch_means_stderr(&self.energy, 20))
    }

    pub fn magnetization_estimate(&self) -> (f64, f64) {
        let (m, _) = mean_var(&self.magnetization);
        (m, batch_means_stderr(&self.magnetization, 20))
    }
}

/// Single-spin-flip Metropolis with sequential site order. One entry per
/// sweep is recorded once `burn_in` sweeps have passed.
pub fn metropolis_sampler(
    instance: &SKInstance,
    beta: f64,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
) -> Result<MetropolisTrace> {
    ThermalParams::new(beta)?;
    if burn_in > sweeps {
        return Err(Error::Domain(format!("burn-in {burn_in} exceeds {sweeps} sweeps")));
    }
    let n = instance.n;
    let coupling = instance.scaled_matrix();
    let mut rng = crate::rng::stream(seed, 0);
    let mut sigma: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let mut fields = instance.local_fields(&sigma);
    let mut energy = instance.energy_unchecked(&sigma);
    let mut mag: i64 = sigma.iter().map(|&s| i64::from(s)).sum();
    let mut accepted = 0usize;
    let mut energy_trace = Vec::with_capacity(sweeps - burn_in);
    let mut mag_trace = Vec::with_capacity(sweeps - burn_in);
    for sweep in 0..sweeps {
        for i in 0..n {
            let old = f64::from(sigma[i]);
            let delta_h = 2.0 * old * fields[i];
            let u: f64 = rng.random();
            if delta_h <= 0.0 || u < (-beta * delta_h).exp() {
                accepted += 1;
                sigma[i] = -sigma[i];
                energy += delta_h;
                mag += 2 * i64::from(sigma[i]);
                let d = -2.0 * old;
                for (f, c) in fields.iter_mut().zip(&coupling[i * n..(i + 1) * n]) {
                    *f += d * c;
                }
            }
        }
        if sweep % 256 == 255 {
            fields = instance.local_fields(&sigma);
            energy = instance.energy_unchecked(&sigma);
        }
        if sweep >= burn_in {
            energy_trace.push(energy);
            mag_trace.push(mag as f64 / n as f64);
        }
    }
    Ok(MetropolisTrace {
        energy: energy_trace,
        magnetization: mag_trace,
        acceptance_rate: accepted as f64 / (sweeps * n).max(1) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParisiRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub beta: f64,
    pub h: f64,
    pub phi: f64,
    pub stderr: f64,
    /// `log 2 + β²/4`
    pub reference: f64,
    /// `log 2 + (β²/4)(1 - 1/N)`
    pub annealed_bound: f64,
    /// `phi - reference`
    pub gap: f64,
}

/// Per-site free energy against the high-temperature limit `log 2 + β²/4`.
/// Size `N` draws its disorder from a seed derived from `(seed, N)`.
pub fn parisi_gap_report(
    beta: f64,
    h: f64,
    n_list: &[usize],
    n_disorder: usize,
    seed: u64,
) -> Result<Vec<ParisiRow>> {
    ThermalParams::new(beta)?;
    if beta > 1.0 {
        return Err(Error::Domain(format!("no reference value for beta = {beta} > 1")));
    }
    if h != 0.0 {
        return Err(Error::Domain(format!("no reference value for field h = {h}")));
    }
    let ln2 = std::f64::consts::LN_2;
    let reference = ln2 + beta * beta / 4.0;
    n_list
        .iter()
        .map(|&n| {
            let est = quenched_free_energy(n, beta, h, n_disorder, crate::rng::derive_seed(seed, n as u64))?;
            Ok(ParisiRow {
                n,
                beta,
                h,
                phi: est.phi,
                stderr: est.std_error,
                reference,
                annealed_bound: ln2 + beta * beta / 4.0 * (1.0 - 1.0 / n as f64),
                gap: est.phi - reference,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    /// `(1/N) log Z_N` on the grid.
    pub values: Vec<f64>,
    /// Smallest `2(λ φ(β_{k-1}) + (1-λ) φ(β_{k+1}) - φ(β_k))` with
    /// `λ = (β_{k+1} - β_k)/(β_{k+1} - β_{k-1})`; equals the usual centered
    /// second difference on a uniform grid.
    pub min_second_difference: f64,
}

pub fn beta_convexity_check(instance: &SKInstance, beta_grid: &[f64]) -> Result<ConvexityReport> {
    if beta_grid.len() < 3 {
        return Err(Error::Domain("beta grid needs at least 3 points".into()));
    }
    if beta_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("beta grid must be strictly increasing".into()));
    }
    let values = beta_grid
        .iter()
        .map(|&b| log_partition_per_site(instance, b))
        .collect::<Result<Vec<f64>>>()?;
    let min_second_difference = (1..beta_grid.len() - 1)
        .map(|k| {
            let lam = (beta_grid[k + 1] - beta_grid[k]) / (beta_grid[k + 1] - beta_grid[k - 1]);
            2.0 * (lam * values[k - 1] + (1.0 - lam) * values[k + 1] - values[k])
        })
        .fold(f64::INFINITY, f64::min);
    Ok(ConvexityReport {
        values,
        min_second_difference,
    })
}
