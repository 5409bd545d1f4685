//! Entropy and chaining functionals of a finite metric space, and the
//! comparison of those functionals against the Monte Carlo supremum.
//!
//! None of the absolute constants that relate these functionals to
//! `E sup X_t` are materialized; everything here is either a constant-free
//! inequality or a recorded ratio.

use serde::{Deserialize, Serialize};

use crate::gp::{self, EsupEstimate, GaussianProcessSpec};
use crate::metric::{self, CoverMode, EntropyProfile, FiniteMetricSpace};
use crate::stats::TailRecord;
use crate::{Error, Result};

/// Largest space for the exhaustive γ₂ search.
pub const GAMMA2_EXACT_LIMIT: usize = 12;

/// Smallest `u` for which the chaining series bound is evaluated.
pub const OMEGA_MIN_U: f64 = 4.0;

/// `∫₀^∞ √(log₂ N(ε)) dε`, exact for a piecewise-constant profile.
pub fn dudley_integral(profile: &EntropyProfile) -> f64 {
    profile
        .intervals()
        .map(|(a, b, count)| (b - a) * (count as f64).log2().sqrt())
        .sum()
}

/// `sup_ε ε √(log₂ N(ε))`, attained as a left limit at a breakpoint.
pub fn sudakov_bound(profile: &EntropyProfile) -> f64 {
    profile
        .breakpoints
        .iter()
        .enumerate()
        .map(|(j, &b)| b * (profile.left_limit(j) as f64).log2().sqrt())
        .fold(0.0, f64::max)
}

/// Largest admissible cardinality `2^(2^k)` for level `k ≥ 1` (1 for k = 0),
/// saturating at `usize::MAX`.
pub fn admissible_cap(k: usize) -> usize {
    if k == 0 {
        return 1;
    }
    match 1usize.checked_shl(k as u32) {
        Some(e) if e < usize::BITS as usize => 1usize << e,
        _ => usize::MAX,
    }
}

/// Sets `T_0, …, T_K` with `|T_0| = 1`, `|T_k| ≤ 2^(2^k)` and `T_K` the
/// whole index set. Sets need not be nested.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibleSequence {
    sets: Vec<Vec<usize>>,
}

impl AdmissibleSequence {
    /// Wrap the sets; admissibility is checked by the functionals that
    /// consume the sequence.
    pub fn new(sets: Vec<Vec<usize>>) -> Self {
        Self { sets }
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::AdmissibilityViolation(m));
        if self.sets.is_empty() {
            return bad("no sets".into());
        }
        if self.sets[0].len() != 1 {
            return bad(format!("|T_0| = {}", self.sets[0].len()));
        }
        for (k, set) in self.sets.iter().enumerate() {
            if set.is_empty() {
                return bad(format!("T_{k} is empty"));
            }
            if set.len() > admissible_cap(k) {
                return bad(format!("|T_{k}| = {} > {}", set.len(), admissible_cap(k)));
            }
            let mut seen = vec![false; n];
            for &t in set {
                if t >= n {
                    return bad(format!("T_{k} contains index {t} >= {n}"));
                }
                if std::mem::replace(&mut seen[t], true) {
                    return bad(format!("T_{k} repeats index {t}"));
                }
            }
        }
        let last = self.sets.last().unwrap();
        if last.len() != n {
            return bad(format!(
                "final set has {} of {n} points",
                last.len()
            ));
        }
        Ok(())
    }
}

/// `T_0` is the center of the space; `T_k` holds the first
/// `min(n, 2^(2^k))` points of the farthest-point traversal from it.
pub fn greedy_admissible_sequence(space: &FiniteMetricSpace) -> AdmissibleSequence {
    let n = space.len();
    let root = space.center();
    let (order, _) = space.farthest_point_order(root);
    let mut sets = vec![vec![root]];
    let mut k = 1;
    while sets.last().unwrap().len() < n {
        let take = admissible_cap(k).min(n);
        let mut set = order[..take].to_vec();
        set.sort_unstable();
        sets.push(set);
        k += 1;
    }
    AdmissibleSequence::new(sets)
}

/// `sup_t Σ_k 2^(k/2) d(t, T_k)`, an upper bound on γ₂.
pub fn gamma2_value(space: &FiniteMetricSpace, seq: &AdmissibleSequence) -> Result<f64> {
    seq.validate(space.len())?;
    Ok((0..space.len())
        .map(|t| {
            seq.sets()
                .iter()
                .enumerate()
                .map(|(k, set)| level_weight(k) * space.dist_to_set(t, set))
                .sum::<f64>()
        })
        .fold(0.0, f64::max))
}

/// `Σ_k 2^(k/2) sup_t d(t, T_k)`: the chaining bound with the supremum
/// pulled inside the sum.
pub fn sum_of_sups(space: &FiniteMetricSpace, seq: &AdmissibleSequence) -> f64 {
    seq.sets()
        .iter()
        .enumerate()
        .map(|(k, set)| {
            level_weight(k)
                * (0..space.len())
                    .map(|t| space.dist_to_set(t, set))
                    .fold(0.0, f64::max)
        })
        .sum()
}

fn level_weight(k: usize) -> f64 {
    2f64.powf(k as f64 / 2.0)
}

/// Exact γ₂ for `n ≤ 12`. With at most 16 points `T_2` can be the whole
/// space, so only `T_0` (one point) and `T_1` (at most four points) are
/// free: the minimum of `max_t [d(t,T_0) + √2 d(t,T_1)]` over all choices.
pub fn gamma2_exact_small(space: &FiniteMetricSpace) -> Result<f64> {
    let n = space.len();
    if n > GAMMA2_EXACT_LIMIT {
        return Err(Error::SizeLimitExceeded {
            what: "exact gamma2",
            size: n,
            limit: GAMMA2_EXACT_LIMIT,
        });
    }
    let w1 = level_weight(1);
    let masks: Vec<u32> = (1u32..(1 << n)).filter(|m| m.count_ones() <= 4).collect();
    // d(t, T_1) for every candidate T_1
    let to_t1: Vec<Vec<f64>> = masks
        .iter()
        .map(|&m| {
            (0..n)
                .map(|t| {
                    (0..n)
                        .filter(|&s| m >> s & 1 == 1)
                        .map(|s| space.d(t, s))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        })
        .collect();
    let mut best = f64::INFINITY;
    for root in 0..n {
        for d1 in &to_t1 {
            let v = (0..n)
                .map(|t| space.d(t, root) + w1 * d1[t])
                .fold(0.0, f64::max);
            best = best.min(v);
        }
    }
    Ok(best)
}

/// Value of the chaining series at `u` and its ratio to `e^{-u²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaSeries {
    /// `Σ_{k≥1} 2^(2^(k+1)) e^(-u² 2^(k-1))`
    pub series: f64,
    pub ratio: f64,
}

/// Sum the union bound over chain levels. Terms are handled in log space;
/// summation stops once a term no longer changes the ratio.
pub fn omega_series_bound(u: f64) -> Result<OmegaSeries> {
    if !(u >= OMEGA_MIN_U) || !u.is_finite() {
        return Err(Error::Domain(format!("omega series needs u >= 4, got {u}")));
    }
    let u2 = u * u;
    let ln2 = std::f64::consts::LN_2;
    let mut ratio = 0.0;
    for k in 1..64 {
        let pk = 2f64.powi(k);
        // log of term / e^{-u²}
        let log_rel = 2.0 * pk * ln2 - u2 * (pk / 2.0 - 1.0);
        let term = log_rel.exp();
        if ratio > 0.0 && term <= ratio * f64::EPSILON {
            break;
        }
        ratio += term;
    }
    Ok(OmegaSeries {
        series: ratio * (-u2).exp(),
        ratio,
    })
}

/// The chain-length functional `S` and the root `t_0` of the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainTail {
    pub s: f64,
    pub root: usize,
}

impl ChainTail {
    /// Upper bound on `P[sup_t (X_t - X_{t_0}) > u S]`.
    pub fn bound(&self, u: f64) -> Result<f64> {
        Ok(omega_series_bound(u)?.series.min(1.0))
    }
}

/// `S = sup_t Σ_{k≥1} 2^(k/2) d(π_k(t), π_{k-1}(t))` with `π_k` the
/// nearest-point map onto `T_k` (lowest index on ties).
pub fn chain_tail_functional(space: &FiniteMetricSpace, seq: &AdmissibleSequence) -> Result<ChainTail> {
    seq.validate(space.len())?;
    let sets = seq.sets();
    let s = (0..space.len())
        .map(|t| {
            let chain: Vec<usize> = sets.iter().map(|set| space.nearest_in(t, set)).collect();
            chain
                .windows(2)
                .enumerate()
                .map(|(k, w)| level_weight(k + 1) * space.d(w[1], w[0]))
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    Ok(ChainTail {
        s,
        root: sets[0][0],
    })
}

/// Empirical `P[sup_t (X_t - X_{root}) > u S]` on the grid `us`, each
/// against the chaining series bound.
pub fn empirical_chain_tail(
    spec: &GaussianProcessSpec,
    tail: &ChainTail,
    us: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<TailRecord>> {
    let bounds = us.iter().map(|&u| tail.bound(u)).collect::<Result<Vec<_>>>()?;
    let sampler = spec.sampler()?;
    let n = sampler.len();
    let per_block = sampler.map_blocks(n_samples, seed, |data, _| {
        let mut hits = vec![0usize; us.len()];
        for row in data.chunks(n) {
            let base = row[tail.root];
            let sup = row.iter().map(|x| x - base).fold(f64::NEG_INFINITY, f64::max);
            for (h, &u) in hits.iter_mut().zip(us) {
                if sup > u * tail.s {
                    *h += 1;
                }
            }
        }
        hits
    });
    let mut hits = vec![0usize; us.len()];
    for b in per_block {
        for (h, x) in hits.iter_mut().zip(b) {
            *h += x;
        }
    }
    Ok(us
        .iter()
        .zip(hits)
        .zip(bounds)
        .map(|((&u, h), bound)| TailRecord::new(u, h, n_samples, bound))
        .collect())
}

/// All chaining functionals of a process next to its Monte Carlo supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainingReport {
    pub n: usize,
    pub entropy_mode: CoverMode,
    pub esup_mc: EsupEstimate,
    pub sudakov: f64,
    pub dudley: f64,
    pub gamma2_greedy: f64,
    pub gamma2_exact: Option<f64>,
    /// Chain-length functional of the greedy sequence.
    pub s: f64,
    pub ratio_esup_gamma2: Option<f64>,
    pub ratio_esup_dudley: Option<f64>,
    pub ratio_esup_sudakov: Option<f64>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Assemble the report on the canonical metric of `spec`. The entropy
/// profile is exact up to 24 points (greedy beyond) and the exact γ₂ is
/// added up to 12 points.
pub fn sandwich_report(spec: &GaussianProcessSpec, n_samples: usize, seed: u64) -> Result<ChainingReport> {
    let space = gp::canonical_metric(spec)?;
    let n = space.len();
    let entropy_mode = if n <= metric::EXACT_COVER_LIMIT {
        CoverMode::Exact
    } else {
        CoverMode::Greedy
    };
    let profile = metric::entropy_profile(&space, entropy_mode)?;
    let sudakov = sudakov_bound(&profile);
    let dudley = dudley_integral(&profile);
    let seq = greedy_admissible_sequence(&space);
    let gamma2_greedy = gamma2_value(&space, &seq)?;
    let gamma2_exact = if n <= GAMMA2_EXACT_LIMIT {
        Some(gamma2_exact_small(&space)?)
    } else {
        None
    };
    let s = chain_tail_functional(&space, &seq)?.s;
    let esup_mc = gp::estimate_esup(spec, n_samples, seed)?;
    Ok(ChainingReport {
        n,
        entropy_mode,
        esup_mc,
        sudakov,
        dudley,
        gamma2_greedy,
        gamma2_exact,
        s,
        ratio_esup_gamma2: ratio(esup_mc.mean, gamma2_greedy),
        ratio_esup_dudley: ratio(esup_mc.mean, dudley),
        ratio_esup_sudakov: ratio(esup_mc.mean, sudakov),
    })
}
