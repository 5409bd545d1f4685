//! Exact discrete optimal transport, relative entropy, and the quadratic
//! transport-entropy comparison for measures on a one-dimensional Gaussian
//! grid.
//!
//! Transport problems are solved with the transportation simplex (u–v
//! potentials on a spanning-tree basis), which returns an optimal plan and
//! the dual potentials that certify it.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest number of atoms on either side of a transport problem.
pub const TRANSPORT_ATOM_LIMIT: usize = 512;

/// Tolerance on probability weights summing to one.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

fn atom_key(a: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 are the same atom
    a.iter().map(|x| (x + 0.0).to_bits()).collect()
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidInstance(m));
        if atoms.is_empty() {
            return Err(Error::EmptySet);
        }
        if atoms.len() != weights.len() {
            return bad(format!("{} atoms but {} weights", atoms.len(), weights.len()));
        }
        let dim = atoms[0].len();
        if atoms.iter().any(|a| a.len() != dim || a.iter().any(|x| !x.is_finite())) {
            return bad("atoms must be finite points of equal dimension".into());
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("weights must be nonnegative".into());
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return bad(format!("weights sum to {total}"));
        }
        let mut keys: Vec<Vec<u64>> = atoms.iter().map(|a| atom_key(a)).collect();
        keys.sort();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return bad("atoms must be distinct".into());
        }
        Ok(Self { atoms, weights })
    }

    /// One-dimensional measure from atom positions.
    pub fn on_line(xs: &[f64], weights: Vec<f64>) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect(), weights)
    }

    pub fn point_mass(atom: Vec<f64>) -> Self {
        Self {
            atoms: vec![atom],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Mean and variance of a one-dimensional measure.
    pub fn moments_1d(&self) -> (f64, f64) {
        let mean: f64 = self.atoms.iter().zip(&self.weights).map(|(a, w)| a[0] * w).sum();
        let var = self
            .atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| (a[0] - mean).powi(2) * w)
            .sum();
        (mean, var)
    }

    /// Atoms multiplied by `lambda`.
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.atoms
                .iter()
                .map(|a| a.iter().map(|x| x * lambda).collect())
                .collect(),
            self.weights.clone(),
        )
    }
}

/// `Σ μ_i log(μ_i / ν_i)` over the atoms of `mu`, matched to atoms of `nu`
/// by exact position.
pub fn kl_divergence(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    let index: HashMap<Vec<u64>, usize> = nu
        .atoms
        .iter()
        .enumerate()
        .map(|(j, a)| (atom_key(a), j))
        .collect();
    let mut kl = 0.0;
    for (i, (a, &w)) in mu.atoms.iter().zip(&mu.weights).enumerate() {
        if w == 0.0 {
            continue;
        }
        let ref_w = index.get(&atom_key(a)).map_or(0.0, |&j| nu.weights[j]);
        if ref_w <= 0.0 {
            return Err(Error::AbsoluteContinuity(i));
        }
        kl += w * (w / ref_w).ln();
    }
    Ok(kl.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cost {
    /// `w(x, y) = ‖x - y‖²`
    Quadratic,
    /// Explicit `|μ| × |ν|` table.
    Table(Vec<Vec<f64>>),
}

/// Transport plan with `μ` as row marginal and `ν` as column marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingPlan {
    rows: usize,
    cols: usize,
    mass: Vec<f64>,
}

impl CouplingPlan {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.cols + j]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.mass.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// Largest deviation of either marginal from the given weights.
    pub fn marginal_error(&self, mu: &[f64], nu: &[f64]) -> f64 {
        let r = self.row_sums().iter().zip(mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let c = self.col_sums().iter().zip(nu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        r.max(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportSolution {
    pub value: f64,
    pub plan: CouplingPlan,
    /// Largest dual infeasibility or primal–dual gap, relative to the cost
    /// scale `max(1, max |c|)`.
    pub certificate_residual: f64,
    pub pivots: usize,
}

/// Exact optimal transport cost between `mu` and `nu`.
pub fn transport_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &Cost) -> Result<TransportSolution> {
    for m in [mu, nu] {
        if m.len() > TRANSPORT_ATOM_LIMIT {
            return Err(Error::SizeLimitExceeded {
                what: "transport atoms per measure",
                size: m.len(),
                limit: TRANSPORT_ATOM_LIMIT,
            });
        }
    }
    let (m, n) = (mu.len(), nu.len());
    let c: Vec<f64> = match cost {
        Cost::Quadratic => {
            if mu.atoms[0].len() != nu.atoms[0].len() {
                return Err(Error::Domain("measures live in different dimensions".into()));
            }
            let mut c = Vec::with_capacity(m * n);
            for a in &mu.atoms {
                for b in &nu.atoms {
                    c.push(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum());
                }
            }
            c
        }
        Cost::Table(t) => {
            if t.len() != m || t.iter().any(|r| r.len() != n) {
                return Err(Error::Domain(format!("cost table must be {m} x {n}")));
            }
            if t.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::Domain("cost table must be finite".into()));
            }
            t.iter().flatten().copied().collect()
        }
    };
    // start from the north-west corner in coordinate order for 1-D inputs,
    // which is already the monotone coupling
    let row_order = order_1d(mu);
    let col_order = order_1d(nu);
    let supply: Vec<f64> = row_order.iter().map(|&i| mu.weights[i]).collect();
    let demand: Vec<f64> = col_order.iter().map(|&j| nu.weights[j]).collect();
    let permuted: Vec<f64> = row_order
        .iter()
        .flat_map(|&i| col_order.iter().map(move |&j| (i, j)))
        .map(|(i, j)| c[i * n + j])
        .collect();
    let sol = TransportSimplex::new(&supply, &demand, &permuted).solve()?;
    let mut mass = vec![0.0; m * n];
    for (&(pi, pj), &x) in sol.cells.iter().zip(&sol.flows) {
        mass[row_order[pi] * n + col_order[pj]] += x;
    }
    Ok(TransportSolution {
        value: sol.value,
        plan: CouplingPlan { rows: m, cols: n, mass },
        certificate_residual: sol.residual,
        pivots: sol.pivots,
    })
}

fn order_1d(m: &DiscreteMeasure) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..m.len()).collect();
    if m.atoms[0].len() == 1 {
        idx.sort_by(|&a, &b| m.atoms[a][0].total_cmp(&m.atoms[b][0]));
    }
    idx
}

struct TransportSimplex<'a> {
    supply: &'a [f64],
    demand: &'a [f64],
    cost: &'a [f64],
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    flows: Vec<f64>,
}

struct SimplexResult {
    cells: Vec<(usize, usize)>,
    flows: Vec<f64>,
    value: f64,
    residual: f64,
    pivots: usize,
}

/// Consecutive degenerate pivots after which entering cells are chosen by
/// Bland's rule.
const DEGENERATE_RUN: usize = 50;

impl<'a> TransportSimplex<'a> {
    fn new(supply: &'a [f64], demand: &'a [f64], cost: &'a [f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        // north-west corner; exactly m + n - 1 basic cells
        let mut cells = Vec::with_capacity(m + n - 1);
        let mut flows = Vec::with_capacity(m + n - 1);
        let (mut s, mut d) = (supply[0], demand[0]);
        let (mut i, mut j) = (0, 0);
        loop {
            if i == m - 1 && j == n - 1 {
                cells.push((i, j));
                flows.push(s.min(d).max(0.0));
                break;
            }
            let x = s.min(d).max(0.0);
            cells.push((i, j));
            flows.push(x);
            if (s <= d && i < m - 1) || j == n - 1 {
                d -= x;
                i += 1;
                s = supply[i];
            } else {
                s -= x;
                j += 1;
                d = demand[j];
            }
        }
        Self {
            supply,
            demand,
            cost,
            m,
            n,
            cells,
            flows,
        }
    }

    fn c(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j]
    }

    /// Tree adjacency: nodes `0..m` are rows, `m..m+n` columns.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (k, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push((self.m + j, k));
            adj[self.m + j].push((i, k));
        }
        adj
    }

    fn potentials(&self, adj: &[Vec<(usize, usize)>]) -> (Vec<f64>, Vec<f64>) {
        let total = self.m + self.n;
        let mut pot = vec![f64::NAN; total];
        pot[0] = 0.0;
        let mut stack = vec![0];
        while let Some(node) = stack.pop() {
            for &(next, k) in &adj[node] {
                if pot[next].is_nan() {
                    let (i, j) = self.cells[k];
                    // u_i + v_j = c_ij
                    pot[next] = self.c(i, j) - pot[node];
                    stack.push(next);
                }
            }
        }
        let v = pot.split_off(self.m);
        (pot, v)
    }

    /// Cells on the tree path from column `j` to row `i`, in order.
    fn path(&self, adj: &[Vec<(usize, usize)>], i: usize, j: usize) -> Vec<usize> {
        let total = self.m + self.n;
        let start = self.m + j;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; total];
        let mut seen = vec![false; total];
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == i {
                break;
            }
            for &(next, k) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, k));
                    queue.push_back(next);
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = i;
        while node != start {
            let (prev, k) = parent[node].expect("basis is a spanning tree");
            cells.push(k);
            node = prev;
        }
        cells.reverse();
        cells
    }

    fn solve(mut self) -> Result<SimplexResult> {
        let scale = self.cost.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        let eps = 1e-11 * scale;
        let max_pivots = 50 * self.m * self.n + 1000;
        let mut pivots = 0;
        let mut degenerate_run = 0;
        loop {
            let adj = self.adjacency();
            let (u, v) = self.potentials(&adj);
            let bland = degenerate_run >= DEGENERATE_RUN;
            let mut entering = None;
            let mut best = -eps;
            'scan: for i in 0..self.m {
                for j in 0..self.n {
                    let r = self.c(i, j) - u[i] - v[j];
                    if r < best {
                        entering = Some((i, j));
                        if bland {
                            break 'scan;
                        }
                        best = r;
                    }
                }
            }
            let Some((ei, ej)) = entering else {
                let residual = self.certificate(&u, &v) / scale;
                let value = self
                    .cells
                    .iter()
                    .zip(&self.flows)
                    .map(|(&(i, j), x)| self.c(i, j) * x)
                    .sum();
                return Ok(SimplexResult {
                    cells: self.cells,
                    flows: self.flows,
                    value,
                    residual,
                    pivots,
                });
            };
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::NonConvergence(max_pivots));
            }
            // cycle: entering (+), then alternating -, +, ... along the path
            let path = self.path(&adj, ei, ej);
            let minus: Vec<usize> = path.iter().step_by(2).copied().collect();
            let leave = *minus
                .iter()
                .min_by(|&&a, &&b| {
                    self.flows[a]
                        .total_cmp(&self.flows[b])
                        .then(self.cells[a].cmp(&self.cells[b]))
                })
                .expect("cycle has a decreasing cell");
            let theta = self.flows[leave];
            degenerate_run = if theta > 0.0 { 0 } else { degenerate_run + 1 };
            for (p, &k) in path.iter().enumerate() {
                if p % 2 == 0 {
                    self.flows[k] = (self.flows[k] - theta).max(0.0);
                } else {
                    self.flows[k] += theta;
                }
            }
            self.cells[leave] = (ei, ej);
            self.flows[leave] = theta;
        }
    }

    /// Dual infeasibility and primal–dual gap of the final basis.
    fn certificate(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.m {
            for j in 0..self.n {
                worst = worst.max(-(self.c(i, j) - u[i] - v[j]));
            }
        }
        let primal: f64 = self
            .cells
            .iter()
            .zip(&self.flows)
            .map(|(&(i, j), x)| self.c(i, j) * x)
            .sum();
        let dual: f64 = self.supply.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
            + self.demand.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        worst.max((primal - dual).abs())
    }
}

/// Standard Gaussian restricted to the uniform grid of `m` points on
/// `[-L, L]`, weights proportional to the density and renormalized.
pub fn discretize_gaussian(m: usize, half_width: f64) -> Result<DiscreteMeasure> {
    if m < 41 || m % 2 == 0 {
        return Err(Error::Domain(format!("grid size must be odd and >= 41, got {m}")));
    }
    if !(half_width >= 6.0) || !half_width.is_finite() {
        return Err(Error::Domain(format!("half-width must be >= 6, got {half_width}")));
    }
    let xs = grid(m, half_width);
    let dens: Vec<f64> = xs.iter().map(|x| (-x * x / 2.0).exp()).collect();
    let total: f64 = dens.iter().sum();
    DiscreteMeasure::on_line(&xs, dens.iter().map(|d| d / total).collect())
}

/// Grid points `-L + 2L k/(m-1)`, symmetric about 0 by construction.
fn grid(m: usize, half_width: f64) -> Vec<f64> {
    let mid = (m - 1) / 2;
    let h = half_width / mid as f64;
    (0..m)
        .map(|k| {
            let off = k as f64 - mid as f64;
            if k == mid {
                0.0
            } else {
                off * h
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T2Result {
    /// Quadratic transport cost `T(μ, γ)`.
    pub transport: f64,
    /// `2 ∫ log f dμ`
    pub bound: f64,
    pub margin: f64,
}

/// Margin in the quadratic transport–entropy inequality for the measure
/// `dμ ∝ f dγ` on the `(m, L)` Gaussian grid.
pub fn t2_check(density: &[f64], m: usize, half_width: f64) -> Result<T2Result> {
    let gamma = discretize_gaussian(m, half_width)?;
    if density.len() != m {
        return Err(Error::Domain(format!(
            "density has {} values for a grid of {m}",
            density.len()
        )));
    }
    if density.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::Domain("density values must be positive and finite".into()));
    }
    let raw: Vec<f64> = density.iter().zip(gamma.weights()).map(|(f, g)| f * g).collect();
    let total: f64 = raw.iter().sum();
    let mu = DiscreteMeasure::new(gamma.atoms().to_vec(), raw.iter().map(|w| w / total).collect())?;
    let transport = transport_cost(&mu, &gamma, &Cost::Quadratic)?.value;
    let bound = 2.0 * kl_divergence(&mu, &gamma)?;
    Ok(T2Result {
        transport,
        bound,
        margin: bound - transport,
    })
}

/// Grid point positions for `(m, L)`, as used by [`discretize_gaussian`].
pub fn grid_points(m: usize, half_width: f64) -> Result<Vec<f64>> {
    Ok(discretize_gaussian(m, half_width)?.atoms().iter().map(|a| a[0]).collect())
}

/// Positive density `1 + Σ c_k cos(ω_k x + φ_k)` on the grid with three
/// random terms and `Σ |c_k| = 0.9`.
pub fn trig_perturbation(xs: &[f64], seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = crate::rng::stream(seed, 0);
    let raw: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm: f64 = raw.iter().map(|c: &f64| c.abs()).sum::<f64>().max(1e-12);
    let terms: Vec<(f64, f64, f64)> = raw
        .iter()
        .map(|c| {
            let omega = rng.random_range(0.2..2.0);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (0.9 * c / norm, omega, phase)
        })
        .collect();
    xs.iter()
        .map(|&x| 1.0 + terms.iter().map(|(c, w, p)| c * (w * x + p).cos()).sum::<f64>())
        .collect()
}

/// Density vectors from CSV, one vector per row.
pub fn densities_from_csv<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    crate::metric::read_csv_matrix(reader)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_examples() {
        let nu = DiscreteMeasure::on_line(&[0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(kl_divergence(&nu, &nu).unwrap(), 0.0);
        let point = DiscreteMeasure::point_mass(vec![1.0]);
        assert!((kl_divergence(&point, &nu).unwrap() - 2f64.ln()).abs() < 1e-15);
        let mu = DiscreteMeasure::on_line(&[0.0, 1.0], vec![0.75, 0.25]).unwrap();
        let want = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
        assert!((kl_divergence(&mu, &nu).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.13081).abs() < 1e-5);
        let off = DiscreteMeasure::point_mass(vec![2.0]);
        assert!(matches!(kl_divergence(&off, &nu), Err(Error::AbsoluteContinuity(0))));
    }

    #[test]
    fn measure_validation() {
        assert!(DiscreteMeasure::on_line(&[0.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::on_line(&[0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::on_line(&[0.0, 1.0], vec![1.5, -0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn transport_examples() {
        let mu = DiscreteMeasure::on_line(&[0.0, 1.0, 2.5], vec![0.2, 0.3, 0.5]).unwrap();
        let s = transport_cost(&mu, &mu, &Cost::Quadratic).unwrap();
        assert_eq!(s.value, 0.0);
        for i in 0..3 {
            assert!((s.plan.get(i, i) - mu.weights()[i]).abs() < 1e-15);
        }
        let a = DiscreteMeasure::point_mass(vec![0.0]);
        let b = DiscreteMeasure::point_mass(vec![3.0]);
        assert_eq!(transport_cost(&a, &b, &Cost::Quadratic).unwrap().value, 9.0);
        let u = DiscreteMeasure::on_line(&[0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let w = DiscreteMeasure::on_line(&[3.0, 2.0], vec![0.5, 0.5]).unwrap();
        let s = transport_cost(&u, &w, &Cost::Quadratic).unwrap();
        assert!((s.value - 4.0).abs() < 1e-12);
        // 0 -> 2 (index 1), 1 -> 3 (index 0)
        assert!((s.plan.get(0, 1) - 0.5).abs() < 1e-15);
        assert!((s.plan.get(1, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn table_cost_assignment() {
        // 3x3 assignment with uniform weights: optimum picks the diagonal of
        // the permuted minimum, brute-forced over all 6 permutations.
        let t = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let third = vec![1.0 / 3.0; 3];
        let mu = DiscreteMeasure::new(vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]], third.clone()).unwrap();
        let nu = DiscreteMeasure::new(vec![vec![5.0, 0.0], vec![0.0, 5.0], vec![5.0, 5.0]], third).unwrap();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let best = perms
            .iter()
            .map(|p| (0..3).map(|i| t[i][p[i]]).sum::<f64>() / 3.0)
            .fold(f64::INFINITY, f64::min);
        let s = transport_cost(&mu, &nu, &Cost::Table(t)).unwrap();
        assert!((s.value - best).abs() < 1e-12, "{} vs {best}", s.value);
        assert!(s.certificate_residual <= 1e-8);
        assert!(s.plan.marginal_error(mu.weights(), nu.weights()) < 1e-12);
        assert!(transport_cost(&mu, &nu, &Cost::Table(vec![vec![1.0]])).is_err());
    }

    #[test]
    fn size_limit() {
        let n = TRANSPORT_ATOM_LIMIT + 1;
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let big = DiscreteMeasure::on_line(&xs, vec![1.0 / n as f64; n]);
        // weights of 513 equal parts may not sum to 1 within 1e-12; rebuild exactly
        let big = big.or_else(|_| {
            let mut w = vec![1.0 / n as f64; n];
            let rest: f64 = w[1..].iter().sum();
            w[0] = 1.0 - rest;
            DiscreteMeasure::on_line(&xs, w)
        });
        let big = big.unwrap();
        assert!(matches!(
            transport_cost(&big, &big, &Cost::Quadratic),
            Err(Error::SizeLimitExceeded { .. })
        ));
    }

    #[test]
    fn gaussian_grid_moments() {
        for (m, l, tol) in [(401, 8.0, 1e-4), (41, 6.0, 5e-3)] {
            let g = discretize_gaussian(m, l).unwrap();
            let w = g.weights();
            for k in 0..m / 2 {
                assert_eq!(w[k], w[m - 1 - k]);
            }
            let (mean, var) = g.moments_1d();
            assert!(mean.abs() < 1e-12, "mean {mean}");
            assert!((var - 1.0).abs() < tol, "var {var}");
        }
        assert!(discretize_gaussian(40, 8.0).is_err());
        assert!(discretize_gaussian(43, 5.0).is_err());
        assert!(discretize_gaussian(42, 8.0).is_err());
    }

    #[test]
    fn t2_trivial_density() {
        let r = t2_check(&vec![1.0; 41], 41, 6.0).unwrap();
        assert!(r.transport.abs() < 1e-12 && r.bound.abs() < 1e-12);
        assert!(t2_check(&vec![1.0; 40], 41, 6.0).is_err());
        let mut bad = vec![1.0; 41];
        bad[3] = 0.0;
        assert!(t2_check(&bad, 41, 6.0).is_err());
    }
}
