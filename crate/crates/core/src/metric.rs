//! Finite metric spaces, ε-nets and covering numbers.
//!
//! Balls are closed (`d <= eps`) and net centers are always points of the
//! space itself. Zero distances between distinct indices are accepted, so
//! pseudometrics such as the canonical metric of a degenerate process are
//! valid inputs.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative slack for the symmetry and triangle checks, measured against the
/// largest distance in the matrix.
pub const METRIC_RTOL: f64 = 1e-9;

/// Largest space the exact set-cover search accepts.
pub const EXACT_COVER_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
}

/// Validate a raw distance matrix. Nothing is repaired: every defect is an
/// error naming a witness.
pub fn validate_metric(raw: &[Vec<f64>]) -> Result<FiniteMetricSpace> {
    let n = raw.len();
    if n == 0 {
        return Err(Error::EmptySet);
    }
    let mut dist = Vec::with_capacity(n * n);
    for (row, r) in raw.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NotSquare {
                row,
                len: r.len(),
                expected: n,
            });
        }
        dist.extend_from_slice(r);
    }
    FiniteMetricSpace::from_flat(n, dist)
}

impl FiniteMetricSpace {
    /// Build from a row-major `n*n` buffer, validating every axiom.
    pub fn from_flat(n: usize, dist: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySet);
        }
        assert_eq!(dist.len(), n * n, "distance buffer must be n*n");
        let at = |i: usize, j: usize| dist[i * n + j];
        for i in 0..n {
            for j in 0..n {
                if !at(i, j).is_finite() {
                    return Err(Error::NonFinite(i, j));
                }
            }
        }
        let scale = dist.iter().fold(0.0f64, |m, &d| m.max(d.abs()));
        let slack = METRIC_RTOL * scale;
        for i in 0..n {
            if at(i, i) != 0.0 {
                return Err(Error::NonzeroDiagonal(i, at(i, i)));
            }
            for j in 0..n {
                if at(i, j) < 0.0 {
                    return Err(Error::NegativeDistance {
                        i,
                        j,
                        value: at(i, j),
                    });
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (at(i, j) - at(j, i)).abs() > slack {
                    return Err(Error::Asymmetry {
                        i,
                        j,
                        dij: at(i, j),
                        dji: at(j, i),
                    });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if at(i, k) > at(i, j) + at(j, k) + slack {
                        return Err(Error::TriangleViolation {
                            i,
                            j,
                            k,
                            dik: at(i, k),
                            dij: at(i, j),
                            djk: at(j, k),
                        });
                    }
                }
            }
        }
        Ok(Self { n, dist })
    }

    /// Euclidean distances between the given points.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclidean(&points[i], &points[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::from_flat(n, dist)
    }

    /// Read a distance matrix from CSV: one row per point, comma-separated
    /// reals, no header.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let rows = read_csv_matrix(reader)?;
        validate_metric(&rows)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Distance from `t` to the nearest member of `set`.
    pub fn dist_to_set(&self, t: usize, set: &[usize]) -> f64 {
        set.iter()
            .map(|&s| self.d(t, s))
            .fold(f64::INFINITY, f64::min)
    }

    /// Nearest member of `set` to `t`; ties go to the lowest index.
    pub fn nearest_in(&self, t: usize, set: &[usize]) -> usize {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for &s in set {
            let d = self.d(t, s);
            if d < best_d || (d == best_d && s < best) {
                best = s;
                best_d = d;
            }
        }
        best
    }

    /// Distinct positive pairwise distances in increasing order.
    pub fn distinct_distances(&self) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.n)
            .flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.d(i, j))
            .filter(|&d| d > 0.0)
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Same space with every distance multiplied by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Self {
        assert!(lambda > 0.0 && lambda.is_finite());
        Self {
            n: self.n,
            dist: self.dist.iter().map(|d| d * lambda).collect(),
        }
    }

    /// Point minimizing the largest distance to the others, lowest index on
    /// ties.
    pub fn center(&self) -> usize {
        let mut best = 0;
        let mut best_ecc = f64::INFINITY;
        for i in 0..self.n {
            let ecc = self.row(i).iter().copied().fold(0.0, f64::max);
            if ecc < best_ecc {
                best = i;
                best_ecc = ecc;
            }
        }
        best
    }

    /// Farthest-point traversal from `start`: the visiting order and, for
    /// each visited point, its distance to the points visited before it
    /// (infinite for `start`). Ties go to the lowest index. The radii are
    /// nonincreasing.
    pub fn farthest_point_order(&self, start: usize) -> (Vec<usize>, Vec<f64>) {
        let n = self.n;
        let mut order = Vec::with_capacity(n);
        let mut radii = Vec::with_capacity(n);
        let mut to_set = vec![f64::INFINITY; n];
        let mut taken = vec![false; n];
        let mut next = start;
        let mut next_r = f64::INFINITY;
        for _ in 0..n {
            order.push(next);
            radii.push(next_r);
            taken[next] = true;
            for (j, slot) in to_set.iter_mut().enumerate() {
                *slot = slot.min(self.d(next, j));
            }
            next_r = f64::NEG_INFINITY;
            for j in 0..n {
                if !taken[j] && to_set[j] > next_r {
                    next = j;
                    next_r = to_set[j];
                }
            }
        }
        (order, radii)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Parse a headerless CSV of reals into rows.
pub(crate) fn read_csv_matrix<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Config(format!("csv row {i}: {e}")))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::Config(format!("csv row {i}: {f:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverMode {
    Exact,
    Greedy,
}

/// Farthest-point greedy ε-net, returned in ascending index order. The
/// centers cover the space and are pairwise more than `eps` apart.
pub fn greedy_net(space: &FiniteMetricSpace, eps: f64) -> Vec<usize> {
    assert!(eps > 0.0, "eps must be positive");
    let (order, radii) = space.farthest_point_order(0);
    let mut net: Vec<usize> = order
        .into_iter()
        .zip(radii)
        .take_while(|&(_, r)| r > eps)
        .map(|(i, _)| i)
        .collect();
    net.sort_unstable();
    net
}

/// Number of closed ε-balls centered in the space needed to cover it.
pub fn covering_number(space: &FiniteMetricSpace, eps: f64, mode: CoverMode) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    match mode {
        CoverMode::Greedy => Ok(greedy_net(space, eps).len()),
        CoverMode::Exact => {
            check_exact_size(space)?;
            let incumbent = greedy_net(space, eps).len();
            Ok(exact_cover(space, eps, incumbent))
        }
    }
}

fn check_exact_size(space: &FiniteMetricSpace) -> Result<()> {
    if space.len() > EXACT_COVER_LIMIT {
        return Err(Error::SizeLimitExceeded {
            what: "exact covering number",
            size: space.len(),
            limit: EXACT_COVER_LIMIT,
        });
    }
    Ok(())
}

/// Minimum set cover by branch and bound. `incumbent` must be the size of a
/// known cover.
fn exact_cover(space: &FiniteMetricSpace, eps: f64, incumbent: usize) -> usize {
    let n = space.len();
    let balls: Vec<u32> = (0..n)
        .map(|c| {
            (0..n)
                .filter(|&j| space.d(c, j) <= eps)
                .fold(0u32, |m, j| m | (1 << j))
        })
        .collect();
    // covered_by[e]: centers whose ball contains e
    let covered_by: Vec<Vec<usize>> = (0..n)
        .map(|e| (0..n).filter(|&c| balls[c] >> e & 1 == 1).collect())
        .collect();
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut best = incumbent;
    branch(full, 0, &balls, &covered_by, &mut best);
    best
}

fn branch(uncovered: u32, depth: usize, balls: &[u32], covered_by: &[Vec<usize>], best: &mut usize) {
    if uncovered == 0 {
        *best = (*best).min(depth);
        return;
    }
    if depth + 1 >= *best {
        return;
    }
    let widest = balls
        .iter()
        .map(|b| (b & uncovered).count_ones())
        .max()
        .unwrap_or(1);
    let lower = uncovered.count_ones().div_ceil(widest) as usize;
    if depth + lower >= *best {
        return;
    }
    // branch on the uncovered element with the fewest candidate centers
    let mut pick = usize::MAX;
    let mut pick_deg = usize::MAX;
    let mut bits = uncovered;
    while bits != 0 {
        let e = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        if covered_by[e].len() < pick_deg {
            pick = e;
            pick_deg = covered_by[e].len();
        }
    }
    let mut cands: Vec<usize> = covered_by[pick].clone();
    cands.sort_by_key(|&c| std::cmp::Reverse((balls[c] & uncovered).count_ones()));
    for c in cands {
        branch(uncovered & !balls[c], depth + 1, balls, covered_by, best);
    }
}

/// Piecewise-constant covering-number function ε ↦ N(T, d, ε).
///
/// `counts[0]` holds on `(0, breakpoints[0])`, `counts[j]` on
/// `[breakpoints[j-1], breakpoints[j])` and the last count, always 1, on
/// `[breakpoints.last(), ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub breakpoints: Vec<f64>,
    pub counts: Vec<usize>,
    pub mode: CoverMode,
}

impl EntropyProfile {
    /// Covering number at `eps > 0`.
    pub fn count_at(&self, eps: f64) -> usize {
        let j = self.breakpoints.partition_point(|&b| b <= eps);
        self.counts[j]
    }

    /// Count on the interval ending at breakpoint `j` (the left limit).
    pub fn left_limit(&self, j: usize) -> usize {
        self.counts[j]
    }

    /// `(start, end, count)` for every bounded interval.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        self.breakpoints.iter().enumerate().map(|(j, &end)| {
            let start = if j == 0 { 0.0 } else { self.breakpoints[j - 1] };
            (start, end, self.counts[j])
        })
    }
}

/// The covering-number profile of the space. Between two consecutive
/// distinct pairwise distances the count is constant, so it is evaluated
/// once per interval.
pub fn entropy_profile(space: &FiniteMetricSpace, mode: CoverMode) -> Result<EntropyProfile> {
    if mode == CoverMode::Exact {
        check_exact_size(space)?;
    }
    let breakpoints = space.distinct_distances();
    let mut counts = Vec::with_capacity(breakpoints.len() + 1);
    let (_, radii) = space.farthest_point_order(0);
    let greedy_at = |eps: f64| radii.iter().take_while(|&&r| r > eps).count();
    let probe = |j: usize| {
        if j == 0 {
            breakpoints.first().map_or(1.0, |b| b / 2.0)
        } else {
            breakpoints[j - 1]
        }
    };
    for j in 0..=breakpoints.len() {
        let eps = probe(j);
        let greedy = greedy_at(eps);
        let count = match mode {
            CoverMode::Greedy => greedy,
            CoverMode::Exact => {
                let prev = counts.last().copied().unwrap_or(usize::MAX);
                let incumbent = greedy.min(prev);
                if incumbent == 1 {
                    1
                } else {
                    exact_cover(space, eps, incumbent)
                }
            }
        };
        counts.push(count);
    }
    Ok(EntropyProfile {
        breakpoints,
        counts,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        FiniteMetricSpace::from_points(&pts).unwrap()
    }

    /// Minimum cover by trying every subset of centers.
    fn brute_cover(space: &FiniteMetricSpace, eps: f64) -> usize {
        let n = space.len();
        (1u32..(1 << n))
            .filter(|&mask| {
                (0..n).all(|j| (0..n).any(|c| mask >> c & 1 == 1 && space.d(c, j) <= eps))
            })
            .map(|m| m.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn validate_accepts_two_points() {
        let s = validate_metric(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn validate_rejects_asymmetry() {
        let e = validate_metric(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap_err();
        assert!(matches!(e, Error::Asymmetry { i: 0, j: 1, .. }));
    }

    #[test]
    fn validate_reports_triangle_witness() {
        let raw = [vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]];
        match validate_metric(&raw).unwrap_err() {
            Error::TriangleViolation { i, j, k, dik, .. } => {
                assert_eq!((i, j, k), (0, 1, 2));
                assert_eq!(dik, 3.0);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn validate_rejects_negative_and_bad_shapes() {
        assert!(matches!(
            validate_metric(&[vec![0.0, -1.0], vec![-1.0, 0.0]]),
            Err(Error::NegativeDistance { .. })
        ));
        assert!(matches!(
            validate_metric(&[vec![0.0, 1.0], vec![1.0]]),
            Err(Error::NotSquare { row: 1, .. })
        ));
        assert!(matches!(
            validate_metric(&[vec![0.0, f64::NAN], vec![f64::NAN, 0.0]]),
            Err(Error::NonFinite(0, 1))
        ));
        assert!(matches!(validate_metric(&[]), Err(Error::EmptySet)));
    }

    #[test]
    fn csv_ingestion() {
        let s = FiniteMetricSpace::from_csv_reader("0, 2\n2, 0\n".as_bytes()).unwrap();
        assert_eq!(s.d(0, 1), 2.0);
        assert!(FiniteMetricSpace::from_csv_reader("0,x\n".as_bytes()).is_err());
    }

    #[test]
    fn singleton_cover() {
        let s = line(&[0.0]);
        assert_eq!(covering_number(&s, 0.5, CoverMode::Exact).unwrap(), 1);
        assert_eq!(covering_number(&s, 0.5, CoverMode::Greedy).unwrap(), 1);
        assert_eq!(greedy_net(&s, 3.0), vec![0]);
    }

    #[test]
    fn collinear_four_points() {
        let s = line(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(brute_cover(&s, 1.0), 2);
        assert_eq!(covering_number(&s, 1.0, CoverMode::Exact).unwrap(), 2);
        let net = greedy_net(&s, 1.0);
        assert!(net.len() == 2 || net.len() == 3);
        for j in 0..4 {
            assert!(net.iter().any(|&c| s.d(c, j) <= 1.0));
        }
    }

    #[test]
    fn two_points_net() {
        let s = line(&[0.0, 2.0]);
        assert_eq!(greedy_net(&s, 1.0), vec![0, 1]);
    }

    #[test]
    fn cover_at_diameter_is_one() {
        let s = line(&[0.0, 0.3, 1.7, 2.5, 4.0]);
        let d = s.diameter();
        assert_eq!(covering_number(&s, d, CoverMode::Exact).unwrap(), 1);
        assert_eq!(covering_number(&s, d * 2.0, CoverMode::Exact).unwrap(), 1);
    }

    #[test]
    fn exact_limit_enforced() {
        let xs: Vec<f64> = (0..25).map(f64::from).collect();
        let s = line(&xs);
        assert!(matches!(
            covering_number(&s, 1.0, CoverMode::Exact),
            Err(Error::SizeLimitExceeded { .. })
        ));
        assert!(covering_number(&s, 1.0, CoverMode::Greedy).is_ok());
        assert!(matches!(
            covering_number(&s, 0.0, CoverMode::Greedy),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn profiles_of_small_spaces() {
        let p = entropy_profile(&line(&[0.0]), CoverMode::Exact).unwrap();
        assert!(p.breakpoints.is_empty());
        assert_eq!(p.counts, vec![1]);

        let p = entropy_profile(&line(&[0.0, 0.7]), CoverMode::Exact).unwrap();
        assert_eq!(p.breakpoints, vec![0.7]);
        assert_eq!(p.counts, vec![2, 1]);

        let p = entropy_profile(&line(&[0.0, 1.0, 2.0, 3.0]), CoverMode::Exact).unwrap();
        assert_eq!(p.breakpoints, vec![1.0, 2.0, 3.0]);
        assert_eq!(p.counts, vec![4, 2, 1, 1]);
        assert_eq!(p.count_at(0.5), 4);
        assert_eq!(p.count_at(1.0), 2);
        assert_eq!(p.count_at(1.99), 2);
        assert_eq!(p.count_at(2.0), 1);
        assert_eq!(p.count_at(100.0), 1);
    }

    #[test]
    fn coincident_points_form_one_class() {
        let s = validate_metric(&[
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ])
        .unwrap();
        let p = entropy_profile(&s, CoverMode::Exact).unwrap();
        assert_eq!(p.counts, vec![2, 1]);
    }

    #[test]
    fn exact_matches_brute_force_on_random_planar_sets() {
        use rand::Rng;
        let mut rng = crate::rng::stream(11, 0);
        for _ in 0..30 {
            let n = rng.random_range(1..=9);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
                .collect();
            let s = FiniteMetricSpace::from_points(&pts).unwrap();
            let prof = entropy_profile(&s, CoverMode::Exact).unwrap();
            for eps in [0.05, 0.1, 0.2, 0.35, 0.5, 0.8] {
                let want = brute_cover(&s, eps);
                assert_eq!(covering_number(&s, eps, CoverMode::Exact).unwrap(), want);
                assert_eq!(prof.count_at(eps), want);
            }
        }
    }
}
