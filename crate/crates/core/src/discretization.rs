//! Geometric probability grid used to index the DP tables.
//!
//! The grid is `v[0] = 1, v[m] = alpha^m (m = 1..=t), v[t+1] = 0`. Values are
//! built by repeated multiplication so that `alpha * v[m-1] == v[m]` holds
//! exactly in floating point; the rounding map and the k-interval bounds
//! below rely on it.

use std::sync::OnceLock;

use thiserror::Error;

use crate::instance::Instance;

/// Snap applied before taking a ceiling so values that sit on a grid point
/// (up to rounding noise) land on their own index.
const CEIL_SNAP: f64 = 1e-9;
/// Floor for logarithm arguments.
const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("p_min must lie in (0, 1), got {0}")]
    PMin(f64),
    #[error("{name} must be at least 1")]
    NonPositive { name: &'static str },
    #[error("no taxon has a positive conserved survival probability")]
    Degenerate,
    #[error("probability {0} is not a grid value")]
    NotOnGrid(f64),
}

/// Contiguous run of grid indices `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexRange {
    pub lo: usize,
    pub hi: usize,
}

impl IndexRange {
    pub fn contains(&self, m: usize) -> bool {
        self.lo <= m && m <= self.hi
    }
}

#[derive(Debug)]
pub struct Discretization {
    alpha: f64,
    p_min: f64,
    t: usize,
    k: u32,
    epsilon: Option<f64>,
    grid: Vec<f64>,
    ln_alpha: f64,
    k_rows: Vec<OnceLock<Box<[Option<IndexRange>]>>>,
}

impl Clone for Discretization {
    fn clone(&self) -> Self {
        // Cached k-interval rows are cheap to rebuild.
        let mut d = Self::build(self.alpha, self.p_min, self.k);
        d.epsilon = self.epsilon;
        d
    }
}

impl PartialEq for Discretization {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha && self.p_min == other.p_min && self.k == other.k && self.t == other.t
    }
}

impl Discretization {
    /// Grid for explicit `alpha` and `p_min`; `t` is the smallest count with
    /// `alpha^t <= p_min`.
    pub fn new(alpha: f64, p_min: f64, k: u32) -> Result<Self, ParamError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ParamError::Alpha(alpha));
        }
        if !(p_min > 0.0 && p_min < 1.0) {
            return Err(ParamError::PMin(p_min));
        }
        if k == 0 {
            return Err(ParamError::NonPositive { name: "k" });
        }
        Ok(Self::build(alpha, p_min, k))
    }

    fn build(alpha: f64, p_min: f64, k: u32) -> Self {
        let ln_alpha = alpha.ln();
        let estimate = (p_min.max(LOG_FLOOR).ln() / ln_alpha - CEIL_SNAP).ceil().max(1.0) as usize;
        let mut grid = Vec::with_capacity(estimate + 2);
        grid.push(1.0);
        while grid.len() <= estimate {
            let next = grid[grid.len() - 1] * alpha;
            grid.push(next);
        }
        // Float guard: enforce alpha^t <= p_min < alpha^(t-1) on the built grid.
        while *grid.last().unwrap() > p_min {
            let next = grid[grid.len() - 1] * alpha;
            grid.push(next);
        }
        while grid.len() > 2 && grid[grid.len() - 2] <= p_min {
            grid.pop();
        }
        let t = grid.len() - 1;
        grid.push(0.0);
        let k_rows = (0..t + 2).map(|_| OnceLock::new()).collect();
        Self { alpha, p_min, t, k, epsilon: None, grid, ln_alpha, k_rows }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    /// Number of non-trivial intervals; rows are indexed `0..=t+1`.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// The epsilon this grid was derived from, if any.
    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Number of rows, `t + 2`.
    pub fn rows(&self) -> usize {
        self.grid.len()
    }

    /// Index of the zero row.
    pub fn zero_index(&self) -> usize {
        self.t + 1
    }

    pub fn index_value(&self, m: usize) -> f64 {
        self.grid[m]
    }

    /// Grid index of `pi(p)`.
    ///
    /// Probabilities below the smallest positive grid value `alpha^t` map to
    /// the zero row; everything else maps to the largest grid value not
    /// exceeding it, i.e. `alpha^ceil(log_alpha p)`.
    #[inline]
    pub fn pi_index(&self, p: f64) -> usize {
        if p >= 1.0 {
            return 0;
        }
        if !(p >= self.grid[self.t]) {
            return self.t + 1;
        }
        let est = (p.max(LOG_FLOOR).ln() / self.ln_alpha - CEIL_SNAP).ceil();
        let mut m = (est.max(0.0) as usize).min(self.t);
        while m > 0 && self.grid[m - 1] <= p {
            m -= 1;
        }
        while self.grid[m] > p {
            m += 1;
        }
        m
    }

    /// Rounds a probability down to the grid.
    pub fn pi(&self, p: f64) -> f64 {
        self.grid[self.pi_index(p)]
    }

    /// Inverse of [`Discretization::index_value`] for grid values (within
    /// 1e-9).
    pub fn grid_index(&self, p: f64) -> Result<usize, ParamError> {
        let m = self.pi_index(p);
        let candidates = [m.checked_sub(1), Some(m), Some(m + 1).filter(|&x| x < self.grid.len())];
        candidates
            .into_iter()
            .flatten()
            .filter(|&c| (self.grid[c] - p).abs() <= 1e-9)
            .min_by(|&x, &y| (self.grid[x] - p).abs().total_cmp(&(self.grid[y] - p).abs()))
            .ok_or(ParamError::NotOnGrid(p))
    }

    /// Grid indices `m` with `pi(combine(v[j_idx], v[m])) == v[p_idx]`.
    ///
    /// Bounds come from `pi(q) = p <=> q in [p, p/alpha)`, which for
    /// `q = j + k(1 - j)` gives `k in [(p - j)/(1 - j), (p/alpha - j)/(1 - j))`.
    /// The closed-form estimate is then checked against the rounding map at the
    /// two boundaries, so the result agrees with a full scan of the grid.
    pub fn k_range(&self, p_idx: usize, j_idx: usize) -> Option<IndexRange> {
        let last = self.t + 1;
        if j_idx == 0 {
            // j = 1 forces the combined probability to 1 for every k.
            return (p_idx == 0).then_some(IndexRange { lo: 0, hi: last });
        }
        let (lo_est, hi_est) = self.k_range_estimate(p_idx, j_idx)?;
        let member = |m: usize| self.pi_index(combine_prob(self.grid[j_idx], self.grid[m])) == p_idx;
        // The estimate is trusted to within one index on either side.
        let window_hi = (hi_est + 1).min(last);
        let mut lo = (lo_est.saturating_sub(1)..=window_hi).find(|&m| member(m))?;
        while lo > 0 && member(lo - 1) {
            lo -= 1;
        }
        let mut hi = window_hi.max(lo);
        if member(hi) {
            while hi < last && member(hi + 1) {
                hi += 1;
            }
        } else {
            while !member(hi) {
                hi -= 1;
            }
        }
        Some(IndexRange { lo, hi })
    }

    /// Unverified closed-form bounds `(lo, hi)` on the k indices for
    /// `(p_idx, j_idx)`, `j < 1`. `None` when the interval is certainly empty.
    pub fn k_range_estimate(&self, p_idx: usize, j_idx: usize) -> Option<(usize, usize)> {
        let last = self.t + 1;
        let j = self.grid[j_idx];
        let one_minus_j = 1.0 - j;
        // Target interval [q_lo, q_hi) for the combined probability.
        let (q_lo, q_hi) = match p_idx {
            0 => (1.0, f64::INFINITY),
            m if m == last => (0.0, self.grid[self.t]),
            m => (self.grid[m], self.grid[m - 1]),
        };
        let k_lo = (q_lo - j) / one_minus_j;
        let k_hi = (q_hi - j) / one_minus_j;
        if k_hi <= 0.0 || k_lo > 1.0 {
            return None;
        }
        // Smallest index with v[m] < k_hi.
        let lo = if k_hi > 1.0 {
            0
        } else {
            let x = k_hi.ln() / self.ln_alpha;
            ((x + CEIL_SNAP).floor() as usize + 1).min(last)
        };
        // Largest index with v[m] >= k_lo.
        let hi = if k_lo <= 0.0 {
            last
        } else {
            let x = k_lo.max(LOG_FLOOR).ln() / self.ln_alpha;
            ((x + CEIL_SNAP).floor().max(0.0) as usize).min(self.t)
        };
        Some((lo, hi.max(lo.min(last))))
    }

    /// Cached [`Discretization::k_range`] for every `p` at a fixed `j`.
    pub fn k_row(&self, j_idx: usize) -> &[Option<IndexRange>] {
        self.k_rows[j_idx].get_or_init(|| (0..self.rows()).map(|p| self.k_range(p, j_idx)).collect())
    }

    /// Drops cached k-interval rows.
    pub fn clear_cache(&mut self) {
        for cell in self.k_rows.iter_mut() {
            cell.take();
        }
    }
}

/// Survival probability of an edge whose children survive with `j` and `k`:
/// `j + k - jk`, evaluated as `j + k(1 - j)` so that it is monotone in `k`
/// under floating-point rounding.
#[inline]
pub fn combine_prob(j: f64, k: f64) -> f64 {
    j + k * (1.0 - j)
}

/// Smallest `k >= 1` with `min b_i >= n^(-k)` over taxa with `b_i > 0`.
pub fn derive_k(instance: &Instance) -> Result<u32, ParamError> {
    let min_b = instance
        .taxa()
        .iter()
        .map(|t| t.b)
        .filter(|&b| b > 0.0)
        .min_by(f64::total_cmp)
        .ok_or(ParamError::Degenerate)?;
    let n = instance.num_taxa() as f64;
    if n <= 1.0 {
        return Ok(1);
    }
    let mut k = 1u32;
    while min_b < n.powi(-(k as i32)) {
        k += 1;
    }
    Ok(k)
}

/// Parameters for a `(1 - epsilon)` guarantee on a tree of height `h` with
/// `n` taxa: `alpha = sqrt((1 - eps)^(1/h))`,
/// `p_min = (1 - sqrt(1 - eps)) / n^(k+1)`,
/// `t = ceil(log p_min / log alpha)`.
pub fn select_params(n: usize, h: u32, epsilon: f64, k: u32) -> Result<Discretization, ParamError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ParamError::Epsilon(epsilon));
    }
    if n == 0 {
        return Err(ParamError::NonPositive { name: "n" });
    }
    if h == 0 {
        return Err(ParamError::NonPositive { name: "h" });
    }
    let alpha = (1.0 - epsilon).powf(1.0 / h as f64).sqrt();
    let p_min = (1.0 - (1.0 - epsilon).sqrt()) / (n as f64).powi(k as i32 + 1);
    let mut d = Discretization::new(alpha, p_min, k)?;
    d.epsilon = Some(epsilon);
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> Discretization {
        Discretization::new(0.5, 0.1, 1).unwrap()
    }

    fn scan(d: &Discretization, p_idx: usize, j_idx: usize) -> Vec<usize> {
        (0..d.rows())
            .filter(|&m| d.pi_index(combine_prob(d.grid()[j_idx], d.grid()[m])) == p_idx)
            .collect()
    }

    #[test]
    fn select_params_reference_values() {
        let d = select_params(4, 4, 0.5, 1).unwrap();
        assert!((d.alpha() - 0.917004).abs() < 1e-6);
        assert!((d.p_min() - 0.0183058).abs() < 1e-7);
        assert_eq!(d.t(), 47);

        let d = select_params(1, 1, 0.75, 1).unwrap();
        assert_eq!(d.alpha(), 0.5);
        assert_eq!(d.p_min(), 0.5);
        assert_eq!(d.t(), 1);
    }

    #[test]
    fn smaller_epsilon_means_more_intervals() {
        let ts: Vec<usize> = [0.5, 0.3, 0.1].iter().map(|&e| select_params(4, 4, e, 1).unwrap().t()).collect();
        assert!(ts.windows(2).all(|w| w[0] < w[1]), "{ts:?}");
    }

    #[test]
    fn epsilon_out_of_range() {
        for eps in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(select_params(4, 4, eps, 1), Err(ParamError::Epsilon(_))));
        }
    }

    #[test]
    fn grid_shape() {
        let d = half();
        assert_eq!(d.grid(), &[1.0, 0.5, 0.25, 0.125, 0.0625, 0.0]);
        assert!(d.grid()[d.t()] <= d.p_min());
        assert!(d.p_min() < d.grid()[d.t() - 1]);
    }

    #[test]
    fn pi_examples() {
        let d = half();
        assert_eq!(d.pi(1.0), 1.0);
        assert_eq!(d.pi(0.3), 0.25);
        assert_eq!(d.pi(0.05), 0.0);
        assert_eq!(d.pi(0.0), 0.0);
    }

    #[test]
    fn grid_index_round_trip() {
        let d = select_params(6, 5, 0.3, 2).unwrap();
        assert_eq!(d.grid_index(1.0).unwrap(), 0);
        assert_eq!(d.index_value(d.t() + 1), 0.0);
        for m in 0..d.rows() {
            assert_eq!(d.grid_index(d.index_value(m)).unwrap(), m);
        }
        assert!(d.grid_index(0.77).is_err());
    }

    #[test]
    fn k_range_examples() {
        let d = half();
        assert_eq!(d.k_range(1, 2), Some(IndexRange { lo: 1, hi: 1 }));
        assert_eq!(scan(&d, 1, 2), vec![1]);
        for p in 1..d.rows() {
            assert_eq!(d.k_range(p, 0), None);
        }
        assert_eq!(d.k_range(0, 0), Some(IndexRange { lo: 0, hi: d.t() + 1 }));
    }

    #[test]
    fn k_range_matches_scan_exhaustively() {
        for d in [half(), select_params(4, 4, 0.5, 1).unwrap(), select_params(3, 2, 0.6, 1).unwrap()] {
            for p in 0..d.rows() {
                for j in 0..d.rows() {
                    let want = scan(&d, p, j);
                    let got = d.k_range(p, j).map(|r| (r.lo..=r.hi).collect::<Vec<_>>()).unwrap_or_default();
                    assert_eq!(got, want, "p={p} j={j}");
                }
            }
        }
    }

    #[test]
    fn derive_k_examples() {
        use crate::instance::{Node, PhyloTree, Taxon};
        let make = |bs: &[f64]| {
            let n = bs.len();
            let mut nodes = vec![Node { parent: None, children: (1..=n).collect(), length: 0.0, taxon: None }];
            for i in 0..n {
                nodes.push(Node { parent: None, children: vec![], length: 1.0, taxon: Some(i) });
            }
            let taxa = bs.iter().enumerate().map(|(i, &b)| Taxon::new(format!("t{i}"), 0.0, b, 1)).collect();
            Instance::new(PhyloTree::from_nodes(nodes, 0).unwrap(), taxa, 1).unwrap()
        };
        assert_eq!(derive_k(&make(&[0.3, 0.5, 0.9, 1.0])).unwrap(), 1);
        let mut ten = vec![0.5; 9];
        ten.push(0.009);
        assert_eq!(derive_k(&make(&ten)).unwrap(), 3);
        assert_eq!(derive_k(&make(&[1.0, 1.0, 1.0])).unwrap(), 1);
        assert_eq!(derive_k(&make(&[0.0, 0.0])), Err(ParamError::Degenerate));
        // b = 0 taxa are ignored.
        assert_eq!(derive_k(&make(&[0.0, 0.9, 0.6, 0.7])).unwrap(), 1);
    }
}
