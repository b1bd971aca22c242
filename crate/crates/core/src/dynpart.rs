//! Dynamical partitions `xi_n(x0)` and the combinatorics of their intervals.
//!
//! Intervals are stored as pairs of orbit indices `(left, right)` meaning the
//! counter-clockwise arc from `f^left(x0)` to `f^right(x0)`. The level-`m`
//! base interval is `[x0, f^{q_m} x0]` for even `m` and `[f^{q_m} x0, x0]`
//! for odd `m`; the level-`m` interval with index `k` is its `f^k` image.

use serde::Serialize;

use crate::circle;
use crate::circlemaps::CircleMap;
use crate::numberth::ConvergentTable;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PartitionError {
    #[error("orbit points closer than the working tolerance at depth {0}")]
    DepthBeyondPrecision(usize),
    #[error("depth {n} needs convergents up to index {need}, table has {have}")]
    TableTooShort { n: usize, need: usize, have: usize },
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("even depth {0} requested with orientation reversal disabled")]
    EvenDepthWithoutReversal(usize),
    #[error("intervals do not tile the circle at depth {0}")]
    NotAPartition(usize),
}

/// Counter-clockwise arc between two orbit points, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Interval {
    pub left: usize,
    pub right: usize,
}

/// Which family an interval of `xi_n` belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// `Delta_i^{(n-1)}`, `0 <= i < q_n`.
    Long,
    /// `Delta_j^{(n)}`, `0 <= j < q_{n-1}`.
    Short,
}

/// Position of a point relative to `xi_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Locator {
    /// `i_n(x)` in `[0, q_n)`.
    pub i: usize,
    pub side: Side,
    /// `phi_n(i)`.
    pub phi: usize,
}

/// Orbit indices of `Delta_k^{(m)}`.
pub fn delta(table: &ConvergentTable, m: usize, k: usize) -> Interval {
    let q = table.qn(m);
    if m % 2 == 0 {
        Interval { left: k, right: k + q }
    } else {
        Interval { left: k + q, right: k }
    }
}

/// `phi_n(i)`: `q_n - q_{n-1} + i` below `q_{n-1}`, `i - q_{n-1}` above.
pub fn phi(table: &ConvergentTable, n: usize, i: usize) -> usize {
    let qp = table.qn(n - 1);
    let qn = table.qn(n);
    if i < qp {
        qn - qp + i
    } else {
        i - qp
    }
}

/// Inverse of [`phi`] on `[0, q_n)`.
pub fn phi_inv(table: &ConvergentTable, n: usize, j: usize) -> usize {
    let (qp, qn) = (table.qn(n - 1), table.qn(n));
    if j >= qn - qp {
        j + qp - qn
    } else {
        j + qp
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PartitionOptions {
    /// Allow even depths (handled by reversing orientation).
    pub allow_even: bool,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions { allow_even: true }
    }
}

#[derive(Debug, Clone)]
pub struct DynamicalPartition {
    pub n: usize,
    pub q_prev: usize,
    pub q_n: usize,
    /// `x_k = f^k(x0)` for `k < q_n + q_{n-1}`.
    pub orbit: Vec<Real>,
    pub long: Vec<Interval>,
    pub short: Vec<Interval>,
    /// Orbit indices in counter-clockwise order starting at `x0`.
    order: Vec<usize>,
    /// For each orbit index, the interval whose left endpoint it is.
    owner: Vec<(Side, usize)>,
}

/// Builds `xi_n(x0)` with default options.
pub fn build_partition(
    f: &CircleMap,
    x0: &Real,
    n: usize,
    table: &ConvergentTable,
) -> Result<DynamicalPartition, PartitionError> {
    build_partition_with(f, x0, n, table, PartitionOptions::default())
}

pub fn build_partition_with(
    f: &CircleMap,
    x0: &Real,
    n: usize,
    table: &ConvergentTable,
    opts: PartitionOptions,
) -> Result<DynamicalPartition, PartitionError> {
    if n == 0 {
        return Err(PartitionError::ZeroDepth);
    }
    if n > table.depth() {
        return Err(PartitionError::TableTooShort { n, need: n, have: table.depth() });
    }
    if n % 2 == 0 && !opts.allow_even {
        return Err(PartitionError::EvenDepthWithoutReversal(n));
    }
    let q_prev = table.qn(n - 1);
    let q_n = table.qn(n);
    let orbit = f.orbit(x0, q_n + q_prev);
    DynamicalPartition::from_orbit(orbit, n, table)
}

impl DynamicalPartition {
    /// Builds the partition from a precomputed orbit of length at least
    /// `q_n + q_{n-1}`.
    pub fn from_orbit(mut orbit: Vec<Real>, n: usize, table: &ConvergentTable) -> Result<Self, PartitionError> {
        let q_prev = table.qn(n - 1);
        let q_n = table.qn(n);
        let total = q_n + q_prev;
        orbit.truncate(total);
        let long: Vec<Interval> = (0..q_n).map(|i| delta(table, n - 1, i)).collect();
        let short: Vec<Interval> = (0..q_prev).map(|j| delta(table, n, j)).collect();
        let base = orbit[0].clone();
        let rel: Vec<Real> = orbit.iter().map(|x| circle::arc_len(&base, x)).collect();
        let mut order: Vec<usize> = (0..total).collect();
        order.sort_by(|&a, &b| rel[a].cmp(&rel[b]));
        let tol = crate::real::tolerance_for(base.prec());
        for w in order.windows(2) {
            if &rel[w[1]] - &rel[w[0]] <= tol {
                return Err(PartitionError::DepthBeyondPrecision(n));
            }
        }
        if total > 1 && rel[order[total - 1]].one_like() - &rel[order[total - 1]] <= tol {
            return Err(PartitionError::DepthBeyondPrecision(n));
        }
        let mut owner = vec![(Side::Long, usize::MAX); total];
        let mut succ = vec![0usize; total];
        for w in 0..total {
            succ[order[w]] = order[(w + 1) % total];
        }
        for (side, ivs) in [(Side::Long, &long), (Side::Short, &short)] {
            for (k, iv) in ivs.iter().enumerate() {
                if owner[iv.left].1 != usize::MAX || succ[iv.left] != iv.right {
                    return Err(PartitionError::NotAPartition(n));
                }
                owner[iv.left] = (side, k);
            }
        }
        Ok(DynamicalPartition { n, q_prev, q_n, orbit, long, short, order, owner })
    }

    pub fn len(&self) -> usize {
        self.long.len() + self.short.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn intervals(&self) -> impl Iterator<Item = (Side, usize, Interval)> + '_ {
        let l = self.long.iter().enumerate().map(|(i, iv)| (Side::Long, i, *iv));
        let s = self.short.iter().enumerate().map(|(j, iv)| (Side::Short, j, *iv));
        l.chain(s)
    }

    pub fn coords(&self, iv: Interval) -> (Real, Real) {
        (self.orbit[iv.left].clone(), self.orbit[iv.right].clone())
    }

    pub fn length(&self, iv: Interval) -> Real {
        circle::arc_len(&self.orbit[iv.left], &self.orbit[iv.right])
    }

    /// Every gap between circularly consecutive points is exactly one interval.
    pub fn covers_disjointly(&self) -> bool {
        let total = self.orbit.len();
        let mut seen = vec![false; total];
        for (_, _, iv) in self.intervals() {
            if seen[iv.left] {
                return false;
            }
            seen[iv.left] = true;
        }
        let pos: Vec<usize> = {
            let mut p = vec![0; total];
            for (w, &k) in self.order.iter().enumerate() {
                p[k] = w;
            }
            p
        };
        let sum = self.intervals().fold(Real::zero(), |acc, (_, _, iv)| acc + self.length(iv));
        let tol = Real::pow2_prec(-(sum.prec() as i64) / 2, sum.prec());
        seen.iter().all(|&s| s)
            && self.intervals().all(|(_, _, iv)| self.order[(pos[iv.left] + 1) % total] == iv.right)
            && (sum - 1).abs() < tol
    }

    /// Locates a circle point; endpoints belong to the interval on their right.
    pub fn locate(&self, x: &Real, table: &ConvergentTable) -> Locator {
        let base = &self.orbit[0];
        let t = circle::arc_len(base, x);
        let w = self
            .order
            .partition_point(|&k| circle::arc_len(base, &self.orbit[k]) <= t)
            .saturating_sub(1);
        let (side, i) = self.owner[self.order[w]];
        Locator { i, side, phi: phi(table, self.n, i) }
    }

    pub fn max_length(&self) -> Real {
        self.intervals().map(|(_, _, iv)| self.length(iv)).max().expect("non-empty partition")
    }

    pub fn min_length(&self) -> Real {
        self.intervals().map(|(_, _, iv)| self.length(iv)).min().expect("non-empty partition")
    }
}

/// Checks `Delta_i^{(n-1)} = Delta_i^{(n+1)} ∪ ⋃_{s<a_{n+1}} Delta^{(n)}_{i+q_{n-1}+s q_n}`
/// for every `i < q_n`: the pieces chain by endpoint index, are intervals of
/// `xi_{n+1}`, and their lengths add up to the parent's.
pub fn verify_refinement(f: &CircleMap, x0: &Real, n: usize, table: &ConvergentTable) -> Result<bool, PartitionError> {
    if n + 1 > table.depth() {
        return Err(PartitionError::TableTooShort { n, need: n + 1, have: table.depth() });
    }
    let fine = build_partition(f, x0, n + 1, table)?;
    if !fine.covers_disjointly() {
        return Ok(false);
    }
    let a = table.a(n + 1) as usize;
    let qp = table.qn(n - 1);
    let qn = table.qn(n);
    let orbit = &fine.orbit;
    let tol = Real::pow2_prec(-(orbit[0].prec() as i64) / 2, orbit[0].prec());
    let fine_set: std::collections::HashSet<Interval> = fine.intervals().map(|(_, _, iv)| iv).collect();
    for i in 0..qn {
        let parent = delta(table, n - 1, i);
        let mut pieces = vec![delta(table, n + 1, i)];
        for s in 0..a {
            pieces.push(delta(table, n, i + qp + s * qn));
        }
        if !pieces.iter().all(|p| fine_set.contains(p)) {
            return Ok(false);
        }
        // Chain from the parent's left endpoint to its right endpoint.
        let mut cur = parent.left;
        let mut used = vec![false; pieces.len()];
        for _ in 0..pieces.len() {
            match pieces.iter().enumerate().find(|(k, p)| !used[*k] && p.left == cur) {
                Some((k, p)) => {
                    used[k] = true;
                    cur = p.right;
                }
                None => return Ok(false),
            }
        }
        if cur != parent.right {
            return Ok(false);
        }
        let plen = circle::arc_len(&orbit[parent.left], &orbit[parent.right]);
        let sum = pieces.iter().fold(Real::zero(), |acc, p| acc + circle::arc_len(&orbit[p.left], &orbit[p.right]));
        if (plen - sum).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Index rule: `Delta_0^{(n-1)}(c)` and `Delta_k^{(n)}(c)` overlap in their
/// interiors, for `0 <= k < q_{n+1} + q_n`.
pub fn overlap_base_long(table: &ConvergentTable, n: usize, k: usize) -> bool {
    let qp = table.qn(n - 1);
    let qn = table.qn(n);
    let qn1 = table.qn(n + 1);
    if k == qp + qn1 {
        return true;
    }
    k >= qp && (k - qp) % qn == 0 && (k - qp) / qn <= table.a(n + 1) as usize
}

/// Index rule: `Delta_k^{(n-1)}(c)` and `Delta_0^{(n)}(c)` overlap in their
/// interiors, for `0 <= k < (a_{n+1} + 2) q_n`.
pub fn overlap_long_base(table: &ConvergentTable, n: usize, k: usize) -> bool {
    let qn = table.qn(n);
    let qn1 = table.qn(n + 1);
    if k == qn + qn1 {
        return true;
    }
    k % qn == 0 && k / qn >= 1 && k / qn <= table.a(n + 1) as usize + 1
}

/// Interior overlap of two arcs given by orbit indices.
pub fn arcs_overlap(orbit: &[Real], a: Interval, b: Interval) -> bool {
    if a.left == b.left {
        return true;
    }
    circle::in_open_arc(&orbit[b.left], &orbit[a.left], &orbit[a.right])
        || circle::in_open_arc(&orbit[a.left], &orbit[b.left], &orbit[b.right])
}

/// Brute-force list of `k` for which `Delta_0^{(n-1)}(c)` meets `Delta_k^{(n)}(c)`.
pub fn overlap_base_long_brute(f: &CircleMap, c: &Real, n: usize, table: &ConvergentTable) -> Vec<usize> {
    let qn = table.qn(n);
    let range = table.qn(n + 1) + qn;
    let orbit = f.orbit(c, range + qn + 1);
    let base = delta(table, n - 1, 0);
    (0..range).filter(|&k| arcs_overlap(&orbit, base, delta(table, n, k))).collect()
}

/// Brute-force list of `k` for which `Delta_k^{(n-1)}(c)` meets `Delta_0^{(n)}(c)`.
pub fn overlap_long_base_brute(f: &CircleMap, c: &Real, n: usize, table: &ConvergentTable) -> Vec<usize> {
    let qn = table.qn(n);
    let range = (table.a(n + 1) as usize + 2) * qn;
    let orbit = f.orbit(c, range + table.qn(n - 1) + qn + 1);
    let base = delta(table, n, 0);
    (0..range).filter(|&k| arcs_overlap(&orbit, delta(table, n - 1, k), base)).collect()
}

/// Checks the pairing of `f^i([y1, y2])` with `f^j([y2, y3])`,
/// `y2 = f^{q_{n-1}} y1`: interiors meet exactly when `j = phi_n(i)`.
pub fn verify_pairing(f: &CircleMap, y1: &Real, n: usize, table: &ConvergentTable) -> bool {
    let qp = table.qn(n - 1);
    let qn = table.qn(n);
    let orbit = f.orbit(y1, qn + 2 * qp + 1);
    let arc = |start: usize| {
        let d = delta(table, n - 1, 0);
        Interval { left: d.left + start, right: d.right + start }
    };
    for i in 0..qn {
        for j in 0..qn {
            let meets = arcs_overlap(&orbit, arc(i), arc(j + qp));
            if meets != (j == phi(table, n, i)) {
                return false;
            }
        }
    }
    true
}

/// Decay of the maximal interval length with depth.
#[derive(Debug, Clone, Serialize)]
pub struct DecayProfile {
    pub levels: Vec<usize>,
    pub max_lengths: Vec<f64>,
    /// Least-squares slope of `log max_length` against `n`.
    pub slope: f64,
    /// `log lambda` with `lambda = (1 + e^{-V})^{-1/2}`.
    pub log_lambda: f64,
}

pub fn lambda(v: f64) -> f64 {
    (1.0 + (-v).exp()).powf(-0.5)
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn decay_profile(
    f: &CircleMap,
    x0: &Real,
    levels: std::ops::RangeInclusive<usize>,
    table: &ConvergentTable,
) -> Result<DecayProfile, PartitionError> {
    let mut ns = Vec::new();
    let mut lens = Vec::new();
    for n in levels {
        let p = build_partition(f, x0, n, table)?;
        ns.push(n);
        lens.push(p.max_length().to_f64());
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = lens.iter().map(|l| l.ln()).collect();
    Ok(DecayProfile { slope: ls_slope(&xs, &ys), log_lambda: lambda(f.log_variation()).ln(), levels: ns, max_lengths: lens })
}
