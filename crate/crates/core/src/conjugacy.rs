//! Conjugacies between circle maps of equal rotation number, sampled along
//! paired orbits and extended by monotone linear interpolation.

use serde::Serialize;
use thiserror::Error;

use crate::circle;
use crate::circlemaps::CircleMap;
use crate::numberth::{is_bounded_type, BoundedTypeReport, ConvergentTable};
use crate::orbitalg::{self, OrbitError, PointMap};
use crate::real::Real;

#[derive(Debug, Error)]
pub enum ConjugacyError {
    /// The `k`-th f-orbit point sits out of order relative to the g-orbit.
    #[error("circular orders of the two orbits differ at orbit index {k}")]
    OrderMismatch { k: usize },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("depth {n} exceeds the convergent table")]
    DepthBeyondTable { n: usize },
    #[error(transparent)]
    Orbit(#[from] OrbitError),
}

/// `h` with `h(f^k(x0)) = g^k(y0)` for `k < n`.
#[derive(Debug, Clone)]
pub struct ConjugacyTable {
    pub f: CircleMap,
    pub g: CircleMap,
    pub x0: Real,
    pub y0: Real,
    pub n: usize,
    /// `xs[k] = f^k(x0)`, `ys[k] = g^k(y0)`.
    pub xs: Vec<Real>,
    pub ys: Vec<Real>,
    /// Closed-form `h`, when known.
    pub oracle: Option<CircleMap>,
    /// Orbit indices sorted by position of `xs` in `[0, 1)`.
    order: Vec<usize>,
    interp: Interpolant,
}

/// Monotone degree-one interpolant through paired circle points.
#[derive(Debug, Clone)]
pub struct Interpolant {
    /// `x` in sorted order, and the matching lifted `y` (strictly increasing,
    /// span below one).
    sx: Vec<Real>,
    sy: Vec<Real>,
}

impl Interpolant {
    /// Pairs `xs[k] -> ys[k]`; the circular orders of both lists must agree.
    /// Also returns the indices of `xs` in sorted order.
    pub fn from_pairs(xs: &[Real], ys: &[Real]) -> Result<(Self, Vec<usize>), ConjugacyError> {
        let n = xs.len().min(ys.len());
        if n < 2 {
            return Err(ConjugacyError::TooFewSamples { need: 2, got: n });
        }
        let xs: Vec<Real> = xs[..n].iter().map(Real::frac).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| xs[a].cmp(&xs[b]));
        let mut sy = Vec::with_capacity(n);
        sy.push(ys[order[0]].frac());
        for w in order.windows(2) {
            if xs[w[0]] == xs[w[1]] {
                return Err(ConjugacyError::OrderMismatch { k: w[1] });
            }
            let step = circle::arc_len(&ys[w[0]], &ys[w[1]]);
            if step.is_zero() {
                return Err(ConjugacyError::OrderMismatch { k: w[1] });
            }
            let next = sy.last().unwrap() + step;
            if &next - &sy[0] >= Real::one() {
                return Err(ConjugacyError::OrderMismatch { k: w[1] });
            }
            sy.push(next);
        }
        let sx = order.iter().map(|&k| xs[k].clone()).collect();
        Ok((Interpolant { sx, sy }, order))
    }

    pub fn len(&self) -> usize {
        self.sx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sx.is_empty()
    }

    /// Degree-one lift of the interpolant, valid for any real `x`.
    pub fn lift(&self, x: &Real) -> Real {
        let base = x.floor();
        let t = x - &base;
        let n = self.sx.len();
        let i = self.sx.partition_point(|s| s <= &t);
        let (xa, ya) = if i == 0 {
            (&self.sx[n - 1] - 1, &self.sy[n - 1] - 1)
        } else {
            (self.sx[i - 1].clone(), self.sy[i - 1].clone())
        };
        let (xb, yb) = if i == n {
            (&self.sx[0] + 1, &self.sy[0] + 1)
        } else {
            (self.sx[i].clone(), self.sy[i].clone())
        };
        let y = &ya + (&t - &xa) * (&yb - &ya) / (&xb - &xa);
        base + y
    }

    pub fn max_gap_x(&self) -> Real {
        max_gap(&self.sx)
    }

    pub fn max_gap_y(&self) -> Real {
        max_gap(&self.sy)
    }
}

/// Pairs the first `n` points of the f-orbit of `x0` with the g-orbit of `y0`.
pub fn build_conjugacy(
    f: &CircleMap,
    g: &CircleMap,
    x0: &Real,
    y0: &Real,
    n: usize,
) -> Result<ConjugacyTable, ConjugacyError> {
    if n < 2 {
        return Err(ConjugacyError::TooFewSamples { need: 2, got: n });
    }
    let xs = f.orbit(x0, n);
    let ys = g.orbit(y0, n);
    let (interp, order) = Interpolant::from_pairs(&xs, &ys)?;
    Ok(ConjugacyTable {
        f: f.clone(),
        g: g.clone(),
        x0: x0.frac(),
        y0: y0.frac(),
        n,
        xs,
        ys,
        oracle: None,
        order,
        interp,
    })
}

impl ConjugacyTable {
    pub fn with_oracle(mut self, h: CircleMap) -> Self {
        self.oracle = Some(h);
        self
    }

    /// Orbit indices in circular order starting from the smallest `xs`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Degree-one lift of the interpolant, valid for any real `x`.
    pub fn lift(&self, x: &Real) -> Real {
        self.interp.lift(x)
    }

    pub fn interpolant(&self) -> &Interpolant {
        &self.interp
    }

    pub fn eval(&self, x: &Real) -> Real {
        self.lift(x).frac()
    }

    /// Largest gap between circularly consecutive f-orbit samples.
    pub fn max_gap_f(&self) -> Real {
        self.interp.max_gap_x()
    }

    /// Largest gap between circularly consecutive g-orbit samples.
    pub fn max_gap_g(&self) -> Real {
        self.interp.max_gap_y()
    }

    /// `max_k dist(h(f(x_k)), g(h(x_k)))` over tabled `x_k` whose image is tabled.
    pub fn equivariance_residual(&self) -> Real {
        let mut worst = Real::zero();
        for k in 0..self.n - 1 {
            let lhs = self.eval(&self.f.apply(&self.xs[k]));
            let rhs = self.g.apply(&self.eval(&self.xs[k]));
            worst = worst.max(circle::dist(&lhs, &rhs));
        }
        worst
    }

    /// `sup |h(f(x)) - g(h(x))|` over the grid `i / grid`.
    pub fn self_consistency(&self, grid: usize) -> Real {
        let mut worst = Real::zero();
        for i in 0..grid {
            let x = Real::from_i64(i as i64) / Real::from_i64(grid as i64);
            let lhs = self.eval(&self.f.apply(&x));
            let rhs = self.g.apply(&self.eval(&x));
            worst = worst.max(circle::dist(&lhs, &rhs));
        }
        worst
    }

    /// Largest distance to the oracle at the tabled points.
    pub fn oracle_sample_error(&self) -> Option<Real> {
        let h = self.oracle.as_ref()?;
        let mut worst = Real::zero();
        for (x, y) in self.xs.iter().zip(&self.ys) {
            worst = worst.max(circle::dist(&h.apply(x), y));
        }
        Some(worst)
    }

    /// Largest distance to the oracle over the grid `i / grid`.
    pub fn oracle_error(&self, grid: usize) -> Option<Real> {
        let h = self.oracle.as_ref()?;
        let mut worst = Real::zero();
        for i in 0..grid {
            let x = Real::from_i64(i as i64) / Real::from_i64(grid as i64);
            worst = worst.max(circle::dist(&h.apply(&x), &self.eval(&x)));
        }
        Some(worst)
    }
}

impl PointMap for ConjugacyTable {
    fn eval(&self, x: &Real) -> Real {
        ConjugacyTable::eval(self, x)
    }
}

fn max_gap(sorted_lifted: &[Real]) -> Real {
    let n = sorted_lifted.len();
    let mut worst = &sorted_lifted[0] + 1 - &sorted_lifted[n - 1];
    for w in sorted_lifted.windows(2) {
        worst = worst.max(&w[1] - &w[0]);
    }
    worst
}

/// Invariant probability measure of `f`, read off the conjugacy to `R_alpha`
/// normalised by `h(0) = 0`.
///
/// The interpolant is averaged along `averaging` forward iterates,
/// `H(x) = (1/M) sum_k (H_0(F^k x) - k alpha)`, which makes the defect
/// `H(F x) - H(x) - alpha` shrink like `1/M`.
#[derive(Debug, Clone)]
pub struct InvariantMeasure {
    pub table: ConjugacyTable,
    /// Rotation amount matching the lift of `f`: `H_0(F x) ~ H_0(x) + alpha_lift`.
    pub alpha_lift: Real,
    pub averaging: usize,
}

impl InvariantMeasure {
    pub fn new(f: &CircleMap, alpha: &Real, n: usize, averaging: usize) -> Result<Self, ConjugacyError> {
        let zero = Real::zero();
        let table = build_conjugacy(f, &CircleMap::rotation(alpha), &zero, &zero, n)?;
        let shift = table.lift(&f.lift(&zero)) - table.lift(&zero) - alpha;
        let m = shift.to_f64().round() as i64;
        let alpha_lift = alpha + Real::from_i64(m);
        Ok(InvariantMeasure { table, alpha_lift, averaging: averaging.max(1) })
    }

    /// Averaged lift of `h`.
    pub fn h_lift(&self, x: &Real) -> Real {
        let mut y = x.clone();
        let mut acc = Real::zero();
        for k in 0..self.averaging {
            if k > 0 {
                y = self.table.f.lift(&y);
            }
            acc = acc + self.table.lift(&y) - &self.alpha_lift * Real::from_i64(k as i64);
        }
        acc / Real::from_i64(self.averaging as i64)
    }

    /// `mu_f` of the counter-clockwise arc `[a, b]`.
    pub fn measure(&self, a: &Real, b: &Real) -> Real {
        let b_lift = a + circle::arc_len(a, b);
        self.measure_lift(a, &b_lift)
    }

    /// `mu_f([a, b])` for lifts `a <= b <= a + 1`; `[a, a + 1]` has measure one.
    pub fn measure_lift(&self, a: &Real, b: &Real) -> Real {
        self.h_lift(b) - self.h_lift(a)
    }

    /// `mu_f(f([a, b])) - mu_f([a, b])`.
    pub fn invariance_defect(&self, a: &Real, b: &Real) -> Real {
        let b_lift = a + circle::arc_len(a, b);
        let fa = self.table.f.lift(a);
        let fb = self.table.f.lift(&b_lift);
        self.measure_lift(&fa, &fb) - self.measure_lift(a, &b_lift)
    }
}

/// Averaging length used by [`invariant_measure`] for `n` samples.
pub fn default_averaging(n: usize) -> usize {
    n
}

/// `mu_f([a, b])` from `n` orbit samples.
pub fn invariant_measure(f: &CircleMap, alpha: &Real, a: &Real, b: &Real, n: usize) -> Result<Real, ConjugacyError> {
    Ok(InvariantMeasure::new(f, alpha, n, default_averaging(n))?.measure(a, b))
}

/// Concentration of the increments of `h` over a uniform grid.
#[derive(Debug, Clone, Serialize)]
pub struct SingularityProfile {
    pub grid: usize,
    /// `h((j + 1)/M) - h(j/M)`.
    pub increments: Vec<f64>,
    /// Increments sorted in decreasing order, as cumulative mass.
    cumulative: Vec<f64>,
    /// `(p, s(p))` at `p = 0.5, 0.9, 0.99`.
    pub summary: Vec<(f64, f64)>,
    /// `(lower edge of log10 bin, count)`, bin width one half.
    pub histogram: Vec<(f64, usize)>,
}

impl SingularityProfile {
    /// Smallest fraction of cells carrying mass at least `p`.
    pub fn s(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        // Guard against the sum of increments falling a hair short of one.
        let target = p.min(1.0) - 1e-12;
        let c = self.cumulative.partition_point(|&m| m < target);
        (c + 1).min(self.grid) as f64 / self.grid as f64
    }

    /// `(p, s(p))` on `p = 0, 1/steps, ..., 1`.
    pub fn curve(&self, steps: usize) -> Vec<(f64, f64)> {
        (0..=steps).map(|i| i as f64 / steps as f64).map(|p| (p, self.s(p))).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.increments.iter().sum()
    }
}

/// Profile of `h` on `grid` cells; the table must hold at least `10 * grid` samples.
pub fn singularity_profile(table: &ConjugacyTable, grid: usize) -> Result<SingularityProfile, ConjugacyError> {
    singularity_profile_of(&table.interp, grid)
}

/// [`singularity_profile`] for bare sample pairs.
pub fn singularity_profile_of(interp: &Interpolant, grid: usize) -> Result<SingularityProfile, ConjugacyError> {
    if grid == 0 || interp.len() < 10 * grid {
        return Err(ConjugacyError::TooFewSamples { need: 10 * grid.max(1), got: interp.len() });
    }
    let m = Real::from_i64(grid as i64);
    let h: Vec<Real> = (0..=grid).map(|j| interp.lift(&(Real::from_i64(j as i64) / &m))).collect();
    let increments: Vec<f64> = h.windows(2).map(|w| (&w[1] - &w[0]).to_f64()).collect();
    let mut sorted = increments.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let cumulative: Vec<f64> = sorted
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    let mut bins = std::collections::BTreeMap::new();
    for &v in &increments {
        let e = if v > 0.0 { (v.log10() * 2.0).floor() as i64 } else { i64::MIN / 4 };
        *bins.entry(e).or_insert(0usize) += 1;
    }
    let histogram = bins.into_iter().map(|(e, c)| (e as f64 / 2.0, c)).collect();
    let mut p = SingularityProfile { grid, increments, cumulative, summary: Vec::new(), histogram };
    p.summary = [0.5, 0.9, 0.99].iter().map(|&q| (q, p.s(q))).collect();
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurePrediction {
    /// `mu_f` equivalent to Lebesgue.
    Equivalent,
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileTrend {
    Concentrating,
    Stable,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VerdictConfig {
    /// Bounded-type bound on the certified quotients.
    pub bound: u64,
    /// `s` is evaluated at this mass.
    pub p: f64,
    /// Concentrating: strictly decreasing and last/first at most this.
    pub concentration_ratio: f64,
    /// Stable: relative spread at most this.
    pub stable_spread: f64,
    pub max_iter: usize,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        VerdictConfig { bound: 8, p: 0.9, concentration_ratio: 0.97, stable_spread: 0.02, max_iter: 1000 }
    }
}

/// q-indices used by [`d_property_verdict`] when none are given. Below
/// `q_14` the grid has too few cells for `s(0.9)` to settle.
pub const VERDICT_DEPTHS: [usize; 3] = [14, 18, 22];

#[derive(Debug, Clone, Serialize)]
pub struct DepthScore {
    pub depth: usize,
    pub samples: usize,
    pub grid: usize,
    pub s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DVerdict {
    pub d_property: bool,
    pub prediction: MeasurePrediction,
    pub scores: Vec<DepthScore>,
    pub trend: ProfileTrend,
    pub agreement: bool,
    /// False when the certified prefix is not of bounded type.
    pub hypotheses_met: bool,
    pub bounded: BoundedTypeReport,
}

/// Classifies a sequence of `s(p)` scores taken at increasing depths.
pub fn profile_trend(scores: &[f64], cfg: &VerdictConfig) -> ProfileTrend {
    if scores.len() < 2 {
        return ProfileTrend::Indeterminate;
    }
    let first = scores[0];
    let last = *scores.last().unwrap();
    let decreasing = scores.windows(2).all(|w| w[1] < w[0]);
    if decreasing && last <= cfg.concentration_ratio * first {
        return ProfileTrend::Concentrating;
    }
    let hi = scores.iter().copied().fold(f64::MIN, f64::max);
    let lo = scores.iter().copied().fold(f64::MAX, f64::min);
    if hi - lo <= cfg.stable_spread * hi {
        ProfileTrend::Stable
    } else {
        ProfileTrend::Indeterminate
    }
}

/// Profile of `h_f` with grid `q_n / 10` for the conjugacy built from `q_n` samples.
pub fn profile_at_depth(f: &CircleMap, rot: &ConvergentTable, n: usize, p: f64) -> Result<DepthScore, ConjugacyError> {
    if n > rot.depth() {
        return Err(ConjugacyError::DepthBeyondTable { n });
    }
    let samples = rot.qn(n);
    let grid = (samples / 10).max(1);
    let zero = Real::zero();
    let table = build_conjugacy(f, &CircleMap::rotation(&rot.alpha), &zero, &zero, samples)?;
    let prof = singularity_profile(&table, grid)?;
    Ok(DepthScore { depth: n, samples, grid, s: prof.s(p) })
}

/// Compares the (D)-property of `f` with the concentration trend of its
/// conjugacy to `R_alpha` over the q-indices `depths`.
pub fn d_property_verdict(
    f: &CircleMap,
    rot: &ConvergentTable,
    depths: &[usize],
    cfg: &VerdictConfig,
) -> Result<DVerdict, ConjugacyError> {
    let report = orbitalg::analyze_orbits(f, cfg.max_iter)?;
    let bounded = is_bounded_type(rot, cfg.bound);
    let scores = depths.iter().map(|&n| profile_at_depth(f, rot, n, cfg.p)).collect::<Result<Vec<_>, _>>()?;
    let values: Vec<f64> = scores.iter().map(|s| s.s).collect();
    let trend = profile_trend(&values, cfg);
    let prediction = if report.d_property { MeasurePrediction::Equivalent } else { MeasurePrediction::Singular };
    let agreement = matches!(
        (prediction, trend),
        (MeasurePrediction::Equivalent, ProfileTrend::Stable) | (MeasurePrediction::Singular, ProfileTrend::Concentrating)
    );
    Ok(DVerdict {
        d_property: report.d_property,
        prediction,
        scores,
        trend,
        agreement,
        hypotheses_met: bounded.bounded,
        bounded,
    })
}
