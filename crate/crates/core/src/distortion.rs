//! Ratio distortion, distortion inequalities, and primary/secondary cells.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circle;
use crate::circlemaps::CircleMap;
use crate::dynpart::{self, build_partition, PartitionError, Side};
use crate::numberth::ConvergentTable;
use crate::orbitalg::{self, OrbitError, PointMap};
use crate::real::{self, Real};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistortionError {
    #[error("triple is degenerate or not in cyclic order")]
    DegenerateTriple,
    #[error("depth {n} too shallow: property {property} fails")]
    DepthTooShallow { n: usize, property: &'static str },
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("no classification criterion met for break at {0}")]
    InconclusiveWindow(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
}

/// Three circle points in strict counter-clockwise order.
#[derive(Debug, Clone, Serialize)]
pub struct Triple {
    pub z: [Real; 3],
}

impl Triple {
    pub fn new(z1: Real, z2: Real, z3: Real) -> Result<Self, DistortionError> {
        let tol = real::tolerance_for(z1.prec());
        let a = circle::arc_len(&z1, &z2);
        let b = circle::arc_len(&z1, &z3);
        if a <= tol || &b - &a <= tol || b.one_like() - &b <= tol {
            return Err(DistortionError::DegenerateTriple);
        }
        Ok(Triple { z: [z1, z2, z3] })
    }

    /// Lifted vector `z1 < z2 < z3 < z1 + 1`.
    pub fn lifted(&self) -> [Real; 3] {
        let b = self.z[0].frac();
        let l2 = circle::lift_above(&self.z[1], &b);
        let l3 = circle::lift_above(&self.z[2], &b);
        [b, l2, l3]
    }

    pub fn map(&self, h: &dyn PointMap) -> Result<Triple, DistortionError> {
        Triple::new(h.eval(&self.z[0]), h.eval(&self.z[1]), h.eval(&self.z[2]))
    }
}

/// `(x2 - x1) / (x3 - x2)`.
pub fn ratio_line(x: &[Real; 3]) -> Real {
    (&x[1] - &x[0]) / (&x[2] - &x[1])
}

pub fn ratio(t: &Triple) -> Real {
    ratio_line(&t.lifted())
}

/// `Dr` of a strictly increasing function on a lifted vector.
pub fn dr_line(f: impl Fn(&Real) -> Real, x: &[Real; 3]) -> Real {
    let y = [f(&x[0]), f(&x[1]), f(&x[2])];
    ratio_line(&y) / ratio_line(x)
}

/// `Dr_f(t)`, independent of the lift.
pub fn dr(f: &CircleMap, t: &Triple) -> Real {
    dr_line(|x| f.lift(x), &t.lifted())
}

/// `Dr_{f^k}(t)`.
pub fn dr_iter(f: &CircleMap, t: &Triple, k: u64) -> Real {
    dr_line(|x| f.lift_iter(x, k), &t.lifted())
}

/// `log Df^k(x)` with right derivatives.
pub fn log_df_iter(f: &CircleMap, x: &Real, k: usize) -> f64 {
    f.log_deriv_iter(x, k)
}

fn sample(rng: &mut ChaCha8Rng) -> Real {
    Real::from_f64(rng.gen::<f64>())
}

fn point_in_arc(a: &Real, b: &Real, u: f64) -> Real {
    (a + circle::arc_len(a, b) * Real::from_f64(u)).frac()
}

#[derive(Debug, Clone, Serialize)]
pub struct FinziReport {
    pub n: usize,
    pub samples: usize,
    pub worst: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Samples `x, y` in a common `[z, f^{q_{n-1}} z]` and `0 <= k <= q_n`;
/// reports the worst `|log Df^k(x) - log Df^k(y)|` against `V`.
pub fn verify_finzi(f: &CircleMap, table: &ConvergentTable, n: usize, samples: usize, seed: u64) -> FinziReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = f.log_variation();
    let qp = table.qn(n - 1) as i64;
    let qn = table.qn(n);
    let mut worst = 0f64;
    for _ in 0..samples {
        let z = sample(&mut rng);
        let w = f.iterate(&z, qp);
        let x = point_in_arc(&z, &w, rng.gen());
        let y = point_in_arc(&z, &w, rng.gen());
        let k = rng.gen_range(0..=qn);
        let d = (log_df_iter(f, &x, k) - log_df_iter(f, &y, k)).abs();
        worst = worst.max(d);
    }
    FinziReport { n, samples, worst, bound: v, holds: worst <= v + 1e-9 }
}

#[derive(Debug, Clone, Serialize)]
pub struct DenjoyLevel {
    pub n: usize,
    pub q: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DenjoyReport {
    pub levels: Vec<DenjoyLevel>,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

/// `Df^{q_n}(x)` over sampled `x` for `1 <= n <= n_max`, against `[e^{-V}, e^V]`.
pub fn verify_denjoy(f: &CircleMap, table: &ConvergentTable, n_max: usize, samples: usize, seed: u64) -> DenjoyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = f.log_variation();
    let xs: Vec<Real> = (0..samples).map(|_| sample(&mut rng)).collect();
    let mut levels = Vec::new();
    for n in 1..=n_max {
        let q = table.qn(n);
        let (mut lo, mut hi) = (f64::INFINITY, 0f64);
        for x in &xs {
            let d = log_df_iter(f, x, q).exp();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        levels.push(DenjoyLevel { n, q, min: lo, max: hi });
    }
    let (lower, upper) = ((-v).exp(), v.exp());
    let holds = levels.iter().all(|l| l.min >= lower - 1e-9 && l.max <= upper + 1e-9);
    DenjoyReport { levels, lower, upper, holds }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparabilityReport {
    pub n: usize,
    pub samples: usize,
    /// Worst `|log (m f^j K1 / m f^j K2) - log (m K1 / m K2)|`.
    pub worst: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Random segments `K1, K2` of `[z1, z3]`, `z3 = f^{2 q_{n-1}} z1`, and
/// `|j| <= q_n`, against the `e^{2V}` envelope.
pub fn verify_comparability(f: &CircleMap, table: &ConvergentTable, n: usize, samples: usize, seed: u64) -> ComparabilityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = f.log_variation();
    let qp = table.qn(n - 1) as i64;
    let qn = table.qn(n) as i64;
    let mut worst = 0f64;
    for _ in 0..samples {
        let z1 = sample(&mut rng);
        let z3 = f.iterate(&z1, 2 * qp);
        let mut seg = || {
            let (mut a, mut b) = (rng.gen::<f64>(), rng.gen::<f64>());
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            (point_in_arc(&z1, &z3, a), point_in_arc(&z1, &z3, b))
        };
        let (a1, b1) = seg();
        let (a2, b2) = seg();
        let j = rng.gen_range(-qn..=qn);
        let m = |a: &Real, b: &Real| circle::arc_len(a, b).to_f64().ln();
        let before = m(&a1, &b1) - m(&a2, &b2);
        let after = m(&f.iterate(&a1, j), &f.iterate(&b1, j)) - m(&f.iterate(&a2, j), &f.iterate(&b2, j));
        if before.is_finite() && after.is_finite() {
            worst = worst.max((after - before).abs());
        }
    }
    ComparabilityReport { n, samples, worst, bound: 2.0 * v, holds: worst <= 2.0 * v + 1e-9 }
}

/// Constants for cells and classification.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CellConfig {
    /// `K` in the per-iterate length bound `K lambda^n`.
    pub k_const: f64,
    pub theta_low: f64,
    pub theta_mid: f64,
    /// Fraction of window levels that counts as an infinite subsequence.
    pub q1_fraction: f64,
}

impl Default for CellConfig {
    fn default() -> Self {
        CellConfig { k_const: 4.0, theta_low: 0.05, theta_mid: 0.15, q1_fraction: 0.6 }
    }
}

/// `e^{3V} + e^V + 1`.
pub fn r_const(v: f64) -> f64 {
    (3.0 * v).exp() + v.exp() + 1.0
}

/// Conditions (a) and (b) for `x0` and constant `r`.
pub fn conditions_ab(t: &Triple, x0: &Real, r: f64) -> bool {
    let m12 = circle::arc_len(&t.z[0], &t.z[1]).to_f64();
    let m23 = circle::arc_len(&t.z[1], &t.z[2]).to_f64();
    let a = m23 / m12;
    let b = t.z.iter().map(|z| circle::dist(x0, z).to_f64()).fold(0.0, f64::max);
    a >= 1.0 / r && a <= r && b <= r * m12
}

/// `(y1, y2, y3)` and the index of `c` for level `n`, without property checks.
#[derive(Debug, Clone, Serialize)]
pub struct CellPoints {
    pub n: usize,
    pub y1: Real,
    pub y2: Real,
    pub y3: Real,
    /// `i_n(c)` relative to `xi_n(x0)`.
    pub i_c: usize,
    pub side: Side,
}

pub fn cell_points(f: &CircleMap, table: &ConvergentTable, x0: &Real, c: &Real, n: usize) -> Result<CellPoints, DistortionError> {
    let part = build_partition(f, x0, n, table)?;
    let loc = part.locate(c, table);
    let qp = table.qn(n - 1) as i64;
    let y2 = f.iterate(c, -(loc.i as i64));
    let y1 = f.iterate(&y2, -qp);
    let y3 = f.iterate(&y2, qp);
    Ok(CellPoints { n, y1, y2, y3, i_c: loc.i, side: loc.side })
}

#[derive(Debug, Clone, Serialize)]
pub struct PrimaryCell {
    pub points: CellPoints,
    pub x0: Real,
    pub c: Real,
    pub delta: Real,
    pub q_prev: usize,
    pub q_n: usize,
    pub v: f64,
    pub r: f64,
}

impl PrimaryCell {
    pub fn triple(&self) -> Triple {
        Triple { z: [self.points.y1.clone(), self.points.y2.clone(), self.points.y3.clone()] }
    }

    /// `m([y1, y2])`, the scale `l_{n-1}`.
    pub fn scale(&self) -> Real {
        circle::arc_len(&self.points.y1, &self.points.y2)
    }
}

fn lambda_n(v: f64, n: usize) -> f64 {
    dynpart::lambda(v).powi(n as i32)
}

/// Lengths of `f^j([a, b])` for `0 <= j < count`.
fn iterate_lengths(f: &CircleMap, a: &Real, b: &Real, count: usize) -> Vec<f64> {
    let mut x = a.clone();
    let mut y = b.clone();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(circle::arc_len(&x, &y).to_f64());
        x = f.apply(&x);
        y = f.apply(&y);
    }
    out
}

/// Builds and verifies the primary cell for `(f, x0, c, delta)` at depth `n`.
pub fn build_primary_cell(
    f: &CircleMap,
    table: &ConvergentTable,
    x0: &Real,
    c: &Real,
    delta: &Real,
    n: usize,
    cfg: &CellConfig,
) -> Result<PrimaryCell, DistortionError> {
    let points = cell_points(f, table, x0, c, n)?;
    let v = f.log_variation();
    let cell = PrimaryCell {
        x0: x0.clone(),
        c: c.clone(),
        delta: delta.clone(),
        q_prev: table.qn(n - 1),
        q_n: table.qn(n),
        v,
        r: r_const(v),
        points,
    };
    let fail = |property| Err(DistortionError::DepthTooShallow { n, property });
    let p = &cell.points;
    let qn = cell.q_n as i64;
    let ys = [p.y1.clone(), p.y2.clone(), p.y3.clone()];
    let fq: Vec<Real> = ys.iter().map(|y| f.iterate(y, qn)).collect();
    if ys.iter().chain(fq.iter()).any(|y| circle::dist(y, x0) >= *delta) {
        return fail("c-0");
    }
    let part_x0 = dynpart::delta(table, n - 1, 0);
    let short_x0 = dynpart::delta(table, n, 0);
    let orbit_x0 = f.orbit(x0, cell.q_n + 1);
    let in_arc = |iv: dynpart::Interval| circle::in_closed_arc(&p.y2, &orbit_x0[iv.left], &orbit_x0[iv.right]);
    if !in_arc(part_x0) && !in_arc(short_x0) {
        return fail("c-1");
    }
    let lens = iterate_lengths(f, &p.y1, &p.y3, cell.q_n);
    if lens.iter().any(|&l| l > cfg.k_const * lambda_n(v, n)) {
        return fail("c-2");
    }
    if lens.iter().sum::<f64>() > 2.0 {
        return fail("c-3");
    }
    let image = Triple { z: [fq[0].clone(), fq[1].clone(), fq[2].clone()] };
    if !conditions_ab(&cell.triple(), x0, cell.r) || !conditions_ab(&image, x0, cell.r) {
        return fail("c-4");
    }
    // Open arcs: c is an endpoint of f^{i_c - q_{n-1}}([y1, y3]) by construction.
    let tol = orbitalg::default_match_tol();
    let mut a = p.y1.clone();
    let mut b = p.y3.clone();
    let breaks = f.breaks();
    for i in 0..cell.q_n {
        if i == p.i_c {
            if breaks.iter().any(|d| circle::dist(&d.x, c) > tol && strictly_inside(&d.x, &a, &b, &tol)) {
                return fail("c-5");
            }
        } else if strictly_inside(c, &a, &b, &tol) {
            return fail("c-5");
        }
        a = f.apply(&a);
        b = f.apply(&b);
    }
    Ok(cell)
}

/// `x` in the open arc `(a, b)` and farther than `tol` from both ends.
fn strictly_inside(x: &Real, a: &Real, b: &Real, tol: &Real) -> bool {
    let t = circle::arc_len(a, x);
    t > *tol && t < circle::arc_len(a, b) - tol
}

/// First depth in `range` (odd levels only) with a valid primary cell.
pub fn first_admissible_depth(
    f: &CircleMap,
    table: &ConvergentTable,
    x0: &Real,
    c: &Real,
    delta: &Real,
    range: std::ops::RangeInclusive<usize>,
    cfg: &CellConfig,
) -> Option<(usize, PrimaryCell)> {
    range
        .filter(|n| n % 2 == 1)
        .find_map(|n| build_primary_cell(f, table, x0, c, delta, n, cfg).ok().map(|cell| (n, cell)))
}

/// One level of `t_n(d)`.
#[derive(Debug, Clone, Serialize)]
pub struct TLevel {
    pub n: usize,
    pub t: f64,
    /// `i_n(d)` relative to the cell.
    pub i: usize,
    pub j: usize,
    /// `i_n(d) < q_{n-1}`.
    pub low_regime: bool,
}

/// `t_n(d)` for the cell built from `(x0, c)` at depth `n`.
pub fn t_level(f: &CircleMap, table: &ConvergentTable, x0: &Real, c: &Real, d: &Real, n: usize) -> Result<TLevel, DistortionError> {
    let p = cell_points(f, table, x0, c, n)?;
    let part = build_partition(f, &p.y1, n, table)?;
    let loc = part.locate(d, table);
    let back = f.iterate(d, -(loc.i as i64));
    let num = circle::arc_len(&back, &p.y2);
    let qp = table.qn(n - 1);
    let low = loc.i < qp;
    let den = if low {
        circle::arc_len(&f.iterate(&p.y1, table.qn(n) as i64), &p.y2)
    } else {
        circle::arc_len(&p.y1, &p.y2)
    };
    Ok(TLevel { n, t: (num / den).to_f64(), i: loc.i, j: loc.phi, low_regime: low })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QTag {
    Q11,
    Q12,
    Q2,
    Q3,
    Q4Suspect,
}

impl QTag {
    pub fn in_e(self) -> bool {
        matches!(self, QTag::Q2 | QTag::Q3)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BreakClass {
    pub d: Real,
    pub levels: Vec<TLevel>,
    pub tag: QTag,
    /// Levels forming the subsequence `A` behind a `Q1` tag.
    pub subset: Vec<usize>,
    /// Window levels not used for the tag.
    pub discarded: Vec<usize>,
    /// `min over A of min(t, 1 - t)` for `Q1` tags.
    pub gamma: Option<f64>,
}

/// Tags one break from its `t_n` values over `window`.
pub fn classify_levels(d: &Real, levels: Vec<TLevel>, cfg: &CellConfig) -> Result<BreakClass, DistortionError> {
    let n = levels.len();
    let tail = &levels[n / 2..];
    let all_levels: Vec<usize> = levels.iter().map(|l| l.n).collect();
    let rest = |keep: &[usize]| all_levels.iter().copied().filter(|n| !keep.contains(n)).collect::<Vec<_>>();
    let mk = |tag, subset: Vec<usize>, gamma| {
        let discarded = rest(&subset);
        Ok(BreakClass { d: d.clone(), levels: levels.clone(), tag, subset, discarded, gamma })
    };
    let tail_levels: Vec<usize> = tail.iter().map(|l| l.n).collect();
    if tail.iter().all(|l| l.t < cfg.theta_low) {
        return mk(QTag::Q2, tail_levels, None);
    }
    if tail.iter().all(|l| l.t > 1.0 - cfg.theta_low) {
        return mk(QTag::Q3, tail_levels, None);
    }
    let mid: Vec<&TLevel> = levels.iter().filter(|l| l.t >= cfg.theta_mid && l.t <= 1.0 - cfg.theta_mid).collect();
    if mid.len() as f64 >= cfg.q1_fraction * n as f64 {
        let low: Vec<&TLevel> = mid.iter().copied().filter(|l| l.low_regime).collect();
        let high: Vec<&TLevel> = mid.iter().copied().filter(|l| !l.low_regime).collect();
        let (tag, a) = if low.len() >= high.len() { (QTag::Q11, low) } else { (QTag::Q12, high) };
        let gamma = a.iter().map(|l| l.t.min(1.0 - l.t)).fold(f64::INFINITY, f64::min);
        return mk(tag, a.iter().map(|l| l.n).collect(), Some(gamma));
    }
    let near0 = tail.iter().any(|l| l.t < cfg.theta_low);
    let near1 = tail.iter().any(|l| l.t > 1.0 - cfg.theta_low);
    let extreme = tail.iter().all(|l| l.t < cfg.theta_low || l.t > 1.0 - cfg.theta_low);
    if near0 && near1 && extreme {
        return mk(QTag::Q4Suspect, tail_levels, None);
    }
    Err(DistortionError::InconclusiveWindow(d.to_decimal()))
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub c: Real,
    pub classes: Vec<BreakClass>,
    /// Breaks whose window met no criterion.
    pub inconclusive: Vec<Real>,
    /// Breaks skipped because they lie on the orbit of `c`.
    pub same_orbit: Vec<Real>,
    pub gamma0: Option<f64>,
}

impl Classification {
    /// `E = {c} ∪ Q2 ∪ Q3`.
    pub fn e_set(&self) -> Vec<Real> {
        let mut e = vec![self.c.clone()];
        e.extend(self.classes.iter().filter(|b| b.tag.in_e()).map(|b| b.d.clone()));
        e
    }

    /// `gamma0`, or `theta_mid` when no break is in `Q1`.
    pub fn gamma0_or(&self, cfg: &CellConfig) -> f64 {
        self.gamma0.unwrap_or(cfg.theta_mid)
    }

    pub fn tag_of(&self, d: &Real) -> Option<QTag> {
        let tol = orbitalg::default_match_tol();
        self.classes.iter().find(|b| circle::dist(&b.d, d) <= tol).map(|b| b.tag)
    }
}

fn check_window(window: &[usize]) -> Result<(), DistortionError> {
    if window.len() < 5 || window.iter().any(|n| n % 2 == 0) || window.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DistortionError::BadParameters("window needs at least five increasing odd levels".into()));
    }
    Ok(())
}

/// Like [`classify_breaks`] but records inconclusive breaks instead of failing.
pub fn classify_breaks_lenient(
    f: &CircleMap,
    table: &ConvergentTable,
    x0: &Real,
    c: &Real,
    window: &[usize],
    max_iter: usize,
    cfg: &CellConfig,
) -> Result<Classification, DistortionError> {
    check_window(window)?;
    let tol = orbitalg::default_match_tol();
    let mut classes = Vec::new();
    let mut inconclusive = Vec::new();
    let mut same = Vec::new();
    for b in f.breaks() {
        if orbitalg::same_orbit(f, c, &b.x, max_iter, &tol)?.is_some() {
            if circle::dist(&b.x, c) > tol {
                same.push(b.x.clone());
            }
            continue;
        }
        let levels = window.iter().map(|&n| t_level(f, table, x0, c, &b.x, n)).collect::<Result<Vec<_>, _>>()?;
        match classify_levels(&b.x, levels, cfg) {
            Ok(k) => classes.push(k),
            Err(DistortionError::InconclusiveWindow(_)) => inconclusive.push(b.x.clone()),
            Err(e) => return Err(e),
        }
    }
    let gamma0 = classes.iter().filter_map(|b| b.gamma).reduce(f64::min);
    Ok(Classification { c: c.clone(), classes, inconclusive, same_orbit: same, gamma0 })
}

/// Classifies every break of `f` off the orbit of `c` over the odd `window`.
pub fn classify_breaks(
    f: &CircleMap,
    table: &ConvergentTable,
    x0: &Real,
    c: &Real,
    window: &[usize],
    max_iter: usize,
    cfg: &CellConfig,
) -> Result<Classification, DistortionError> {
    let cl = classify_breaks_lenient(f, table, x0, c, window, max_iter, cfg)?;
    match cl.inconclusive.first() {
        Some(d) => Err(DistortionError::InconclusiveWindow(d.to_decimal())),
        None => Ok(cl),
    }
}

/// `(beta, gamma)`-derived cell around `y2`.
#[derive(Debug, Clone, Serialize)]
pub struct SecondaryCell {
    pub primary: PrimaryCell,
    pub z: Triple,
    pub beta: f64,
    pub gamma: f64,
    /// `R e^{2V} / beta`.
    pub r_beta: f64,
    /// `(d, k_n(d))` for every `d` whose backward orbit meets the cell.
    pub k: Vec<(Real, usize)>,
}

/// Unique `k < count` with `f^{-k}(d)` within `radius` of `center`.
fn backward_hits(f: &CircleMap, d: &Real, center: &Real, radius: &Real, count: usize) -> Vec<usize> {
    let mut x = d.clone();
    let mut out = Vec::new();
    for k in 0..count {
        if circle::dist(&x, center) <= *radius {
            out.push(k);
        }
        x = f.apply_inv(&x);
    }
    out
}

/// Builds the secondary cell and checks properties (0)-(6). `e_set` is
/// `E(c1, c)`; breaks on the orbit of `c` ride along with `c`.
pub fn build_secondary_cell(
    f: &CircleMap,
    cell: &PrimaryCell,
    beta: f64,
    gamma: f64,
    gamma0: f64,
    e_set: &[Real],
    cfg: &CellConfig,
) -> Result<SecondaryCell, DistortionError> {
    if !(beta > 0.0 && beta < gamma && gamma < gamma0) {
        return Err(DistortionError::BadParameters(format!("need 0 < beta < gamma < gamma0, got {beta}, {gamma}, {gamma0}")));
    }
    let n = cell.points.n;
    let fail = |property| Err(DistortionError::DepthTooShallow { n, property });
    let p = &cell.points;
    let l = cell.scale();
    let off = &l * Real::from_f64((beta + gamma) / 2.0);
    let z1 = (&p.y2 - &off).frac();
    let z3 = (&p.y2 + &off).frac();
    let z = Triple::new(z1, p.y2.clone(), z3)?;
    // (0)
    let vg = &l * Real::from_f64(gamma);
    let m23 = circle::arc_len(&p.y2, &p.y3);
    if off > vg || vg > l || vg > m23 {
        return fail("0");
    }
    // (1): unique k_n(d) for d in E and its orbit companions.
    let tol = orbitalg::default_match_tol();
    let radius = &l * Real::from_f64(beta / 4.0);
    let mut ks: Vec<(Real, usize)> = Vec::new();
    let breaks = f.breaks();
    let tracked: Vec<Real> = breaks
        .iter()
        .filter(|b| {
            e_set.iter().any(|e| circle::dist(e, &b.x) <= tol)
                || orbitalg::same_orbit(f, &cell.c, &b.x, cell.q_n, &tol).ok().flatten().is_some()
        })
        .map(|b| b.x.clone())
        .collect();
    for d in &tracked {
        let hits = backward_hits(f, d, &p.y2, &radius, cell.q_n);
        let on_c_orbit = circle::dist(d, &cell.c) > tol && !e_set.iter().any(|e| circle::dist(e, d) <= tol);
        match hits.as_slice() {
            [k] => ks.push((d.clone(), *k)),
            [] if on_c_orbit => {}
            _ => return fail("1"),
        }
    }
    // (2), (3)
    let lens = iterate_lengths(f, &z.z[0], &z.z[2], cell.q_n);
    if lens.iter().any(|&x| x > cfg.k_const * lambda_n(cell.v, n)) {
        return fail("2");
    }
    if lens.iter().sum::<f64>() > 2.0 {
        return fail("3");
    }
    // (4)
    let r_beta = cell.r * (2.0 * cell.v).exp() / beta;
    let qn = cell.q_n as i64;
    let image = Triple { z: [f.iterate(&z.z[0], qn), f.iterate(&z.z[1], qn), f.iterate(&z.z[2], qn)] };
    if !conditions_ab(&z, &cell.x0, r_beta) || !conditions_ab(&image, &cell.x0, r_beta) {
        return fail("4");
    }
    // (5): only the recorded (d, k_n(d)) pairs may meet the iterates.
    for b in &breaks {
        let mut x = b.x.clone();
        for i in 0..cell.q_n {
            if circle::in_closed_arc(&x, &z.z[0], &z.z[2]) && !ks.iter().any(|(d, k)| *k == i && circle::dist(d, &b.x) <= tol) {
                return fail("5");
            }
            x = f.apply_inv(&x);
        }
    }
    // (6)
    for (d, k) in &ks {
        if !circle::in_open_arc(&f.iterate(d, -(*k as i64)), &z.z[0], &z.z[2]) {
            return fail("6");
        }
    }
    Ok(SecondaryCell { primary: cell.clone(), z, beta, gamma, r_beta, k: ks })
}

/// One depth of a distortion trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub n: usize,
    pub q_n: usize,
    pub dr_f: f64,
    pub dr_g: f64,
    pub d_n: f64,
    pub pi_target: f64,
    /// `e^{-2V''} <= Dr <= e^{2V''}` for both maps.
    pub within_envelope: bool,
    /// For every `d` in `E`, exactly one `k < q_n` puts `g^{-k}(h d)` within
    /// `beta/2` of `h(y2)` at the `g`-scale.
    pub h1_unique: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionTrace {
    pub records: Vec<TraceRecord>,
    pub classification: Classification,
    /// Tag of `c1` over the classification window, if one was reached.
    pub c1_tag: Option<QTag>,
    /// `prod_{b in E} sigma_f(b)`, breaks on the orbit of `c` included.
    pub pi_f: f64,
    /// `prod_{d in E} sigma_g(h d)`.
    pub pi_g: f64,
    /// `Pi(c1, c) = pi_g / pi_f`.
    pub pi: f64,
    pub gamma0: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Inputs of a trace besides the maps.
#[derive(Debug, Clone)]
pub struct TraceSetup {
    pub x0: Real,
    pub c: Real,
    /// Partner break off the orbit of `c`; it belongs to `Q1` along some
    /// subsequence for bounded-type rotation numbers, so it never enters `E`.
    pub c1: Option<Real>,
    pub delta: Real,
    pub beta: f64,
    pub gamma: f64,
    pub window: Vec<usize>,
    /// Levels used for classification (at least five odd levels).
    pub class_window: Vec<usize>,
    pub max_iter: usize,
    pub cfg: CellConfig,
}

fn jump_at(f: &CircleMap, x: &Real) -> f64 {
    let (l, r) = f.derivs(x);
    (l / r).to_f64()
}

/// `D_n = Dr_{g^{q_n}}(h z) / Dr_{f^{q_n}}(z)` over the window, with the
/// jump-product target `Pi(c1, c)`.
pub fn trace_distortion(
    f: &CircleMap,
    g: &CircleMap,
    h: &dyn PointMap,
    table: &ConvergentTable,
    setup: &TraceSetup,
) -> Result<DistortionTrace, DistortionError> {
    let class = classify_breaks_lenient(f, table, &setup.x0, &setup.c, &setup.class_window, setup.max_iter, &setup.cfg)?;
    let tol = orbitalg::default_match_tol();
    // Breaks on the orbit of the partner `c1` ride along with it.
    let mut partner = Vec::new();
    if let Some(c1) = &setup.c1 {
        for b in f.breaks() {
            if orbitalg::same_orbit(f, c1, &b.x, setup.max_iter, &tol)?.is_some() {
                partner.push(b.x);
            }
        }
    }
    let is_c1 = |d: &Real| partner.iter().any(|p| circle::dist(p, d) <= tol);
    if let Some(d) = class.inconclusive.iter().find(|d| !is_c1(d)) {
        return Err(DistortionError::InconclusiveWindow(d.to_decimal()));
    }
    let gamma0 = class.gamma0_or(&setup.cfg);
    let e: Vec<Real> = class.e_set().into_iter().filter(|d| !is_c1(d)).collect();
    let mut e_full = e.clone();
    e_full.extend(class.same_orbit.iter().cloned());
    let pi_f: f64 = e_full.iter().map(|b| jump_at(f, b)).product();
    let pi_g: f64 = e_full.iter().map(|b| jump_at(g, &h.eval(b))).product();
    let vv = f.log_variation().max(g.log_variation()) + 0.1;
    let mut records = Vec::new();
    for &n in &setup.window {
        let cell = build_primary_cell(f, table, &setup.x0, &setup.c, &setup.delta, n, &setup.cfg)?;
        let sec = build_secondary_cell(f, &cell, setup.beta, setup.gamma, gamma0, &e, &setup.cfg)?;
        let q = cell.q_n as u64;
        let dr_f = dr_iter(f, &sec.z, q).to_f64();
        let hz = sec.z.map(h)?;
        let dr_g = dr_iter(g, &hz, q).to_f64();
        let env = (2.0 * vv).exp();
        let within = [dr_f, dr_g].iter().all(|&d| d >= 1.0 / env && d <= env);
        let hy1 = h.eval(&cell.points.y1);
        let hy2 = h.eval(&cell.points.y2);
        let radius = circle::arc_len(&hy1, &hy2) * Real::from_f64(setup.beta / 2.0);
        let h1_unique = e.iter().all(|d| backward_hits(g, &h.eval(d), &hy2, &radius, cell.q_n).len() == 1);
        records.push(TraceRecord {
            n,
            q_n: cell.q_n,
            dr_f,
            dr_g,
            d_n: dr_g / dr_f,
            pi_target: pi_g / pi_f,
            within_envelope: within,
            h1_unique,
        });
    }
    let c1_tag = setup.c1.as_ref().and_then(|c1| class.tag_of(c1));
    Ok(DistortionTrace { records, classification: class, c1_tag, pi_f, pi_g, pi: pi_g / pi_f, gamma0, beta: setup.beta, gamma: setup.gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circlemaps::two_piece_pl;
    use crate::numberth::{cf_expand_surd, QuadSurd};

    fn r(s: &str) -> Real {
        Real::parse(s).unwrap()
    }

    #[test]
    fn ratio_of_thirds() {
        assert!((ratio_line(&[r("0"), r("1/3"), r("1")]) - r("1/2")).abs() < real::tolerance_for(250));
    }

    #[test]
    fn rotation_preserves_ratios() {
        let f = CircleMap::rotation(&r("0.377"));
        let t = Triple::new(r("0.9"), r("0.05"), r("0.3")).unwrap();
        assert!((dr(&f, &t) - 1).abs() < real::tolerance_for(240));
    }

    #[test]
    fn degenerate_triples() {
        assert!(Triple::new(r("0.1"), r("0.1"), r("0.3")).is_err());
        assert!(Triple::new(r("0.1"), r("0.3"), r("0.2")).is_err());
    }

    #[test]
    fn pl_break_shows_in_dr() {
        let f = two_piece_pl(&Real::zero());
        let t = Triple::new(r("0.4"), r("0.5"), r("0.6")).unwrap();
        // Left slope 1/2, right slope 3/2.
        assert!((dr(&f, &t) - r("1/3")).abs() < real::tolerance_for(240));
    }

    #[test]
    fn classification_rules() {
        let cfg = CellConfig::default();
        let lv = |t: &[f64]| t.iter().enumerate().map(|(k, &t)| TLevel { n: 2 * k + 5, t, i: 0, j: 0, low_regime: true }).collect();
        assert_eq!(classify_levels(&r("0"), lv(&[0.3, 0.2, 0.01, 0.02, 0.001]), &cfg).unwrap().tag, QTag::Q2);
        assert_eq!(classify_levels(&r("0"), lv(&[0.3, 0.99, 0.97, 0.98, 0.999]), &cfg).unwrap().tag, QTag::Q3);
        let c = classify_levels(&r("0"), lv(&[0.3, 0.5, 0.2, 0.4, 0.9]), &cfg).unwrap();
        assert_eq!(c.tag, QTag::Q11);
        assert!((c.gamma.unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(classify_levels(&r("0"), lv(&[0.5, 0.01, 0.99, 0.01, 0.99]), &cfg).unwrap().tag, QTag::Q4Suspect);
        assert!(classify_levels(&r("0"), lv(&[0.5, 0.5, 0.1, 0.1, 0.1]), &cfg).is_err());
    }

    #[test]
    fn rotation_cell_has_no_break_obstruction() {
        let t = cf_expand_surd(&QuadSurd::golden(), 30).unwrap();
        let f = CircleMap::rotation(&t.alpha);
        let cfg = CellConfig::default();
        let cell = build_primary_cell(&f, &t, &r("0.2"), &r("0.7"), &r("0.1"), 11, &cfg).unwrap();
        assert_eq!(cell.r, 3.0);
        let e = build_primary_cell(&f, &t, &r("0.2"), &r("0.7"), &r("0.001"), 1, &cfg).unwrap_err();
        assert!(matches!(e, DistortionError::DepthTooShallow { property: "c-0", .. }));
    }
}
