//! Piecewise-smooth circle homeomorphisms with break points.
//!
//! A [`PiecewiseMap`] stores a lift on `[0, 1)` as a list of affine or
//! quadratic arcs; `lift(x + 1) = lift(x) + 1` extends it to the line.
//! [`CircleMap`] wraps piecewise maps together with exact inverses and lazy
//! compositions, which are evaluated pointwise and never flattened.

mod rotation;
mod spec;

pub use rotation::{
    compare_rotation_with_target, rotation_number, tune_to_rotation, Family, RotationCompare, ShiftFamily, TuneResult,
};
pub use spec::{BreakSpec, BuiltMap, MapSpec, ShiftSpec};

use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::circle;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("pieces must start at 0 and be strictly increasing in [0, 1)")]
    BadPartition,
    #[error("slope must be positive (piece {0})")]
    NonPositiveSlope(usize),
    #[error("total increase over one period is {0}, expected 1")]
    TotalIncrease(String),
    #[error("derivative is not positive on piece {0}")]
    NotMonotone(usize),
    #[error("rotation number is rational ({p}/{q})")]
    RationalRotation { p: i64, q: u64 },
    #[error("bisection bracket does not straddle the target rotation number")]
    BracketFailure,
    #[error("precision exhausted while tuning (bracket width below resolution)")]
    PrecisionExhausted,
    #[error("continued fraction quotient exceeded the search cap {0}")]
    QuotientCap(u64),
    #[error("invalid map spec: {0}")]
    Spec(String),
}

/// Default magnitude threshold on `|log sigma|` for declaring a break.
pub fn break_threshold() -> f64 {
    2f64.powi(-40)
}

/// Tolerance used when a point is compared with a piece boundary.
fn snap_tol(x: &Real) -> Real {
    Real::pow2_prec(-(x.prec() as i64) + 32, x.prec())
}

/// One arc of a piecewise map: `lift(x) = v0 + u (d0 + curv u)`, `u = x - left`.
#[derive(Debug, Clone)]
pub struct Piece {
    pub left: Real,
    pub v0: Real,
    pub d0: Real,
    pub curv: Real,
    /// Exact slope for affine arcs with rational slope.
    pub exact_slope: Option<BigRational>,
}

impl Piece {
    pub fn affine(left: Real, v0: Real, slope: Real) -> Self {
        let curv = slope.zero_like();
        Piece { left, v0, d0: slope, curv, exact_slope: None }
    }

    pub fn is_affine(&self) -> bool {
        self.curv.is_zero()
    }

    fn eval_u(&self, u: &Real) -> Real {
        if self.curv.is_zero() {
            &self.v0 + u * &self.d0
        } else {
            &self.v0 + u * (&self.d0 + &self.curv * u)
        }
    }

    fn deriv_u(&self, u: &Real) -> Real {
        if self.curv.is_zero() {
            self.d0.clone()
        } else {
            &self.d0 + &self.curv * u * 2
        }
    }

    fn inv_w(&self, w: &Real) -> Real {
        if self.curv.is_zero() {
            w / &self.d0
        } else {
            let disc = &self.d0 * &self.d0 + &self.curv * w * 4;
            w * 2 / (&self.d0 + disc.sqrt())
        }
    }
}

/// Closed-form piecewise lift on `[0, 1)`.
#[derive(Debug, Clone)]
pub struct PiecewiseMap {
    pieces: Vec<Piece>,
}

impl PiecewiseMap {
    /// Validates and wraps pieces. The first piece must start at 0.
    pub fn new(pieces: Vec<Piece>) -> Result<Self, MapError> {
        if pieces.is_empty() || !pieces[0].left.is_zero() {
            return Err(MapError::BadPartition);
        }
        for w in pieces.windows(2) {
            if w[1].left <= w[0].left {
                return Err(MapError::BadPartition);
            }
        }
        if pieces.last().unwrap().left >= Real::one() {
            return Err(MapError::BadPartition);
        }
        let m = PiecewiseMap { pieces };
        for i in 0..m.pieces.len() {
            let len = m.right(i) - &m.pieces[i].left;
            if !m.pieces[i].d0.is_positive() || !m.pieces[i].deriv_u(&len).is_positive() {
                return Err(MapError::NotMonotone(i));
            }
        }
        Ok(m)
    }

    /// Builds a map from arcs covering one period starting anywhere.
    ///
    /// Each segment is `(left, v0, d0, curv, exact)`; segment `i` ends where
    /// segment `i + 1` begins and the last ends at `segs[0].left + 1`.
    pub fn from_segments(segs: Vec<Piece>) -> Result<Self, MapError> {
        if segs.is_empty() {
            return Err(MapError::BadPartition);
        }
        let start = segs[0].left.clone();
        let end = &start + 1;
        let mut out: Vec<Piece> = Vec::new();
        for (i, s) in segs.iter().enumerate() {
            let right = if i + 1 < segs.len() { segs[i + 1].left.clone() } else { end.clone() };
            let k = s.left.floor();
            let l = &s.left - &k;
            let r = &right - &k;
            let mut p = s.clone();
            p.left = l.clone();
            p.v0 = &s.v0 - &k;
            let one = l.one_like();
            if r > one {
                // Split at the integer boundary.
                let u = &one - &l;
                let tail = Piece {
                    left: l.zero_like(),
                    v0: p.eval_u(&u) - 1,
                    d0: p.deriv_u(&u),
                    curv: p.curv.clone(),
                    exact_slope: p.exact_slope.clone(),
                };
                if l < one {
                    out.push(p);
                }
                if (&r - &one).is_positive() {
                    out.push(tail);
                }
            } else if r > l {
                out.push(p);
            }
        }
        out.sort_by(|a, b| a.left.cmp(&b.left));
        // Drop slivers produced by rounding at the seam.
        let tol = snap_tol(&start);
        let mut cleaned: Vec<Piece> = Vec::with_capacity(out.len());
        for p in out {
            if let Some(last) = cleaned.last() {
                if (&p.left - &last.left).abs() <= tol {
                    continue;
                }
            }
            cleaned.push(p);
        }
        if let Some(first) = cleaned.first_mut() {
            if first.left.abs() <= tol {
                first.left = first.left.zero_like();
            }
        }
        PiecewiseMap::new(cleaned)
    }

    /// Piecewise-linear map with breaks `xs` (sorted, in `[0, 1)`) and the
    /// slope to the right of each break; normalised so that `lift(0) = shift`.
    pub fn pl(breaks: &[(BigRational, BigRational)], shift: &Real) -> Result<Self, MapError> {
        if breaks.is_empty() {
            return Err(MapError::BadPartition);
        }
        let zero = BigRational::zero();
        let one = BigRational::one();
        for (i, w) in breaks.iter().enumerate() {
            if w.0 < zero || w.0 >= one || (i > 0 && w.0 <= breaks[i - 1].0) {
                return Err(MapError::BadPartition);
            }
            if !w.1.is_positive() {
                return Err(MapError::NonPositiveSlope(i));
            }
        }
        let mut total = BigRational::zero();
        let mut v = BigRational::zero();
        let mut segs = Vec::new();
        for (i, (x, s)) in breaks.iter().enumerate() {
            let right = if i + 1 < breaks.len() { breaks[i + 1].0.clone() } else { &breaks[0].0 + &one };
            segs.push(Piece {
                left: Real::from_ratio(x),
                v0: Real::from_ratio(&v),
                d0: Real::from_ratio(s),
                curv: Real::zero(),
                exact_slope: Some(s.clone()),
            });
            let inc = s * (&right - x);
            v += &inc;
            total += inc;
        }
        if total != one {
            return Err(MapError::TotalIncrease(crate::real::rational_to_string(&total)));
        }
        let m = PiecewiseMap::from_segments(segs)?;
        let off = shift - m.lift(&Real::zero());
        Ok(m.shifted(&off))
    }

    /// The rotation `x -> x + alpha`.
    pub fn rotation(alpha: &Real) -> Self {
        let mut p = Piece::affine(alpha.zero_like(), alpha.clone(), alpha.one_like());
        p.exact_slope = Some(BigRational::one());
        PiecewiseMap { pieces: vec![p] }
    }

    /// `x -> lift(x) + t`.
    pub fn shifted(&self, t: &Real) -> Self {
        let mut pieces = self.pieces.clone();
        for p in &mut pieces {
            p.v0 = &p.v0 + t;
        }
        PiecewiseMap { pieces }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_affine(&self) -> bool {
        self.pieces.iter().all(Piece::is_affine)
    }

    fn right(&self, i: usize) -> Real {
        if i + 1 < self.pieces.len() {
            self.pieces[i + 1].left.clone()
        } else {
            self.pieces[0].left.one_like()
        }
    }

    fn locate(&self, t: &Real) -> usize {
        self.pieces.partition_point(|p| &p.left <= t).saturating_sub(1)
    }

    pub fn lift(&self, x: &Real) -> Real {
        let k = x.floor();
        let t = x - &k;
        let i = self.locate(&t);
        let p = &self.pieces[i];
        p.eval_u(&(&t - &p.left)) + k
    }

    pub fn lift_inv(&self, y: &Real) -> Real {
        let l0 = &self.pieces[0].v0;
        let k = (y - l0).floor();
        let s = y - &k;
        let i = self.pieces.partition_point(|p| p.v0 <= s).saturating_sub(1);
        let p = &self.pieces[i];
        &p.left + p.inv_w(&(&s - &p.v0)) + k
    }

    /// One-sided derivatives `(Df-, Df+)` at `x`.
    pub fn derivs(&self, x: &Real) -> (Real, Real) {
        let t = x.frac();
        let tol = snap_tol(x);
        let n = self.pieces.len();
        let i = self.locate(&t);
        let p = &self.pieces[i];
        let end_deriv = |j: usize| {
            let q = &self.pieces[j];
            q.deriv_u(&(self.right(j) - &q.left))
        };
        if (&t - &p.left).abs() <= tol {
            let prev = (i + n - 1) % n;
            return (end_deriv(prev), p.d0.clone());
        }
        let r = self.right(i);
        if (&r - &t).abs() <= tol {
            let next = (i + 1) % n;
            return (end_deriv(i), self.pieces[next].d0.clone());
        }
        let d = p.deriv_u(&(&t - &p.left));
        (d.clone(), d)
    }

    /// Exact one-sided slopes, if both neighbouring arcs are affine with
    /// rational slopes.
    pub fn exact_derivs(&self, x: &Real) -> Option<(BigRational, BigRational)> {
        let t = x.frac();
        let tol = snap_tol(x);
        let n = self.pieces.len();
        let i = self.locate(&t);
        let (li, ri) = if (&t - &self.pieces[i].left).abs() <= tol {
            ((i + n - 1) % n, i)
        } else if (self.right(i) - &t).abs() <= tol {
            (i, (i + 1) % n)
        } else {
            (i, i)
        };
        let l = self.pieces[li].exact_slope.clone()?;
        let r = self.pieces[ri].exact_slope.clone()?;
        if !self.pieces[li].is_affine() || !self.pieces[ri].is_affine() {
            return None;
        }
        Some((l, r))
    }

    /// Piece boundaries: the only candidates for breaks.
    pub fn boundaries(&self) -> Vec<Real> {
        self.pieces.iter().map(|p| p.left.clone()).collect()
    }

    /// Closed-form inverse when every arc is affine.
    pub fn inverse_closed(&self) -> Option<PiecewiseMap> {
        if !self.is_affine() {
            return None;
        }
        let segs = self
            .pieces
            .iter()
            .map(|p| Piece {
                left: p.v0.clone(),
                v0: p.left.clone(),
                d0: p.d0.recip(),
                curv: p.d0.zero_like(),
                exact_slope: p.exact_slope.as_ref().map(|s| s.recip()),
            })
            .collect();
        PiecewiseMap::from_segments(segs).ok()
    }

    /// Closed-form `g ∘ f` for two piecewise-linear maps.
    pub fn compose_closed(g: &PiecewiseMap, f: &PiecewiseMap) -> Option<PiecewiseMap> {
        if !g.is_affine() || !f.is_affine() {
            return None;
        }
        let mut pts: Vec<Real> = f.boundaries();
        for b in g.boundaries() {
            pts.push(f.lift_inv(&b).frac());
        }
        pts.sort();
        let tol = snap_tol(&pts[0]);
        pts.dedup_by(|a, b| (&*a - &*b).abs() <= tol);
        let segs: Vec<Piece> = pts
            .iter()
            .map(|x| {
                let fx = f.lift(x);
                let (_, df) = f.derivs(x);
                let (_, dg) = g.derivs(&fx);
                let exact = match (f.exact_derivs(x), g.exact_derivs(&fx)) {
                    (Some((_, a)), Some((_, b))) => Some(a * b),
                    _ => None,
                };
                Piece { left: x.clone(), v0: g.lift(&fx), d0: df * dg, curv: x.zero_like(), exact_slope: exact }
            })
            .collect();
        PiecewiseMap::from_segments(segs).ok()
    }

    /// Total variation of `log Df`: per-arc variation plus break jumps.
    pub fn log_variation(&self) -> f64 {
        let mut v = 0.0;
        for (i, p) in self.pieces.iter().enumerate() {
            let end = p.deriv_u(&(self.right(i) - &p.left));
            v += (end.to_f64() / p.d0.to_f64()).ln().abs();
            let n = self.pieces.len();
            let next = &self.pieces[(i + 1) % n];
            v += (end.to_f64() / next.d0.to_f64()).ln().abs();
        }
        v
    }
}

/// A circle homeomorphism: closed form, exact inverse of a closed form, or a
/// lazy composition (`Chain(v)` applies `v[0]` first).
#[derive(Debug, Clone)]
pub enum CircleMap {
    Piecewise(Arc<PiecewiseMap>),
    Inverse(Arc<PiecewiseMap>),
    Chain(Arc<Vec<CircleMap>>),
}

/// A break point with its jump `sigma = Df-(x) / Df+(x)`.
#[derive(Debug, Clone, Serialize)]
pub struct Break {
    pub x: Real,
    pub left: Real,
    pub right: Real,
    pub jump: Real,
    #[serde(serialize_with = "ser_opt_ratio")]
    pub exact_jump: Option<BigRational>,
}

fn ser_opt_ratio<S: serde::Serializer>(v: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_some(&crate::real::rational_to_string(r)),
        None => s.serialize_none(),
    }
}

impl Break {
    pub fn log_jump(&self) -> f64 {
        match &self.exact_jump {
            Some(r) => crate::real::ln_ratio(r),
            None => self.jump.ln().to_f64(),
        }
    }
}

impl From<PiecewiseMap> for CircleMap {
    fn from(m: PiecewiseMap) -> Self {
        CircleMap::Piecewise(Arc::new(m))
    }
}

impl CircleMap {
    pub fn rotation(alpha: &Real) -> Self {
        PiecewiseMap::rotation(alpha).into()
    }

    pub fn identity() -> Self {
        Self::rotation(&Real::zero())
    }

    pub fn pl(breaks: &[(BigRational, BigRational)], shift: &Real) -> Result<Self, MapError> {
        PiecewiseMap::pl(breaks, shift).map(Into::into)
    }

    pub fn as_piecewise(&self) -> Option<&PiecewiseMap> {
        match self {
            CircleMap::Piecewise(p) => Some(p),
            _ => None,
        }
    }

    pub fn lift(&self, x: &Real) -> Real {
        match self {
            CircleMap::Piecewise(m) => m.lift(x),
            CircleMap::Inverse(m) => m.lift_inv(x),
            CircleMap::Chain(v) => {
                let mut y = x.clone();
                for m in v.iter() {
                    y = m.lift(&y);
                }
                y
            }
        }
    }

    pub fn lift_inv(&self, y: &Real) -> Real {
        match self {
            CircleMap::Piecewise(m) => m.lift_inv(y),
            CircleMap::Inverse(m) => m.lift(y),
            CircleMap::Chain(v) => {
                let mut x = y.clone();
                for m in v.iter().rev() {
                    x = m.lift_inv(&x);
                }
                x
            }
        }
    }

    /// Image of a circle point, reduced to `[0, 1)`.
    pub fn apply(&self, x: &Real) -> Real {
        self.lift(x).frac()
    }

    pub fn apply_inv(&self, y: &Real) -> Real {
        self.lift_inv(y).frac()
    }

    /// `f^k(x)` on the circle; negative `k` iterates the inverse.
    pub fn iterate(&self, x: &Real, k: i64) -> Real {
        let mut y = x.clone();
        if k >= 0 {
            for _ in 0..k {
                y = self.apply(&y);
            }
        } else {
            for _ in 0..(-k) {
                y = self.apply_inv(&y);
            }
        }
        y
    }

    /// Lift iterate `F^k(x)` without reduction.
    pub fn lift_iter(&self, x: &Real, k: u64) -> Real {
        let mut y = x.clone();
        for _ in 0..k {
            y = self.lift(&y);
        }
        y
    }

    /// `x, f(x), ..., f^{n-1}(x)` on the circle.
    pub fn orbit(&self, x: &Real, n: usize) -> Vec<Real> {
        let mut out = Vec::with_capacity(n);
        let mut y = x.frac();
        for _ in 0..n {
            out.push(y.clone());
            y = self.apply(&y);
        }
        out
    }

    /// `x, f^{-1}(x), ..., f^{-(n-1)}(x)`.
    pub fn backward_orbit(&self, x: &Real, n: usize) -> Vec<Real> {
        let mut out = Vec::with_capacity(n);
        let mut y = x.frac();
        for _ in 0..n {
            out.push(y.clone());
            y = self.apply_inv(&y);
        }
        out
    }

    /// One-sided derivatives `(Df-(x), Df+(x))`.
    pub fn derivs(&self, x: &Real) -> (Real, Real) {
        match self {
            CircleMap::Piecewise(m) => m.derivs(x),
            CircleMap::Inverse(m) => {
                let y = m.lift_inv(x);
                let (l, r) = m.derivs(&y);
                (l.recip(), r.recip())
            }
            CircleMap::Chain(v) => {
                let mut y = x.clone();
                let mut l = x.one_like();
                let mut r = x.one_like();
                for m in v.iter() {
                    let (a, b) = m.derivs(&y);
                    l = l * a;
                    r = r * b;
                    y = m.lift(&y);
                }
                (l, r)
            }
        }
    }

    /// Right derivative.
    pub fn deriv(&self, x: &Real) -> Real {
        self.derivs(x).1
    }

    pub fn exact_derivs(&self, x: &Real) -> Option<(BigRational, BigRational)> {
        match self {
            CircleMap::Piecewise(m) => m.exact_derivs(x),
            CircleMap::Inverse(m) => {
                let (l, r) = m.exact_derivs(&m.lift_inv(x))?;
                Some((l.recip(), r.recip()))
            }
            CircleMap::Chain(v) => {
                let mut y = x.clone();
                let mut l = BigRational::one();
                let mut r = BigRational::one();
                for m in v.iter() {
                    let (a, b) = m.exact_derivs(&y)?;
                    l *= a;
                    r *= b;
                    y = m.lift(&y);
                }
                Some((l, r))
            }
        }
    }

    pub fn inverse(&self) -> CircleMap {
        match self {
            CircleMap::Piecewise(m) => match m.inverse_closed() {
                Some(inv) => inv.into(),
                None => CircleMap::Inverse(m.clone()),
            },
            CircleMap::Inverse(m) => CircleMap::Piecewise(m.clone()),
            CircleMap::Chain(v) => CircleMap::Chain(Arc::new(v.iter().rev().map(|m| m.inverse()).collect())),
        }
    }

    /// `g ∘ self`, closed form when both are piecewise linear.
    pub fn then(&self, g: &CircleMap) -> CircleMap {
        compose(g, self)
    }

    /// Candidate break locations: every point where some stage of the map
    /// meets a boundary of its arcs.
    pub fn break_candidates(&self) -> Vec<Real> {
        let mut out = match self {
            CircleMap::Piecewise(m) => m.boundaries(),
            CircleMap::Inverse(m) => m.boundaries().iter().map(|b| m.lift(b).frac()).collect(),
            CircleMap::Chain(v) => {
                let mut out = Vec::new();
                for (i, m) in v.iter().enumerate() {
                    for b in m.break_candidates() {
                        let mut x = b;
                        for prev in v[..i].iter().rev() {
                            x = prev.lift_inv(&x);
                        }
                        out.push(x.frac());
                    }
                }
                out
            }
        };
        out.sort();
        if let Some(first) = out.first() {
            let tol = snap_tol(first);
            out.dedup_by(|a, b| (&*a - &*b).abs() <= tol);
            if out.len() > 1 && (out[0].one_like() - out.last().unwrap() + &out[0]) <= tol {
                out.pop();
            }
        }
        out
    }

    /// Break points with `|log sigma| > 2^-40`, sorted by location.
    pub fn breaks(&self) -> Vec<Break> {
        self.breaks_with_threshold(break_threshold())
    }

    pub fn breaks_with_threshold(&self, threshold: f64) -> Vec<Break> {
        self.break_candidates()
            .into_iter()
            .filter_map(|x| {
                let (l, r) = self.derivs(&x);
                let jump = &l / &r;
                let exact_jump = self.exact_derivs(&x).map(|(a, b)| a / b);
                let lj = match &exact_jump {
                    Some(e) => {
                        if e.is_one() {
                            0.0
                        } else {
                            crate::real::ln_ratio(e)
                        }
                    }
                    None => jump.ln().to_f64(),
                };
                (lj.abs() > threshold).then_some(Break { x, left: l, right: r, jump, exact_jump })
            })
            .collect()
    }

    /// Upper bound for the total variation `V` of `log Df`; exact for
    /// closed forms and their inverses.
    pub fn log_variation(&self) -> f64 {
        match self {
            CircleMap::Piecewise(m) | CircleMap::Inverse(m) => m.log_variation(),
            CircleMap::Chain(v) => v.iter().map(|m| m.log_variation()).sum(),
        }
    }

    /// `sum_{j<k} log Df(f^j x)` using right derivatives.
    pub fn log_deriv_iter(&self, x: &Real, k: usize) -> f64 {
        let mut y = x.frac();
        let mut s = 0.0;
        for _ in 0..k {
            s += self.deriv(&y).to_f64().ln();
            y = self.apply(&y);
        }
        s
    }

    /// Image length of the arc `[a, b]` under `f^k`, via lifts.
    pub fn image_len(&self, a: &Real, b: &Real, k: u64) -> Real {
        let la = a.clone();
        let lb = circle::lift_above(b, a);
        self.lift_iter(&lb, k) - self.lift_iter(&la, k)
    }
}

/// `g ∘ f`: closed form when both are piecewise linear, lazy otherwise.
pub fn compose(g: &CircleMap, f: &CircleMap) -> CircleMap {
    if let (CircleMap::Piecewise(gp), CircleMap::Piecewise(fp)) = (g, f) {
        if let Some(m) = PiecewiseMap::compose_closed(gp, fp) {
            return m.into();
        }
    }
    let mut v: Vec<CircleMap> = Vec::new();
    for m in [f, g] {
        match m {
            CircleMap::Chain(inner) => v.extend(inner.iter().cloned()),
            other => v.push(other.clone()),
        }
    }
    CircleMap::Chain(Arc::new(v))
}

/// Lazy `k ∘ f ∘ k^{-1}`.
pub fn conjugate(k: &CircleMap, f: &CircleMap) -> CircleMap {
    CircleMap::Chain(Arc::new(vec![k.inverse(), f.clone(), k.clone()]))
}

pub fn invert(f: &CircleMap) -> CircleMap {
    f.inverse()
}

/// `f^k(x)` on the circle.
pub fn iterate(f: &CircleMap, k: i64, x: &Real) -> Real {
    f.iterate(x, k)
}

pub fn break_points(f: &CircleMap) -> Vec<Break> {
    f.breaks()
}

/// Parses a rational like `"3/2"`, erroring as a spec problem.
pub(crate) fn ratio(s: &str) -> Result<BigRational, MapError> {
    crate::real::parse_rational(s).ok_or_else(|| MapError::Spec(format!("not a rational: {s}")))
}

/// The two-piece map with slopes `1/2` on `[0, 1/2)` and `3/2` on `[1/2, 1)`,
/// shifted by `t`.
pub fn two_piece_pl(t: &Real) -> CircleMap {
    CircleMap::pl(&[(ratio("0").unwrap(), ratio("1/2").unwrap()), (ratio("1/2").unwrap(), ratio("3/2").unwrap())], t)
        .expect("valid two-piece map")
}
