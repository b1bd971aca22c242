//! Certified rotation numbers and parameter tuning.
//!
//! The rotation number of a lift `F` is compared with a rational `P/Q`
//! through the sign of `F^Q(x) - x - P`: positive at any point forces
//! `rho >= P/Q`, negative forces `rho <= P/Q`, and a sign change means a
//! periodic orbit. Quotients are then found by walking the intermediate
//! fractions between consecutive convergents.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::numberth::ConvergentTable;
use crate::real::Real;

use super::{CircleMap, MapError, PiecewiseMap};

/// Search cap for a single quotient while certifying.
const QUOTIENT_CAP: u64 = 1 << 20;

fn samples(p: usize) -> [Real; 2] {
    [Real::from_i64_prec(0, p), Real::parse("0.4142135623730950488").unwrap()]
}

/// Sign of `rho(F) - P/Q`, or `None` if `rho(F) = P/Q` is detected.
fn cmp_with_fraction(f: &CircleMap, p: i64, q: u64) -> Option<Ordering> {
    let prec = crate::real::precision();
    let tol = Real::pow2_prec(-(prec as i64) + 32, prec);
    let mut seen: Option<Ordering> = None;
    for x in samples(prec) {
        let v = f.lift_iter(&x, q) - &x - Real::from_i64(p);
        let o = if v.abs() <= tol {
            return None;
        } else if v.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        };
        match seen {
            None => seen = Some(o),
            Some(s) if s != o => return None,
            _ => {}
        }
    }
    seen
}

/// Certified continued-fraction prefix of the rotation number of `f`,
/// reduced to `(0, 1)`. `alpha` in the result is the midpoint of the
/// certified bracket.
pub fn rotation_number(f: &CircleMap, depth: usize) -> Result<ConvergentTable, MapError> {
    let x0 = Real::zero();
    let mut m = (f.lift(&x0) - &x0).floor_i64();
    // Pin the integer part: m < rho < m + 1.
    loop {
        match cmp_with_fraction(f, m, 1) {
            None => return Err(MapError::RationalRotation { p: m, q: 1 }),
            Some(Ordering::Less) => m -= 1,
            Some(_) => break,
        }
    }
    loop {
        match cmp_with_fraction(f, m + 1, 1) {
            None => return Err(MapError::RationalRotation { p: m + 1, q: 1 }),
            Some(Ordering::Greater) => m += 1,
            Some(_) => break,
        }
    }
    // Convergents of the fractional part, with p_{-1}/q_{-1} = 1/0.
    let (mut pm2, mut qm2) = (1i64, 0u64);
    let (mut pm1, mut qm1) = (0i64, 1u64);
    let mut quotients = Vec::with_capacity(depth);
    for n in 1..=depth {
        // F_a lies on the p_{n-2} side of rho while a <= a_n.
        let on_old_side = |a: u64| -> Result<bool, MapError> {
            let pp = pm2 + a as i64 * pm1;
            let qq = qm2 + a * qm1;
            match cmp_with_fraction(f, pp + m * qq as i64, qq) {
                None => Err(MapError::RationalRotation { p: pp, q: qq }),
                Some(o) => Ok(if n % 2 == 1 { o == Ordering::Less } else { o == Ordering::Greater }),
            }
        };
        if !on_old_side(1)? {
            return Err(MapError::RationalRotation { p: pm2 + pm1, q: qm2 + qm1 });
        }
        let mut lo = 1u64;
        let mut hi = 2u64;
        while on_old_side(hi)? {
            lo = hi;
            hi *= 2;
            if hi > QUOTIENT_CAP {
                return Err(MapError::QuotientCap(QUOTIENT_CAP));
            }
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if on_old_side(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        quotients.push(lo);
        let p = lo as i64 * pm1 + pm2;
        let q = lo * qm1 + qm2;
        (pm2, qm2, pm1, qm1) = (pm1, qm1, p, q);
    }
    let a = Real::from_i64(pm1) / Real::from_i64(qm1 as i64);
    let b = Real::from_i64(pm1 + pm2) / Real::from_i64((qm1 + qm2) as i64);
    let alpha = (a + b) / 2;
    ConvergentTable::from_quotients(alpha, quotients).map_err(|_| MapError::QuotientCap(u64::MAX))
}

/// Outcome of comparing `rho(f)` with a target expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationCompare {
    Less,
    Greater,
    /// The first `depth` quotients agree.
    Matches,
}

/// Compares `rho(f)` (taken in `[0, 1]`) with the irrational whose
/// quotients are listed in `target`, up to `depth` levels.
pub fn compare_rotation_with_target(f: &CircleMap, target: &ConvergentTable, depth: usize) -> RotationCompare {
    let (mut pm2, mut qm2) = (1i64, 0u64);
    let (mut pm1, mut qm1) = (0i64, 1u64);
    for n in 1..=depth {
        let b = target.a(n);
        // side = +1 when p_n/q_n lies above alpha (n odd).
        let above = n % 2 == 1;
        let fb = (pm2 + b as i64 * pm1, qm2 + b * qm1);
        let fb1 = (pm2 + (b + 1) as i64 * pm1, qm2 + (b + 1) * qm1);
        let beyond = |o: Ordering, upper: bool| if upper { o != Ordering::Less } else { o != Ordering::Greater };
        let toward = |upper: bool| if upper { RotationCompare::Greater } else { RotationCompare::Less };
        match cmp_with_fraction(f, fb.0, fb.1) {
            None => return toward(above),
            Some(o) if beyond(o, above) => return toward(above),
            _ => {}
        }
        match cmp_with_fraction(f, fb1.0, fb1.1) {
            None => return toward(!above),
            Some(o) if beyond(o, !above) => return toward(!above),
            _ => {}
        }
        (pm2, qm2, pm1, qm1) = (pm1, qm1, fb.0, fb.1);
    }
    RotationCompare::Matches
}

/// A one-parameter family of circle maps, monotone in the parameter.
pub trait Family {
    fn at(&self, t: &Real) -> CircleMap;
}

/// `f_t = f + t` on the lift.
#[derive(Debug, Clone)]
pub struct ShiftFamily {
    pub base: Arc<PiecewiseMap>,
}

impl ShiftFamily {
    pub fn new(base: PiecewiseMap) -> Self {
        ShiftFamily { base: Arc::new(base) }
    }
}

impl Family for ShiftFamily {
    fn at(&self, t: &Real) -> CircleMap {
        self.base.shifted(t).into()
    }
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub t: Real,
    pub map: CircleMap,
    pub iterations: usize,
}

/// Bisects the family parameter until the first `depth` quotients of the
/// rotation number agree with `target`.
pub fn tune_to_rotation(
    family: &dyn Family,
    target: &ConvergentTable,
    depth: usize,
    bracket: (Real, Real),
) -> Result<TuneResult, MapError> {
    if target.depth() < depth {
        return Err(MapError::RationalRotation { p: target.p[target.depth()] as i64, q: target.q[target.depth()] });
    }
    let (mut lo, mut hi) = bracket;
    if compare_rotation_with_target(&family.at(&lo), target, depth) != RotationCompare::Less
        || compare_rotation_with_target(&family.at(&hi), target, depth) != RotationCompare::Greater
    {
        return Err(MapError::BracketFailure);
    }
    let prec = crate::real::precision();
    let resolution = Real::pow2_prec(-(prec as i64) + 16, prec);
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mid = (&lo + &hi) / 2;
        let f = family.at(&mid);
        match compare_rotation_with_target(&f, target, depth) {
            RotationCompare::Matches => return Ok(TuneResult { t: mid, map: f, iterations }),
            RotationCompare::Less => lo = mid,
            RotationCompare::Greater => hi = mid,
        }
        if &hi - &lo < resolution {
            return Err(MapError::PrecisionExhausted);
        }
    }
}
