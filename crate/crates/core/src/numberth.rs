//! Continued fractions and convergent tables for rotation numbers.
//!
//! Quotient indices are 1-based (`a_1, a_2, ...`); denominators start at
//! `q_0 = 1, q_1 = a_1`, numerators at `p_0 = 0, p_1 = 1`. Quadratic surds
//! are expanded exactly with integer arithmetic, decimal strings are
//! expanded exactly as rationals, and arbitrary [`Real`] values go through
//! the Gauss map with a residual guard.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::real::{parse_rational, Real};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumberError {
    #[error("rotation number is rational: expansion terminated after {terms} quotient(s)")]
    RationalDetected { terms: usize },
    #[error("precision exhausted at depth {reached}: residual below 2^(-prec/2)")]
    DepthUnreachable { reached: usize },
    #[error("denominator overflow at depth {reached}")]
    Overflow { reached: usize },
    #[error("cannot parse rotation number `{0}`")]
    Parse(String),
    #[error("rotation number must lie in (0, 1), got {0}")]
    OutOfRange(String),
}

/// The quadratic irrational `(-b + sqrt(d)) / c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadSurd {
    pub d: BigInt,
    pub b: BigInt,
    pub c: BigInt,
}

impl QuadSurd {
    pub fn new(d: i64, b: i64, c: i64) -> Self {
        QuadSurd { d: d.into(), b: b.into(), c: c.into() }
    }

    /// The golden mean `(sqrt 5 - 1) / 2 = [1, 1, 1, ...]`.
    pub fn golden() -> Self {
        QuadSurd::new(5, 1, 2)
    }

    /// Value of the purely periodic expansion `[a_1, ..., a_k, a_1, ...]`.
    pub fn periodic(block: &[u64]) -> Self {
        assert!(!block.is_empty() && block.iter().all(|&a| a > 0), "periodic block must be positive");
        let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
        let (mut p1, mut q1) = (BigInt::one(), BigInt::from(block[0]));
        for &a in &block[1..] {
            let a = BigInt::from(a);
            let p2 = &a * &p1 + &p0;
            let q2 = &a * &q1 + &q0;
            (p0, q0, p1, q1) = (p1, q1, p2, q2);
        }
        // alpha solves q_{k-1} x^2 + (q_k - p_{k-1}) x - p_k = 0.
        let b = &q1 - &p0;
        let d = &b * &b + BigInt::from(4) * &q0 * &p1;
        let c = BigInt::from(2) * &q0;
        QuadSurd { d, b, c }
    }

    pub fn to_real(&self) -> Real {
        let d = Real::from_bigint(&self.d);
        (d.sqrt() - Real::from_bigint(&self.b)) / Real::from_bigint(&self.c)
    }

    pub fn is_rational(&self) -> bool {
        let s = self.d.sqrt();
        &s * &s == self.d
    }

    /// Sign of `x + y * sqrt(d)` for rationals `x`, `y`, decided exactly.
    fn sign_of(x: &BigRational, y: &BigRational, d: &BigInt) -> i32 {
        let sx = sgn(x);
        let sy = sgn(y);
        if sy == 0 || d.is_zero() {
            return sx;
        }
        if sx == 0 || sx == sy {
            return sy;
        }
        let lhs = x * x;
        let rhs = y * y * BigRational::from_integer(d.clone());
        match lhs.cmp(&rhs) {
            std::cmp::Ordering::Greater => sx,
            std::cmp::Ordering::Less => sy,
            std::cmp::Ordering::Equal => 0,
        }
    }

    /// Exact sign of `self - r`.
    pub fn cmp_rational(&self, r: &BigRational) -> i32 {
        let c = BigRational::from_integer(self.c.clone());
        let x = -BigRational::from_integer(self.b.clone()) / &c - r;
        let y = BigRational::one() / c;
        Self::sign_of(&x, &y, &self.d)
    }

    /// Exact continued fraction quotients `a_1..a_depth` of the fractional part.
    pub fn quotients(&self, depth: usize) -> Result<Vec<u64>, NumberError> {
        if self.is_rational() {
            return Err(NumberError::RationalDetected { terms: 0 });
        }
        let abs_c = self.c.abs();
        let mut p = -&self.b * &abs_c;
        let dd = &self.d * &self.c * &self.c;
        let mut q = &self.c * &abs_c;
        let s = dd.sqrt();
        let floor_of = |p: &BigInt, q: &BigInt| -> BigInt {
            if q.is_positive() {
                (p + &s).div_floor(q)
            } else {
                (p + &s + BigInt::one()).div_floor(q)
            }
        };
        let a0 = floor_of(&p, &q);
        p -= &a0 * &q;
        // Now (p + sqrt(dd)) / q is the fractional part; invert it.
        let mut out = Vec::with_capacity(depth);
        p = -p;
        q = (&dd - &p * &p) / &q;
        for n in 0..depth {
            let a = floor_of(&p, &q);
            out.push(a.to_u64().ok_or(NumberError::Overflow { reached: n })?);
            p = &a * &q - &p;
            q = (&dd - &p * &p) / &q;
        }
        Ok(out)
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "surd({},{},{})", self.d, self.b, self.c)
    }
}

fn sgn(x: &BigRational) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

/// A rotation number as supplied by a user or config file.
#[derive(Debug, Clone)]
pub enum RotationSpec {
    /// Exact quadratic surd (also produced by periodic quotient lists).
    Surd(QuadSurd),
    /// Exact rational, from a decimal string such as `0.6180339887`.
    Rational(BigRational),
    /// A floating value; expanded through the Gauss map.
    Real(Real),
}

impl RotationSpec {
    /// Accepts `surd(d,b,c)`, `[a1,a2,...]` (read as a periodic block) or a
    /// decimal / fraction string.
    pub fn parse(s: &str) -> Result<Self, NumberError> {
        let t = s.trim();
        let err = || NumberError::Parse(s.to_string());
        if let Some(inner) = t.strip_prefix("surd(").and_then(|r| r.strip_suffix(')')) {
            let parts: Vec<BigInt> = inner
                .split(',')
                .map(|x| x.trim().parse::<BigInt>())
                .collect::<Result<_, _>>()
                .map_err(|_| err())?;
            if parts.len() != 3 || parts[2].is_zero() {
                return Err(err());
            }
            return Ok(RotationSpec::Surd(QuadSurd { d: parts[0].clone(), b: parts[1].clone(), c: parts[2].clone() }));
        }
        if let Some(inner) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let block: Vec<u64> = inner
                .split(',')
                .map(|x| x.trim().parse::<u64>())
                .collect::<Result<_, _>>()
                .map_err(|_| err())?;
            if block.is_empty() || block.contains(&0) {
                return Err(err());
            }
            return Ok(RotationSpec::Surd(QuadSurd::periodic(&block)));
        }
        parse_rational(t).map(RotationSpec::Rational).ok_or_else(err)
    }

    pub fn golden() -> Self {
        RotationSpec::Surd(QuadSurd::golden())
    }

    pub fn to_real(&self) -> Real {
        match self {
            RotationSpec::Surd(s) => s.to_real(),
            RotationSpec::Rational(r) => Real::from_ratio(r),
            RotationSpec::Real(r) => r.clone(),
        }
    }

    pub fn expand(&self, depth: usize) -> Result<ConvergentTable, NumberError> {
        match self {
            RotationSpec::Surd(s) => cf_expand_surd(s, depth),
            RotationSpec::Rational(r) => cf_expand_rational(r, depth),
            RotationSpec::Real(r) => cf_expand_real(r, depth),
        }
    }
}

impl fmt::Display for RotationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RotationSpec::Surd(s) => write!(f, "{s}"),
            RotationSpec::Rational(r) => write!(f, "{}", crate::real::rational_to_string(r)),
            RotationSpec::Real(r) => write!(f, "{}", r.to_decimal()),
        }
    }
}

/// Quotients and convergents of an irrational `alpha` in `(0, 1)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergentTable {
    pub alpha: Real,
    /// `a_1, ..., a_N`.
    pub quotients: Vec<u64>,
    /// `p_0, ..., p_N`.
    pub p: Vec<u64>,
    /// `q_0, ..., q_N`.
    pub q: Vec<u64>,
}

impl ConvergentTable {
    /// Builds the convergents of a quotient prefix. `alpha` is stored as given.
    pub fn from_quotients(alpha: Real, quotients: Vec<u64>) -> Result<Self, NumberError> {
        let mut p = vec![0u64];
        let mut q = vec![1u64];
        let (mut pm, mut qm) = (1u64, 0u64);
        for (n, &a) in quotients.iter().enumerate() {
            let ovf = || NumberError::Overflow { reached: n };
            let pn = a.checked_mul(p[n]).and_then(|v| v.checked_add(pm)).ok_or_else(ovf)?;
            let qn = a.checked_mul(q[n]).and_then(|v| v.checked_add(qm)).ok_or_else(ovf)?;
            pm = p[n];
            qm = q[n];
            p.push(pn);
            q.push(qn);
        }
        Ok(ConvergentTable { alpha, quotients, p, q })
    }

    pub fn depth(&self) -> usize {
        self.quotients.len()
    }

    /// `a_n` for `1 <= n <= depth`.
    pub fn a(&self, n: usize) -> u64 {
        self.quotients[n - 1]
    }

    pub fn q(&self, n: usize) -> u64 {
        self.q[n]
    }

    pub fn p(&self, n: usize) -> u64 {
        self.p[n]
    }

    /// `q_n` as `usize`, for orbit lengths.
    pub fn qn(&self, n: usize) -> usize {
        self.q[n] as usize
    }

    /// Truncated copy keeping `a_1..a_depth`.
    pub fn truncated(&self, depth: usize) -> Self {
        let d = depth.min(self.depth());
        ConvergentTable {
            alpha: self.alpha.clone(),
            quotients: self.quotients[..d].to_vec(),
            p: self.p[..=d].to_vec(),
            q: self.q[..=d].to_vec(),
        }
    }

    /// `p_n / q_n` exactly.
    pub fn convergent(&self, n: usize) -> BigRational {
        BigRational::new(self.p[n].into(), self.q[n].into())
    }

    /// The best-approximation inequality `|alpha - p_n/q_n| < 1/(q_n q_{n+1})`
    /// for every `n < depth`, evaluated in working precision.
    pub fn inequality_holds(&self) -> bool {
        (0..self.depth()).all(|n| {
            let pq = Real::from_ratio(&self.convergent(n));
            let lhs = (&self.alpha - pq).abs();
            let rhs = Real::from_i64(1) / Real::from_i64(self.q[n] as i64) / Real::from_i64(self.q[n + 1] as i64);
            lhs < rhs
        })
    }
}

/// Exact check of `|alpha - p_n/q_n| < 1/(q_n q_{n+1})` for a surd.
pub fn inequality_holds_exact(alpha: &QuadSurd, table: &ConvergentTable) -> bool {
    (0..table.depth()).all(|n| {
        let pq = table.convergent(n);
        let bound = BigRational::new(BigInt::one(), BigInt::from(table.q[n]) * BigInt::from(table.q[n + 1]));
        alpha.cmp_rational(&(&pq + &bound)) < 0 && alpha.cmp_rational(&(&pq - &bound)) > 0
    })
}

/// Exact expansion of a quadratic surd.
pub fn cf_expand_surd(alpha: &QuadSurd, depth: usize) -> Result<ConvergentTable, NumberError> {
    let v = alpha.to_real();
    if !(v.is_positive() && v < Real::one()) {
        return Err(NumberError::OutOfRange(alpha.to_string()));
    }
    let quotients = alpha.quotients(depth)?;
    ConvergentTable::from_quotients(v, quotients)
}

/// Exact expansion of a rational; fails once the Euclidean algorithm ends.
pub fn cf_expand_rational(alpha: &BigRational, depth: usize) -> Result<ConvergentTable, NumberError> {
    if !(alpha.is_positive() && alpha < &BigRational::one()) {
        return Err(NumberError::OutOfRange(crate::real::rational_to_string(alpha)));
    }
    let quotients = rational_quotients(alpha);
    if quotients.len() < depth {
        return Err(NumberError::RationalDetected { terms: quotients.len() });
    }
    ConvergentTable::from_quotients(Real::from_ratio(alpha), quotients[..depth].to_vec())
}

/// All quotients of a rational in `(0, 1)`.
pub fn rational_quotients(alpha: &BigRational) -> Vec<u64> {
    let mut n = alpha.numer().clone();
    let mut d = alpha.denom().clone();
    let mut out = Vec::new();
    // alpha = n/d < 1; first quotient is floor(d/n).
    while !n.is_zero() {
        let (a, r) = d.div_rem(&n);
        out.push(a.to_u64().unwrap_or(u64::MAX));
        d = n;
        n = r;
    }
    out
}

/// Gauss-map expansion at the precision carried by `alpha`.
///
/// Stops with [`NumberError::DepthUnreachable`] as soon as
/// `|alpha - p_n/q_n|` drops below `2^(-prec/2)` before the requested depth,
/// and with [`NumberError::RationalDetected`] if the remainder vanishes.
pub fn cf_expand_real(alpha: &Real, depth: usize) -> Result<ConvergentTable, NumberError> {
    let prec = alpha.prec();
    let one = alpha.one_like();
    if !(alpha.is_positive() && alpha < &one) {
        return Err(NumberError::OutOfRange(alpha.to_decimal()));
    }
    let guard = Real::pow2_prec(-(prec as i64) / 2, prec);
    let mut x = alpha.clone();
    let mut quotients = Vec::with_capacity(depth);
    for n in 0..depth {
        if x.is_zero() {
            return Err(NumberError::RationalDetected { terms: n });
        }
        let y = one.clone() / &x;
        let a = y.floor();
        x = y - &a;
        let a = a.to_f64();
        if !(1.0..1.8e19).contains(&a) {
            return Err(NumberError::DepthUnreachable { reached: n });
        }
        quotients.push(a as u64);
        let t = ConvergentTable::from_quotients(alpha.clone(), quotients.clone())
            .map_err(|_| NumberError::DepthUnreachable { reached: n })?;
        let pn = Real::from_i64_prec(t.p[n + 1] as i64, prec);
        let qn = Real::from_i64_prec(t.q[n + 1] as i64, prec);
        let resid = (alpha - pn / qn).abs();
        if n + 1 < depth && resid < guard {
            if resid.is_zero() && x.is_zero() {
                return Err(NumberError::RationalDetected { terms: n + 1 });
            }
            return Err(NumberError::DepthUnreachable { reached: n + 1 });
        }
    }
    ConvergentTable::from_quotients(alpha.clone(), quotients)
}

/// Expansion of any supported spec; convenience wrapper.
pub fn cf_expand(alpha: &RotationSpec, depth: usize) -> Result<ConvergentTable, NumberError> {
    alpha.expand(depth)
}

/// `||q alpha||`, the distance from `q alpha` to the nearest integer.
pub fn circle_distance(alpha: &Real, q: u64) -> Real {
    let x = (alpha * Real::from_i64_prec(q as i64, alpha.prec())).frac();
    let y = x.one_like() - &x;
    x.min(y)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundedTypeReport {
    /// True when every computed quotient is at most the bound.
    pub bounded: bool,
    pub bound: u64,
    pub max_quotient: u64,
    /// Length of the prefix that was inspected.
    pub prefix_len: usize,
}

/// Bounded-type test over the computed prefix only.
pub fn is_bounded_type(table: &ConvergentTable, bound: u64) -> BoundedTypeReport {
    let max_quotient = table.quotients.iter().copied().max().unwrap_or(0);
    BoundedTypeReport { bounded: max_quotient <= bound, bound, max_quotient, prefix_len: table.depth() }
}
