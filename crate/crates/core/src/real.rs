//! Arbitrary-precision reals.
//!
//! [`Real`] wraps an `astro_float::BigFloat`. Binary operations run at the
//! larger of the two operand precisions, so values built at a reduced
//! precision stay reduced as long as they only meet each other. Fresh values
//! are created at the process-wide default precision (see [`set_precision`]).

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::{BigInt, Sign as BigSign};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Lowest precision accepted for experiment runs.
pub const MIN_PRECISION: usize = 128;
/// Default working precision in bits.
pub const DEFAULT_PRECISION: usize = 256;

const RM: RoundingMode = RoundingMode::ToEven;

static PRECISION: AtomicUsize = AtomicUsize::new(DEFAULT_PRECISION);

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constant cache"));
}

/// Sets the default precision (bits) for newly created values.
pub fn set_precision(bits: usize) {
    PRECISION.store(bits.max(64), AtomicOrdering::SeqCst);
}

/// Current default precision in bits.
pub fn precision() -> usize {
    PRECISION.load(AtomicOrdering::SeqCst)
}

/// Comparison tolerance `2^(-prec+8)` for a given precision.
pub fn tolerance_for(bits: usize) -> Real {
    Real::pow2_prec(-(bits as i64) + 8, bits)
}

#[derive(Clone)]
pub struct Real(BigFloat);

impl Real {
    fn wrap(x: BigFloat) -> Self {
        debug_assert!(!x.is_nan(), "NaN produced in Real arithmetic");
        Real(x)
    }

    /// Precision of this value in bits.
    pub fn prec(&self) -> usize {
        // Zero carries no mantissa in astro-float; fall back to the default.
        match self.0.precision() {
            Some(p) if p > 0 => p,
            _ => precision(),
        }
    }

    fn op_prec(&self, other: &Real) -> usize {
        self.prec().max(other.prec())
    }

    pub fn zero() -> Self {
        Self::from_i64(0)
    }

    pub fn one() -> Self {
        Self::from_i64(1)
    }

    pub fn from_i64(v: i64) -> Self {
        Self::from_i64_prec(v, precision())
    }

    pub fn from_i64_prec(v: i64, p: usize) -> Self {
        Real(BigFloat::from_i64(v, p))
    }

    pub fn from_f64(v: f64) -> Self {
        Self::from_f64_prec(v, precision())
    }

    pub fn from_f64_prec(v: f64, p: usize) -> Self {
        Real(BigFloat::from_f64(v, p))
    }

    /// `2^e` at precision `p`.
    pub fn pow2_prec(e: i64, p: usize) -> Self {
        let two = BigFloat::from_u64(2, p);
        let v = if e >= 0 {
            two.powi(e as usize, p, RM)
        } else {
            two.powi((-e) as usize, p, RM).reciprocal(p, RM)
        };
        Real(v)
    }

    pub fn from_bigint(v: &BigInt) -> Self {
        Self::from_bigint_prec(v, precision())
    }

    pub fn from_bigint_prec(v: &BigInt, p: usize) -> Self {
        let (sign, digits) = v.to_u64_digits();
        let base = BigFloat::from_u64(2, p).powi(64, p, RM);
        let mut acc = BigFloat::from_u64(0, p);
        for d in digits.iter().rev() {
            acc = acc.mul(&base, p, RM).add(&BigFloat::from_u64(*d, p), p, RM);
        }
        if sign == BigSign::Minus {
            acc = acc.neg();
        }
        Real(acc)
    }

    pub fn from_ratio(v: &BigRational) -> Self {
        Self::from_ratio_prec(v, precision())
    }

    pub fn from_ratio_prec(v: &BigRational, p: usize) -> Self {
        // Extra guard bits keep the quotient correctly rounded in practice.
        let g = p + 64;
        let n = Self::from_bigint_prec(v.numer(), g);
        let d = Self::from_bigint_prec(v.denom(), g);
        Real(n.0.div(&d.0, p, RM))
    }

    /// Parses a decimal string, an integer, or a fraction `a/b`, exactly
    /// through a rational, then rounds once.
    pub fn parse(s: &str) -> Option<Self> {
        parse_rational(s).map(|r| Self::from_ratio(&r))
    }

    pub fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        let Some((m, _n, s, e, _)) = self.0.as_raw_parts() else {
            return f64::NAN;
        };
        let top = m[m.len() - 1] as f64;
        let next = if m.len() > 1 { m[m.len() - 2] as f64 / 18446744073709551616.0 } else { 0.0 };
        let mag = (top + next) * 2f64.powi(e - 64);
        if s == Sign::Neg {
            -mag
        } else {
            mag
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative() && !self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive() && !self.0.is_zero()
    }

    pub fn abs(&self) -> Self {
        Real(self.0.abs())
    }

    pub fn floor(&self) -> Self {
        Real(self.0.floor())
    }

    /// `self - floor(self)`, in `[0, 1)`.
    pub fn frac(&self) -> Self {
        let f = self.sub(&self.floor());
        if f >= Real::one_like(self) {
            Real::zero_like(self)
        } else {
            f
        }
    }

    pub fn floor_i64(&self) -> i64 {
        self.floor().to_f64() as i64
    }

    pub fn sqrt(&self) -> Self {
        Real::wrap(self.0.sqrt(self.prec(), RM))
    }

    pub fn ln(&self) -> Self {
        let p = self.prec();
        CONSTS.with(|c| Real::wrap(self.0.ln(p, RM, &mut c.borrow_mut())))
    }

    pub fn exp(&self) -> Self {
        let p = self.prec();
        CONSTS.with(|c| Real::wrap(self.0.exp(p, RM, &mut c.borrow_mut())))
    }

    pub fn recip(&self) -> Self {
        Real::wrap(self.0.reciprocal(self.prec(), RM))
    }

    pub fn powi(&self, n: usize) -> Self {
        Real::wrap(self.0.powi(n, self.prec(), RM))
    }

    pub fn zero_like(&self) -> Self {
        Self::from_i64_prec(0, self.prec())
    }

    pub fn one_like(&self) -> Self {
        Self::from_i64_prec(1, self.prec())
    }

    pub fn int_like(&self, v: i64) -> Self {
        Self::from_i64_prec(v, self.prec())
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Full-precision decimal rendering.
    pub fn to_decimal(&self) -> String {
        if self.0.is_zero() {
            return "0".to_string();
        }
        CONSTS.with(|c| {
            self.0
                .format(Radix::Dec, RM, &mut c.borrow_mut())
                .unwrap_or_else(|_| format!("{:e}", self.to_f64()))
        })
    }
}

/// Parses `"a/b"`, `"123"`, `"-0.25"` or `"1.5e-3"` into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("0{ip}{fp}").parse().ok()?;
    let scale = exp - fp.len() as i64;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Some(r)
}

/// Renders a rational as `a/b` (or `a` when integral).
pub fn rational_to_string(r: &BigRational) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Natural log of a positive rational, in f64. Safe for huge numerators.
pub fn ln_ratio(r: &BigRational) -> f64 {
    assert!(r.is_positive(), "log of non-positive rational");
    fn ln_int(v: &BigInt) -> f64 {
        let bits = v.bits();
        if bits < 1000 {
            return Real::from_bigint_prec(v, 128).to_f64().ln();
        }
        let shift = bits - 64;
        let top: BigInt = v >> shift;
        Real::from_bigint_prec(&top, 128).to_f64().ln() + shift as f64 * std::f64::consts::LN_2
    }
    ln_int(r.numer()) - ln_int(r.denom())
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = f.precision() {
            write!(f, "{:.*}", p, self.to_f64())
        } else {
            write!(f, "{}", self.to_f64())
        }
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({:e})", self.to_f64())
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.0.cmp(&other.0) == Some(0)
    }
}

impl Eq for Real {}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.0.cmp(&other.0) {
            Some(c) if c < 0 => Ordering::Less,
            Some(0) => Ordering::Equal,
            Some(_) => Ordering::Greater,
            None => panic!("comparison involving NaN"),
        }
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(self.0.neg())
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(self.0.clone().neg())
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&Real> for &Real {
            type Output = Real;
            fn $m(self, rhs: &Real) -> Real {
                let p = self.op_prec(rhs);
                Real::wrap(self.0.$m(&rhs.0, p, RM))
            }
        }
        impl $tr<Real> for Real {
            type Output = Real;
            fn $m(self, rhs: Real) -> Real {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $m(self, rhs: &Real) -> Real {
                (&self).$m(rhs)
            }
        }
        impl $tr<Real> for &Real {
            type Output = Real;
            fn $m(self, rhs: Real) -> Real {
                self.$m(&rhs)
            }
        }
        impl $tr<i64> for &Real {
            type Output = Real;
            fn $m(self, rhs: i64) -> Real {
                self.$m(&self.int_like(rhs))
            }
        }
        impl $tr<i64> for Real {
            type Output = Real;
            fn $m(self, rhs: i64) -> Real {
                (&self).$m(&self.int_like(rhs))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl serde::Serialize for Real {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_decimal())
    }
}

impl<'de> serde::Deserialize<'de> for Real {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Real::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("not a real number: {s}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_roundtrip() {
        for v in [1.0, 0.75, -2.5, 1e-20, 123456.789, -3.0e15] {
            assert_eq!(Real::from_f64(v).to_f64(), v);
        }
        assert_eq!(Real::zero().to_f64(), 0.0);
    }

    #[test]
    fn parses_rationals_exactly() {
        let r = parse_rational("0.6180339887").unwrap();
        assert_eq!(rational_to_string(&r), "6180339887/10000000000");
        assert_eq!(rational_to_string(&parse_rational("3/6").unwrap()), "1/2");
        assert_eq!(rational_to_string(&parse_rational("-1.5e2").unwrap()), "-150");
        assert!(parse_rational("abc").is_none());
        assert!(parse_rational("1/0").is_none());
    }

    #[test]
    fn sqrt_and_log_agree_with_f64() {
        let five = Real::from_i64(5);
        assert!((five.sqrt().to_f64() - 5f64.sqrt()).abs() < 1e-15);
        assert!((five.ln().to_f64() - 5f64.ln()).abs() < 1e-15);
        assert!((five.ln().exp() - &five).abs() < Real::pow2_prec(-240, 256));
    }

    #[test]
    fn frac_is_in_unit_interval() {
        let x = Real::parse("-2.25").unwrap();
        assert_eq!(x.frac().to_f64(), 0.75);
        assert_eq!(x.floor_i64(), -3);
    }

    #[test]
    fn reduced_precision_propagates() {
        let a = Real::from_f64_prec(1.0, 64);
        let b = Real::from_f64_prec(3.0, 64);
        assert_eq!((a / b).prec(), 64);
    }

    #[test]
    fn big_integers_convert() {
        let v: BigInt = "123456789012345678901234567890".parse().unwrap();
        let r = Real::from_bigint(&v);
        assert!((r.to_f64() - 1.2345678901234568e29).abs() < 1e14);
        let lr = ln_ratio(&BigRational::new(v.clone(), BigInt::from(1)));
        assert!((lr - 1.2345678901234568e29f64.ln()).abs() < 1e-12);
    }
}
