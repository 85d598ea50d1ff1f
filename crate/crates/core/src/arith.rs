//! Pluggable numeric backends for probabilities and rewards.
//!
//! Three backends implement the [`Scalar`] trait: binary64 floats ([`f64`]),
//! exact rationals ([`Rat`]), and arbitrary-precision binary floats
//! ([`BigF`]). All engine code is generic over the backend, so an exact run
//! and an approximate run execute the same algorithm.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid numeric literal `{0}`")]
    BadLiteral(String),
}

/// Numeric backend. Values are immutable; every operation returns a fresh
/// value. `div` reports division by zero instead of producing NaN or
/// infinity. `is_one`/`is_zero` are exact bit tests, never epsilon
/// comparisons: a merged self-loop probability equal to one denotes an
/// absorbing state, and an epsilon test there would destroy probability
/// mass.
pub trait Scalar:
    Clone + PartialEq + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// True when arithmetic is exact (no rounding), i.e. the rational backend.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(n: u64) -> Self;
    /// Exact rational literal `num/den`.
    fn from_ratio(num: i64, den: u64) -> Self;

    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Result<Self, ArithError>;

    fn is_zero(&self) -> bool;
    fn is_one(&self) -> bool;
    fn is_negative(&self) -> bool;

    /// Best-effort conversion for tolerance checks and human-readable stats.
    /// May overflow to `inf` for values outside binary64 range.
    fn to_f64(&self) -> f64;

    /// Parses a decimal (`0.125`, `2.5e-3`) or fraction (`1/8`) literal.
    fn parse(text: &str) -> Result<Self, ArithError>;

    /// Canonical rendering: `num/den` for rationals, shortest round-trip
    /// decimal for binary64, decimal scientific for big floats.
    fn render(&self) -> String;

    fn backend_name() -> &'static str;

    /// |self| as f64, for pivot selection and convergence tests.
    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }

    /// False when the value has left the backend's representable range
    /// (binary64 overflow). Exact backends are always finite.
    fn is_finite(&self) -> bool {
        true
    }
}

/// |a - b| under any backend, used by iterative solvers.
pub fn abs_diff<S: Scalar>(a: &S, b: &S) -> S {
    if a >= b {
        a.sub(b)
    } else {
        b.sub(a)
    }
}

// ---------------------------------------------------------------------------
// binary64
// ---------------------------------------------------------------------------

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_u64(n: u64) -> Self {
        n as f64
    }
    fn from_ratio(num: i64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Result<Self, ArithError> {
        if *rhs == 0.0 {
            Err(ArithError::DivisionByZero)
        } else {
            Ok(self / rhs)
        }
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_one(&self) -> bool {
        *self == 1.0
    }
    fn is_negative(&self) -> bool {
        *self < 0.0
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse(text: &str) -> Result<Self, ArithError> {
        if let Some((n, d)) = text.split_once('/') {
            let n: f64 = n
                .trim()
                .parse()
                .map_err(|_| ArithError::BadLiteral(text.into()))?;
            let d: f64 = d
                .trim()
                .parse()
                .map_err(|_| ArithError::BadLiteral(text.into()))?;
            if d == 0.0 {
                return Err(ArithError::DivisionByZero);
            }
            Ok(n / d)
        } else {
            text.trim()
                .parse()
                .map_err(|_| ArithError::BadLiteral(text.into()))
        }
    }

    fn render(&self) -> String {
        format!("{self}")
    }

    fn backend_name() -> &'static str {
        "f64"
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

// ---------------------------------------------------------------------------
// exact rationals
// ---------------------------------------------------------------------------

/// Exact rational scalar: a reduced fraction of arbitrary-precision
/// integers. All four operations are exact.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Rat(pub BigRational);

impl Rat {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        Rat(BigRational::new(num.into(), den.into()))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl Scalar for Rat {
    const EXACT: bool = true;

    fn zero() -> Self {
        Rat(BigRational::zero())
    }
    fn one() -> Self {
        Rat(BigRational::one())
    }
    fn from_u64(n: u64) -> Self {
        Rat(BigRational::from_integer(n.into()))
    }
    fn from_ratio(num: i64, den: u64) -> Self {
        Rat(BigRational::new(num.into(), den.into()))
    }

    fn add(&self, rhs: &Self) -> Self {
        Rat(&self.0 + &rhs.0)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Rat(&self.0 - &rhs.0)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Rat(&self.0 * &rhs.0)
    }
    fn div(&self, rhs: &Self) -> Result<Self, ArithError> {
        if rhs.0.is_zero() {
            Err(ArithError::DivisionByZero)
        } else {
            Ok(Rat(&self.0 / &rhs.0))
        }
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn is_one(&self) -> bool {
        self.0.is_one()
    }
    fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or_else(|| {
            // Fall back to a scaled division when numerator/denominator each
            // overflow binary64 on their own.
            let num_digits = self.0.numer().to_string().len() as i32;
            let den_digits = self.0.denom().to_string().len() as i32;
            let scale = BigInt::from(10u32).pow(num_digits.min(den_digits).max(1) as u32 - 1);
            let n = (self.0.numer() / &scale).to_f64().unwrap_or(f64::INFINITY);
            let d = (self.0.denom() / &scale).to_f64().unwrap_or(f64::INFINITY);
            n / d
        })
    }

    fn parse(text: &str) -> Result<Self, ArithError> {
        parse_rational(text).map(Rat)
    }

    fn render(&self) -> String {
        if self.0.denom().is_one() {
            self.0.numer().to_string()
        } else {
            format!("{}/{}", self.0.numer(), self.0.denom())
        }
    }

    fn backend_name() -> &'static str {
        "rational"
    }
}

/// Parses `num/den`, plain integers, decimals and scientific notation into
/// an exact rational.
fn parse_rational(text: &str) -> Result<BigRational, ArithError> {
    let text = text.trim();
    let bad = || ArithError::BadLiteral(text.to_string());
    if let Some((n, d)) = text.split_once('/') {
        let num: BigInt = n.trim().parse().map_err(|_| bad())?;
        let den: BigInt = d.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        return Ok(BigRational::new(num, den));
    }
    // [sign] digits [. digits] [e [sign] digits]
    let (mantissa, exp10) = match text.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits == "-" || digits == "+" {
        return Err(bad());
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let shift = exp10 - frac_part.len() as i32;
    let value = if shift >= 0 {
        BigRational::from_integer(num * BigInt::from(10u32).pow(shift as u32))
    } else {
        BigRational::new(num, BigInt::from(10u32).pow((-shift) as u32))
    };
    Ok(value)
}

// ---------------------------------------------------------------------------
// arbitrary-precision binary floats
// ---------------------------------------------------------------------------

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static BIGF_PREC: RefCell<usize> = const { RefCell::new(256) };
    static BIGF_CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

/// Sets the mantissa precision (in bits) used for big-float values created
/// on the current thread from this point on. Existing values keep the
/// precision they were created with.
pub fn set_bigfloat_precision(bits: usize) {
    assert!(bits >= 2, "precision must be at least 2 bits");
    BIGF_PREC.with(|p| *p.borrow_mut() = bits);
}

pub fn bigfloat_precision() -> usize {
    BIGF_PREC.with(|p| *p.borrow())
}

/// Arbitrary-precision binary float. The mantissa width is configured per
/// thread via [`set_bigfloat_precision`]; the exponent is a 32-bit integer,
/// so the dynamic range vastly exceeds binary64. Operations round to
/// nearest-even at the configured precision.
#[derive(Clone, Debug)]
pub struct BigF(pub BigFloat);

impl BigF {
    fn prec() -> usize {
        bigfloat_precision()
    }
}

impl PartialEq for BigF {
    fn eq(&self, other: &Self) -> bool {
        self.0.cmp(&other.0) == Some(0)
    }
}

impl PartialOrd for BigF {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|s| s.cmp(&0))
    }
}

impl fmt::Display for BigF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl Scalar for BigF {
    const EXACT: bool = false;

    fn zero() -> Self {
        BigF(BigFloat::new(Self::prec()))
    }
    fn one() -> Self {
        BigF(BigFloat::from_word(1, Self::prec()))
    }
    fn from_u64(n: u64) -> Self {
        BigF(BigFloat::from_word(n, Self::prec()))
    }
    fn from_ratio(num: i64, den: u64) -> Self {
        let p = Self::prec();
        let n = if num < 0 {
            let mut v = BigFloat::from_word(num.unsigned_abs(), p);
            v.inv_sign();
            v
        } else {
            BigFloat::from_word(num as u64, p)
        };
        let d = BigFloat::from_word(den, p);
        BigF(n.div(&d, p, RM))
    }

    fn add(&self, rhs: &Self) -> Self {
        BigF(self.0.add(&rhs.0, Self::prec(), RM))
    }
    fn sub(&self, rhs: &Self) -> Self {
        BigF(self.0.sub(&rhs.0, Self::prec(), RM))
    }
    fn mul(&self, rhs: &Self) -> Self {
        BigF(self.0.mul(&rhs.0, Self::prec(), RM))
    }
    fn div(&self, rhs: &Self) -> Result<Self, ArithError> {
        if rhs.0.is_zero() {
            Err(ArithError::DivisionByZero)
        } else {
            Ok(BigF(self.0.div(&rhs.0, Self::prec(), RM)))
        }
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn is_one(&self) -> bool {
        self.0.cmp(&BigFloat::from_word(1, 2)) == Some(0)
    }
    fn is_negative(&self) -> bool {
        self.0.is_negative() && !self.0.is_zero()
    }

    fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        let Some((words, _len, sign, exp, _)) = self.0.as_raw_parts() else {
            return f64::NAN;
        };
        // Mantissa words are little-endian; the value is 0.m * 2^exp with
        // m normalized to [0.5, 1).
        let mut m = 0.0f64;
        for (i, w) in words.iter().rev().take(2).enumerate() {
            m += (*w as f64) * (2f64).powi(-64 * (i as i32 + 1));
        }
        let v = m * (2f64).powi(exp);
        if sign == Sign::Neg {
            -v
        } else {
            v
        }
    }

    fn parse(text: &str) -> Result<Self, ArithError> {
        let text = text.trim();
        let p = Self::prec();
        if let Some((n, d)) = text.split_once('/') {
            let num = Self::parse(n)?;
            let den = Self::parse(d)?;
            return num.div(&den);
        }
        let v = BIGF_CONSTS.with(|cc| BigFloat::parse(text, Radix::Dec, p, RM, &mut cc.borrow_mut()));
        if v.is_nan() {
            Err(ArithError::BadLiteral(text.to_string()))
        } else {
            Ok(BigF(v))
        }
    }

    fn render(&self) -> String {
        BIGF_CONSTS
            .with(|cc| self.0.format(Radix::Dec, RM, &mut cc.borrow_mut()))
            .unwrap_or_else(|_| "<nan>".to_string())
    }

    fn backend_name() -> &'static str {
        "bigfloat"
    }

    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }

    fn is_finite(&self) -> bool {
        !self.0.is_inf() && !self.0.is_nan()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_division_is_exact() {
        // The 1/876 edge arising when a 0.124 self-loop is redistributed.
        let one = Rat::one();
        let v = one.div(&Rat::from_u64(876)).unwrap();
        assert_eq!(v.render(), "1/876");
        assert_eq!(v, Rat::new(1, 876));
    }

    #[test]
    fn addition_identity() {
        let x = Rat::from_ratio(7, 13);
        assert_eq!(x.add(&Rat::zero()), x);
        let y = 0.37f64;
        assert_eq!(y.add(&0.0), y);
    }

    #[test]
    fn f64_division_within_one_ulp() {
        // Long division oracle for 0.8 / 0.876: digits of the quotient were
        // computed independently to 0.913242009132420091...
        let q = 0.8f64.div(&0.876).unwrap();
        let oracle = 0.9132420091324200;
        assert!((q - oracle).abs() <= f64::EPSILON * oracle.abs());
    }

    #[test]
    fn exact_one_test_rational() {
        let a = Rat::new(875, 876);
        let b = Rat::new(1, 876);
        assert!(a.add(&b).is_one());
        assert!(!Rat::new(1, 1095).is_zero());
    }

    #[test]
    fn float_one_test_is_bit_exact() {
        // 0.3 + 0.3 + 0.4 happens to round to exactly 1.0 in binary64;
        // the assertion documents this bit-exact behaviour.
        let s = 0.3f64.add(&0.3).add(&0.4);
        assert!(Scalar::is_one(&s));
        // Summing 0.1 ten times lands one ulp below 1.0 and must not
        // compare equal.
        let mut t = 0.0f64;
        for _ in 0..10 {
            t = t.add(&0.1);
        }
        assert!(!Scalar::is_one(&t));
        assert!((t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert_eq!(Rat::one().div(&Rat::zero()), Err(ArithError::DivisionByZero));
        assert!(1.0f64.div(&0.0).is_err());
        assert!(BigF::one().div(&BigF::zero()).is_err());
    }

    #[test]
    fn parse_literals_all_backends() {
        assert_eq!(f64::parse("0.125").unwrap(), 0.125);
        assert_eq!(f64::parse("1/8").unwrap(), 0.125);
        assert_eq!(Rat::parse("0.125").unwrap(), Rat::new(1, 8));
        assert_eq!(Rat::parse("1/8").unwrap(), Rat::new(1, 8));
        assert_eq!(Rat::parse("2.5e-3").unwrap(), Rat::new(1, 400));
        assert_eq!(Rat::parse("1e2").unwrap(), Rat::from_u64(100));
        let b = BigF::parse("0.125").unwrap();
        assert_eq!(b, BigF::from_ratio(1, 8));
        assert!(Rat::parse("abc").is_err());
    }

    #[test]
    fn rational_round_trip_through_render() {
        let v = Rat::new(119918, 119793);
        let back = Rat::parse(&v.render()).unwrap();
        assert_eq!(v, back);
        let w = Rat::from_u64(42);
        assert_eq!(Rat::parse(&w.render()).unwrap(), w);
    }

    #[test]
    fn bigfloat_ops_and_range() {
        set_bigfloat_precision(256);
        let a = BigF::from_ratio(1, 3);
        let b = BigF::from_u64(3);
        let c = a.mul(&b);
        // 1/3 * 3 rounds back to 1 at 256 bits only approximately; check
        // the difference is far below 2^-200.
        let err = abs_diff(&c, &BigF::one());
        assert!(err.to_f64() < 1e-60);
        // Exponent range far beyond binary64: (2^60)^100 = 2^6000.
        let huge = {
            let mut v = BigF::from_u64(1 << 60);
            let base = v.clone();
            for _ in 0..99 {
                v = v.mul(&base);
            }
            v
        };
        assert!(huge.to_f64().is_infinite());
        let ratio = huge.div(&huge.mul(&BigF::from_u64(2))).unwrap();
        assert_eq!(ratio.to_f64(), 0.5);
    }

    #[test]
    fn bigfloat_to_f64_round_trip() {
        for x in [0.125, 0.33421, 1.0, 7.25e-3, 123456.75] {
            let b = BigF(BigFloat::from_f64(x, 256));
            assert_eq!(b.to_f64(), x, "round trip of {x}");
        }
    }

    #[test]
    fn rational_field_laws_small_random() {
        // Associativity and distributivity over a grid of small fractions.
        let vals: Vec<Rat> = (1..6)
            .flat_map(|n| (1..6).map(move |d| Rat::new(n, d)))
            .collect();
        for a in &vals {
            for b in &vals {
                for c in &vals {
                    assert_eq!(a.add(b).add(c), a.add(&b.add(c)));
                    assert_eq!(a.mul(&b.add(c)), a.mul(b).add(&a.mul(c)));
                }
            }
        }
    }
}
