//! Arithmetic kernel: scalar backends, half-integer exponents, and the
//! deformation base `q = p²` with its bracket and brace primitives.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Num, One, Pow, Signed, ToPrimitive, Zero};

use crate::error::{QError, Result};

/// A number `m/2`, stored as `m`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt {
    twice: i64,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };
    pub const ONE: HalfInt = HalfInt { twice: 2 };
    pub const HALF: HalfInt = HalfInt { twice: 1 };

    pub const fn from_twice(twice: i64) -> Self {
        HalfInt { twice }
    }

    pub const fn int(n: i64) -> Self {
        HalfInt { twice: 2 * n }
    }

    pub const fn twice(self) -> i64 {
        self.twice
    }

    pub const fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    pub fn to_integer(self) -> Option<i64> {
        self.is_integer().then_some(self.twice / 2)
    }

    pub fn to_f64(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn times(self, n: i64) -> Self {
        HalfInt { twice: self.twice * n }
    }

    pub fn to_ratio(self) -> BigRational {
        BigRational::new(BigInt::from(self.twice), BigInt::from(2))
    }

    /// Returns `None` unless `r` is an integer or an odd multiple of 1/2.
    pub fn from_ratio(r: &BigRational) -> Option<Self> {
        let twice = r * BigRational::from_integer(BigInt::from(2));
        if !twice.is_integer() {
            return None;
        }
        twice.to_integer().to_i64().map(HalfInt::from_twice)
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice + rhs.twice }
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice - rhs.twice }
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt { twice: -self.twice }
    }
}

impl From<i64> for HalfInt {
    fn from(n: i64) -> Self {
        HalfInt::int(n)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl FromStr for HalfInt {
    type Err = QError;

    /// Accepts `3`, `-3/2` and `1.5`.
    fn from_str(s: &str) -> Result<Self> {
        let r = parse_ratio(s)?;
        HalfInt::from_ratio(&r)
            .ok_or_else(|| QError::InvalidParameter(format!("{s} is not a half-integer")))
    }
}

/// Parses `a`, `a/b` or a terminating decimal into an exact rational.
pub fn parse_ratio(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || QError::InvalidParameter(format!("cannot parse {s:?} as a rational"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = BigInt::from(10u32).pow(frac.len() as u32);
        let r = BigRational::new(n, d);
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if !r.is_positive() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    (&n * &n == *r.numer() && &d * &d == *r.denom()).then(|| BigRational::new(n, d))
}

/// Exponent field paired with a scalar backend: the values `e` for which `q^e` is formed.
pub trait Exponent:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn half(h: HalfInt) -> Self;

    fn int(n: i64) -> Self {
        Self::half(HalfInt::int(n))
    }

    fn times(&self, n: i64) -> Self;

    /// `self / 2`, if the backend can hold it.
    fn halved(&self) -> Option<Self>;

    fn conj(&self) -> Self;

    fn real_part(&self) -> f64;

    /// The exact half-integer value, if this exponent is one.
    fn as_half(&self) -> Option<HalfInt>;

    /// Embeds a user-supplied rational parameter, rejecting values the backend cannot hold.
    fn from_param(r: &BigRational) -> Result<Self>;

    /// Nonnegative integer value, used to close infinite products into finite ones.
    fn as_nonneg_int(&self) -> Option<u32> {
        self.as_half()
            .and_then(HalfInt::to_integer)
            .and_then(|n| u32::try_from(n).ok())
    }
}

impl Exponent for HalfInt {
    fn half(h: HalfInt) -> Self {
        h
    }
    fn times(&self, n: i64) -> Self {
        HalfInt::times(*self, n)
    }
    fn halved(&self) -> Option<Self> {
        (self.twice % 2 == 0).then(|| HalfInt::from_twice(self.twice / 2))
    }
    fn conj(&self) -> Self {
        *self
    }
    fn real_part(&self) -> f64 {
        self.to_f64()
    }
    fn as_half(&self) -> Option<HalfInt> {
        Some(*self)
    }
    fn from_param(r: &BigRational) -> Result<Self> {
        HalfInt::from_ratio(r).ok_or_else(|| {
            QError::InvalidParameter(format!(
                "exact mode needs half-integer parameters, got {r}"
            ))
        })
    }
}

impl Exponent for f64 {
    fn half(h: HalfInt) -> Self {
        h.to_f64()
    }
    fn times(&self, n: i64) -> Self {
        self * n as f64
    }
    fn halved(&self) -> Option<Self> {
        Some(self / 2.0)
    }
    fn conj(&self) -> Self {
        *self
    }
    fn real_part(&self) -> f64 {
        *self
    }
    fn as_half(&self) -> Option<HalfInt> {
        let t = 2.0 * self;
        (t.fract() == 0.0 && t.abs() < 1e15).then(|| HalfInt::from_twice(t as i64))
    }
    fn from_param(r: &BigRational) -> Result<Self> {
        r.to_f64()
            .ok_or_else(|| QError::InvalidParameter(format!("{r} does not fit in f64")))
    }
}

impl Exponent for Complex64 {
    fn half(h: HalfInt) -> Self {
        Complex64::new(h.to_f64(), 0.0)
    }
    fn times(&self, n: i64) -> Self {
        self * n as f64
    }
    fn halved(&self) -> Option<Self> {
        Some(self / 2.0)
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn real_part(&self) -> f64 {
        self.re
    }
    fn as_half(&self) -> Option<HalfInt> {
        if self.im != 0.0 {
            return None;
        }
        self.re.as_half()
    }
    fn from_param(r: &BigRational) -> Result<Self> {
        f64::from_param(r).map(|x| Complex64::new(x, 0.0))
    }
}

/// Which arithmetic a computation ran in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    Exact,
    Float,
    Complex,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
            Backend::Complex => "complex",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = QError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "float" => Ok(Backend::Float),
            "complex" => Ok(Backend::Complex),
            _ => Err(QError::InvalidParameter(format!("unknown mode {s:?}"))),
        }
    }
}

/// A field element in one of the three backends.
pub trait Scalar:
    Clone + fmt::Debug + fmt::Display + PartialEq + Send + Sync + Num + Neg<Output = Self> + 'static
{
    type Exp: Exponent;
    const BACKEND: Backend;

    fn from_ratio(r: &BigRational) -> Self;

    fn from_i64(n: i64) -> Self;

    fn conj(&self) -> Self;

    fn magnitude(&self) -> f64;

    /// `log2 |x|`, finite even where `magnitude` over- or underflows; `-inf` at zero.
    fn log2_magnitude(&self) -> f64 {
        self.magnitude().log2()
    }

    /// Zero test: exact for rationals, relative to `scale` for floats.
    fn is_negligible(&self, scale: f64) -> bool;

    /// `p^(2e)`, i.e. `q^e` for `q = p²`, with `p` already embedded.
    fn pow_p(p: &Self, e: &Self::Exp) -> Self;

    fn powi(&self, n: i32) -> Self;

    fn is_exact() -> bool {
        Self::BACKEND == Backend::Exact
    }
}

const FLOAT_ZERO_ULPS: f64 = 64.0 * f64::EPSILON;

/// `log2 |n|` from the leading 64 bits, for `n ≠ 0`.
fn log2_int(n: &BigInt) -> f64 {
    let bits = n.bits();
    let shift = bits.saturating_sub(64);
    let top = (n.abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.log2() + shift as f64
}

impl Scalar for BigRational {
    type Exp = HalfInt;
    const BACKEND: Backend = Backend::Exact;

    fn from_ratio(r: &BigRational) -> Self {
        r.clone()
    }
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn conj(&self) -> Self {
        self.clone()
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn log2_magnitude(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        log2_int(self.numer()) - log2_int(self.denom())
    }
    fn is_negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }
    fn pow_p(p: &Self, e: &HalfInt) -> Self {
        p.pow(e.twice() as i32)
    }
    fn powi(&self, n: i32) -> Self {
        Pow::pow(self, n)
    }
}

impl Scalar for f64 {
    type Exp = f64;
    const BACKEND: Backend = Backend::Float;

    fn from_ratio(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn conj(&self) -> Self {
        *self
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_negligible(&self, scale: f64) -> bool {
        self.abs() <= FLOAT_ZERO_ULPS * scale.max(1.0)
    }
    fn pow_p(p: &Self, e: &f64) -> Self {
        match e.as_half() {
            Some(h) => p.powi(h.twice() as i32),
            None => p.powf(2.0 * e),
        }
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
}

impl Scalar for Complex64 {
    type Exp = Complex64;
    const BACKEND: Backend = Backend::Complex;

    fn from_ratio(r: &BigRational) -> Self {
        Complex64::new(f64::from_ratio(r), 0.0)
    }
    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn is_negligible(&self, scale: f64) -> bool {
        self.norm() <= FLOAT_ZERO_ULPS * scale.max(1.0)
    }
    fn pow_p(p: &Self, e: &Complex64) -> Self {
        match e.as_half() {
            Some(h) => Complex64::powi(p, h.twice() as i32),
            None => (e * (2.0 * p.re.ln())).exp(),
        }
    }
    fn powi(&self, n: i32) -> Self {
        Complex64::powi(self, n)
    }
}

/// The deformation parameter, stored as a positive rational `p ≠ 1` with `q = p²`.
#[derive(Clone, Debug)]
pub struct QBase<S: Scalar> {
    p_exact: BigRational,
    p: S,
    q: S,
    q_inv: S,
}

impl<S: Scalar> QBase<S> {
    pub fn new(p: BigRational) -> Result<Self> {
        if !p.is_positive() || p.is_one() {
            return Err(QError::InvalidParameter(format!(
                "p must be positive and different from 1, got {p}"
            )));
        }
        let ps = S::from_ratio(&p);
        let q = ps.clone() * ps.clone();
        let q_inv = S::one() / q.clone();
        Ok(QBase { p_exact: p, p: ps, q, q_inv })
    }

    pub fn from_p(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(QError::InvalidParameter("zero denominator in p".into()));
        }
        Self::new(BigRational::new(num.into(), den.into()))
    }

    /// Builds the base from `q` itself. Exact mode needs `q` to be the square
    /// of a rational; the float backends accept any positive `q ≠ 1`.
    pub fn from_q(q: &BigRational) -> Result<Self> {
        if let Some(p) = rational_sqrt(q) {
            return Self::new(p);
        }
        if S::is_exact() {
            return Err(QError::InvalidParameter(format!(
                "q = {q} is not the square of a rational; exact mode needs rational p"
            )));
        }
        let qf = q.to_f64().filter(|x| *x > 0.0).ok_or_else(|| {
            QError::InvalidParameter(format!("q must be positive, got {q}"))
        })?;
        let p = BigRational::from_float(qf.sqrt())
            .ok_or_else(|| QError::InvalidParameter(format!("cannot embed sqrt({q})")))?;
        Self::new(p)
    }

    pub fn p_exact(&self) -> &BigRational {
        &self.p_exact
    }

    pub fn q(&self) -> S {
        self.q.clone()
    }

    pub fn q_inv(&self) -> S {
        self.q_inv.clone()
    }

    /// The base `q⁻¹`, obtained from `p ↦ 1/p`.
    pub fn inverse(&self) -> Self {
        QBase {
            p_exact: self.p_exact.recip(),
            p: S::one() / self.p.clone(),
            q: self.q_inv.clone(),
            q_inv: self.q.clone(),
        }
    }

    pub fn below_one(&self) -> bool {
        self.p_exact < BigRational::one()
    }

    pub fn qpow(&self, e: &S::Exp) -> S {
        S::pow_p(&self.p, e)
    }

    pub fn qpow_int(&self, n: i64) -> S {
        self.p.powi((2 * n) as i32)
    }

    pub fn qpow_half(&self, h: HalfInt) -> S {
        self.p.powi(h.twice() as i32)
    }

    /// `q^(c + Σ mᵢ eᵢ)` for a half-integer offset and integer multiples of exponents.
    pub fn mono(&self, c: HalfInt, parts: &[(i64, &S::Exp)]) -> S {
        let mut e = S::Exp::half(c);
        for (m, x) in parts {
            e = e + x.times(*m);
        }
        self.qpow(&e)
    }

    /// `[t]_q = (q^t − q^−t)/(q − q^−1)`.
    pub fn qbracket(&self, t: &S::Exp) -> S {
        let a = self.qpow(t);
        let b = S::one() / a.clone();
        (a - b) / (self.q.clone() - self.q_inv.clone())
    }

    /// `{t}_q = (q^t + q^−t)/(q + q^−1)`.
    pub fn qbrace(&self, t: &S::Exp) -> S {
        let a = self.qpow(t);
        let b = S::one() / a.clone();
        (a + b) / (self.q.clone() + self.q_inv.clone())
    }

    /// `(q^t + q^−t)/(q − q^−1)`: the normalisation under which the twisted
    /// primitive elements of the non-compact form have the expected spectrum.
    pub fn qbrace_su11(&self, t: &S::Exp) -> S {
        let a = self.qpow(t);
        let b = S::one() / a.clone();
        (a + b) / (self.q.clone() - self.q_inv.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn halfint_arithmetic_and_display() {
        let a: HalfInt = "3/2".parse().unwrap();
        let b: HalfInt = "-1".parse().unwrap();
        assert_eq!((a + b).to_string(), "1/2");
        assert_eq!((a - b).to_string(), "5/2");
        assert_eq!((-a).twice(), -3);
        assert!(HalfInt::int(4).is_integer());
        assert_eq!("0.5".parse::<HalfInt>().unwrap(), HalfInt::HALF);
        assert!("1/3".parse::<HalfInt>().is_err());
    }

    #[test]
    fn qpow_small_cases() {
        let qb = QBase::<BigRational>::from_p(1, 2).unwrap();
        assert_eq!(qb.qpow(&HalfInt::ZERO), ratio(1, 1));
        assert_eq!(qb.qpow(&HalfInt::ONE), ratio(1, 4));
        assert_eq!(qb.qpow(&HalfInt::HALF), ratio(1, 2));
    }

    #[test]
    fn bracket_and_brace_values() {
        let qb = QBase::<BigRational>::from_p(1, 2).unwrap();
        assert_eq!(qb.qbracket(&HalfInt::ZERO), ratio(0, 1));
        assert_eq!(qb.qbracket(&HalfInt::ONE), ratio(1, 1));
        assert_eq!(qb.qbracket(&HalfInt::int(2)), ratio(17, 4));
        assert_eq!(qb.qbrace(&HalfInt::ONE), ratio(1, 1));
        assert_eq!(qb.qbrace(&HalfInt::ZERO), ratio(8, 17));
        assert_eq!(qb.qbrace(&HalfInt::int(3)), qb.qbrace(&HalfInt::int(-3)));
    }

    #[test]
    fn rejects_degenerate_base() {
        assert!(QBase::<f64>::from_p(1, 1).is_err());
        assert!(QBase::<f64>::from_p(-1, 2).is_err());
    }

    #[test]
    fn parse_decimal_and_fraction() {
        assert_eq!(parse_ratio("-0.25").unwrap(), ratio(-1, 4));
        assert_eq!(parse_ratio("4/9").unwrap(), ratio(4, 9));
        assert!(parse_ratio("1/0").is_err());
    }

    #[test]
    fn base_from_q() {
        let qb = QBase::<BigRational>::from_q(&ratio(4, 9)).unwrap();
        assert_eq!(qb.p_exact(), &ratio(2, 3));
        assert!(QBase::<BigRational>::from_q(&ratio(1, 3)).is_err());
        let qf = QBase::<f64>::from_q(&ratio(1, 3)).unwrap();
        assert!((qf.q() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn complex_exponent_matches_real_on_axis() {
        let qb = QBase::<Complex64>::from_p(2, 3).unwrap();
        let z = qb.qpow(&Complex64::new(0.3, 0.0));
        let r = QBase::<f64>::from_p(2, 3).unwrap().qpow(&0.3);
        assert!((z.re - r).abs() < 1e-14 && z.im.abs() < 1e-14);
    }
}
