//! Scalars: exact rationals and floats behind a common [`Field`] trait.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dd::Dd;
use crate::error::{Error, Result};

pub type Rational = BigRational;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if let Ok(r) = Rational::from_str(t) {
        if r.denom().is_zero() {
            return Err(Error::InvalidInput(format!("zero denominator in {s:?}")));
        }
        return Ok(r);
    }
    // plain decimals such as "0.25" are accepted exactly
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t),
    };
    let (int_part, frac) = body
        .split_once('.')
        .ok_or_else(|| Error::InvalidInput(format!("not a rational: {s:?}")))?;
    let digits = format!("{int_part}{frac}");
    let num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits })
        .map_err(|_| Error::InvalidInput(format!("not a rational: {s:?}")))?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = Rational::new(num, den);
    Ok(if neg { -r } else { r })
}

pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    ToPrimitive::to_f64(r).unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Arithmetic shared by exact rationals, `f64` and double-double values.
pub trait Field:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    const EXACT: bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    /// Exact equality for rationals, absolute tolerance otherwise.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;
    fn is_zero_tol(&self, tol: f64) -> bool {
        self.approx_eq(&Self::zero(), tol)
    }
}

impl Field for Rational {
    const EXACT: bool = true;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        rat_int(v)
    }
    fn from_f64(v: f64) -> Self {
        <Rational as FromPrimitive>::from_f64(v).expect("finite float")
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

impl Field for f64 {
    const EXACT: bool = false;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }
}

impl Field for Dd {
    const EXACT: bool = false;
    fn zero() -> Self {
        Dd::ZERO
    }
    fn one() -> Self {
        Dd::ONE
    }
    fn from_i64(v: i64) -> Self {
        Dd::from(v as f64)
    }
    fn from_f64(v: f64) -> Self {
        Dd::from(v)
    }
    fn to_f64(&self) -> f64 {
        self.hi()
    }
    fn abs(&self) -> Self {
        Dd::abs(*self)
    }
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (*self - *other).abs().hi() <= tol
    }
}

/// A scalar tagged with its arithmetic mode.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Float(f64),
}

impl Scalar {
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => rational_to_f64(r),
            Scalar::Float(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn as_rational(&self) -> Result<Rational> {
        match self {
            Scalar::Exact(r) => Ok(r.clone()),
            Scalar::Float(_) => Err(Error::ModeMismatch),
        }
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Ok(Scalar::Exact(a + b)),
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(a + b)),
            _ => Err(Error::ModeMismatch),
        }
    }

    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Ok(Scalar::Exact(a * b)),
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(a * b)),
            _ => Err(Error::ModeMismatch),
        }
    }
}

impl std::fmt::Display for Scalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{r}"),
            Scalar::Float(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(r) => s.serialize_str(&format_rational(r)),
            Scalar::Float(x) => s.serialize_f64(*x),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawScalar {
    Int(i64),
    Num(f64),
    Str(String),
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match RawScalar::deserialize(d)? {
            // bare JSON integers are exact
            RawScalar::Int(i) => Ok(Scalar::Exact(rat_int(i))),
            RawScalar::Num(x) => Ok(Scalar::Float(x)),
            RawScalar::Str(s) => parse_rational(&s)
                .map(Scalar::Exact)
                .map_err(serde::de::Error::custom),
        }
    }
}

/// Split a list of scalars into one arithmetic mode.
pub enum Homogeneous {
    Exact(Vec<Rational>),
    Float(Vec<f64>),
}

pub fn homogenize(values: &[Scalar]) -> Result<Homogeneous> {
    if values.iter().all(Scalar::is_exact) {
        Ok(Homogeneous::Exact(
            values.iter().map(|v| v.as_rational()).collect::<Result<_>>()?,
        ))
    } else if values.iter().all(|v| !v.is_exact()) {
        Ok(Homogeneous::Float(values.iter().map(Scalar::to_f64).collect()))
    } else {
        Err(Error::ModeMismatch)
    }
}

/// Like [`homogenize`] but promotes exact integers/rationals to floats when
/// the list is mixed. Used for inputs where the caller asked for float mode.
pub fn to_floats(values: &[Scalar]) -> Vec<f64> {
    values.iter().map(Scalar::to_f64).collect()
}

pub fn exact_vec(values: &[Rational]) -> Vec<Scalar> {
    values.iter().cloned().map(Scalar::Exact).collect()
}

pub fn float_vec(values: &[f64]) -> Vec<Scalar> {
    values.iter().copied().map(Scalar::Float).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("4/3").unwrap(), rat(4, 3));
        assert_eq!(parse_rational("-2").unwrap(), rat_int(-2));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn scalar_json_roundtrip() {
        let v: Vec<Scalar> = serde_json::from_str(r#"["1/3", 2, 0.5]"#).unwrap();
        assert_eq!(v[0], Scalar::Exact(rat(1, 3)));
        assert_eq!(v[1], Scalar::Exact(rat_int(2)));
        assert_eq!(v[2], Scalar::Float(0.5));
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["1/3","2",0.5]"#);
    }

    #[test]
    fn mixing_modes_is_an_error() {
        let a = Scalar::Exact(rat(1, 2));
        let b = Scalar::Float(0.5);
        assert!(matches!(a.checked_add(&b), Err(Error::ModeMismatch)));
        assert!(homogenize(&[a, b]).is_err());
    }
}
