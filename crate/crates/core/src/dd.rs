//! Double-double real numbers (about 31 significant decimal digits).
//!
//! Values are unevaluated sums `hi + lo` with `|lo| <= ulp(hi)/2`. The
//! arithmetic uses the usual error-free transformations built on `mul_add`.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const EPSILON: f64 = 4.93038065763132e-32;

    pub fn new(hi: f64, lo: f64) -> Dd {
        let (h, l) = two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn is_zero(self) -> bool {
        self.hi == 0.0
    }

    pub fn signum(self) -> f64 {
        if self.hi > 0.0 {
            1.0
        } else if self.hi < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    pub fn sqr(self) -> Dd {
        self * self
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        // one Newton step on the f64 estimate doubles the precision
        let x = self.hi.sqrt();
        let xd = Dd::from(x);
        let r = (self - xd * xd).hi / (2.0 * x);
        xd + Dd::from(r)
    }

    pub fn recip(self) -> Dd {
        Dd::ONE / self
    }

    pub fn max(self, other: Dd) -> Dd {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Dd) -> Dd {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn powi(self, n: i32) -> Dd {
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::from(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::from(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from(q3)
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl SubAssign for Dd {
    fn sub_assign(&mut self, b: Dd) {
        *self = *self - b;
    }
}

impl MulAssign for Dd {
    fn mul_assign(&mut self, b: Dd) {
        *self = *self * b;
    }
}

impl Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::ZERO, |a, b| a + b)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl fmt::Display for Dd {
    /// Scientific notation with 32 significant digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.is_finite() {
            return write!(f, "{}", self.hi);
        }
        if self.hi == 0.0 {
            return write!(f, "0");
        }
        let neg = self.hi < 0.0;
        let mut x = self.abs();
        let mut exp = x.hi.log10().floor() as i32;
        x *= Dd::from(10.0).powi(-exp);
        if x.hi >= 10.0 {
            x = x / Dd::from(10.0);
            exp += 1;
        } else if x.hi < 1.0 {
            x *= Dd::from(10.0);
            exp -= 1;
        }
        let mut digits = Vec::with_capacity(33);
        for _ in 0..33 {
            let d = x.hi.floor().clamp(0.0, 9.0);
            digits.push(d as u8);
            x = (x - Dd::from(d)) * Dd::from(10.0);
        }
        // round on the 33rd digit
        if digits[32] >= 5 {
            let mut i = 31;
            loop {
                if digits[i] < 9 {
                    digits[i] += 1;
                    break;
                }
                digits[i] = 0;
                if i == 0 {
                    digits.insert(0, 1);
                    exp += 1;
                    break;
                }
                i -= 1;
            }
        }
        digits.truncate(32);
        while digits.len() > 1 && *digits.last().unwrap() == 0 {
            digits.pop();
        }
        let mut s = String::new();
        if neg {
            s.push('-');
        }
        s.push((b'0' + digits[0]) as char);
        if digits.len() > 1 {
            s.push('.');
            for d in &digits[1..] {
                s.push((b'0' + d) as char);
            }
        }
        write!(f, "{s}e{exp}")
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid double-double literal: {0:?}")]
pub struct ParseDdError(String);

impl FromStr for Dd {
    type Err = ParseDdError;
    fn from_str(s: &str) -> Result<Dd, ParseDdError> {
        let err = || ParseDdError(s.to_string());
        let t = s.trim();
        let (mant, exp) = match t.find(['e', 'E']) {
            Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
            None => (t, 0),
        };
        let (neg, mant) = match mant.strip_prefix('-') {
            Some(m) => (true, m),
            None => (false, mant.strip_prefix('+').unwrap_or(mant)),
        };
        let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
        if ip.is_empty() && fp.is_empty() {
            return Err(err());
        }
        let mut acc = Dd::ZERO;
        for c in ip.chars().chain(fp.chars()) {
            let d = c.to_digit(10).ok_or_else(err)?;
            acc = acc * Dd::from(10.0) + Dd::from(d as f64);
        }
        let e = exp - fp.len() as i32;
        let v = if e >= 0 {
            acc * Dd::from(10.0).powi(e)
        } else {
            acc / Dd::from(10.0).powi(-e)
        };
        Ok(if neg { -v } else { v })
    }
}

impl Serialize for Dd {
    /// Plain JSON number when the value is an `f64`, otherwise a decimal string.
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.lo == 0.0 {
            s.serialize_f64(self.hi)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawDd {
    Num(f64),
    Str(String),
}

impl<'de> Deserialize<'de> for Dd {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Dd, D::Error> {
        match RawDd::deserialize(d)? {
            RawDd::Num(x) => Ok(Dd::from(x)),
            RawDd::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

pub fn dot(a: &[Dd], b: &[Dd]) -> Dd {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

pub fn norm2(a: &[Dd]) -> Dd {
    dot(a, a).sqrt()
}

pub fn from_f64_slice(v: &[f64]) -> Vec<Dd> {
    v.iter().map(|&x| Dd::from(x)).collect()
}

pub fn to_f64_vec(v: &[Dd]) -> Vec<f64> {
    v.iter().map(|x| x.hi()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_third_is_precise() {
        let third = Dd::ONE / Dd::from(3.0);
        let back = third * Dd::from(3.0) - Dd::ONE;
        assert!(back.abs().hi() < 1e-31);
    }

    #[test]
    fn sqrt_two() {
        let r = Dd::from(2.0).sqrt();
        assert!((r * r - Dd::from(2.0)).abs().hi() < 1e-31);
        assert_eq!(r.to_string()[..20].to_string(), "1.414213562373095048");
    }

    #[test]
    fn tiny_offsets_survive() {
        let x = Dd::ONE - Dd::from(1e-25);
        assert!(x < Dd::ONE);
        let k = Dd::ONE / x - Dd::ONE;
        assert!((k.hi() - 1e-25).abs() < 1e-35);
    }

    #[test]
    fn text_roundtrip() {
        let x = Dd::ONE / Dd::from(7.0) + Dd::from(1e-20);
        let s = x.to_string();
        let y: Dd = s.parse().unwrap();
        assert!((x - y).abs().hi() < 1e-31, "{s}");
        let j = serde_json::to_string(&x).unwrap();
        let z: Dd = serde_json::from_str(&j).unwrap();
        assert!((x - z).abs().hi() < 1e-31);
        assert_eq!(serde_json::to_string(&Dd::from(0.5)).unwrap(), "0.5");
        let p: Dd = "-1.25e-3".parse().unwrap();
        assert_eq!(p.hi(), -1.25e-3);
    }
}
