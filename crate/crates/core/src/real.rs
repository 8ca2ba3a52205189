//! Scalar values that stay exact as long as the computation allows.
//!
//! A [`Real`] is either an exact rational or an `f64`. Arithmetic between
//! exact values is exact; as soon as a float enters, the result degrades to
//! a float. Comparisons between an exact value and a float are exact too,
//! because every finite `f64` is itself a rational number.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Nudge applied when a grid or preimage lookup must avoid an open endpoint.
pub const OPEN_ENDPOINT_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RealError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero raised to a negative power")]
    ZeroToNegativePower,
    #[error("cannot parse number: {0}")]
    Parse(String),
}

/// An exact rational or an `f64`, with arithmetic that preserves exactness.
#[derive(Debug, Clone)]
pub enum Real {
    Exact(BigRational),
    Approx(f64),
}

impl Real {
    pub fn zero() -> Self {
        Real::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Real::Exact(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Real::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact rational `num/den`. Panics if `den == 0`.
    pub fn from_ratio(num: i64, den: i64) -> Self {
        Real::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_f64(x: f64) -> Self {
        Real::Approx(x)
    }

    /// The exact rational `1/10^9` used to nudge off open endpoints.
    pub fn open_eps() -> Self {
        Real::from_ratio(1, 1_000_000_000)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Real::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Real::Exact(r) => r.is_zero(),
            Real::Approx(x) => *x == 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Real::Exact(_) => true,
            Real::Approx(x) => x.is_finite(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Real::Approx(x) => *x,
        }
    }

    /// Exact view of the value. Finite floats convert losslessly.
    pub fn to_exact(&self) -> Option<BigRational> {
        match self {
            Real::Exact(r) => Some(r.clone()),
            Real::Approx(x) => BigRational::from_f64(*x),
        }
    }

    pub fn abs(&self) -> Real {
        match self {
            Real::Exact(r) => Real::Exact(r.abs()),
            Real::Approx(x) => Real::Approx(x.abs()),
        }
    }

    pub fn min(self, other: Real) -> Real {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Real) -> Real {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn checked_div(&self, rhs: &Real) -> Result<Real, RealError> {
        if rhs.is_zero() {
            return Err(RealError::DivisionByZero);
        }
        Ok(self.clone() / rhs.clone())
    }

    /// Integer power, exact for exact bases. Negative exponents invert.
    pub fn powi(&self, exp: i32) -> Result<Real, RealError> {
        if exp < 0 && self.is_zero() {
            return Err(RealError::ZeroToNegativePower);
        }
        Ok(match self {
            Real::Exact(r) => Real::Exact(r.pow(exp)),
            Real::Approx(x) => Real::Approx(x.powi(exp)),
        })
    }

    /// Parse "5", "-0.25", "3/4", or "1e-9" into an exact value.
    pub fn parse(text: &str) -> Result<Real, RealError> {
        let s = text.trim();
        let bad = || RealError::Parse(s.to_string());
        if let Some((mantissa, exponent)) = s.split_once(['e', 'E']) {
            let exp: i32 = exponent.trim().parse().map_err(|_| bad())?;
            let Real::Exact(m) = Real::parse(mantissa)? else {
                return Err(bad());
            };
            let scale = BigRational::from_integer(BigInt::from(10u32)).pow(exp);
            return Ok(Real::Exact(m * scale));
        }
        if let Some((num, den)) = s.split_once('/') {
            let n: BigInt = num.trim().parse().map_err(|_| bad())?;
            let d: BigInt = den.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(RealError::DivisionByZero);
            }
            return Ok(Real::Exact(BigRational::new(n, d)));
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let negative = int_part.starts_with('-');
            let int_digits = int_part.trim_start_matches(['-', '+']);
            if !int_digits.is_empty() && !int_digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let whole: BigInt = if int_digits.is_empty() {
                BigInt::zero()
            } else {
                int_digits.parse().map_err(|_| bad())?
            };
            let frac: BigInt = frac_part.parse().map_err(|_| bad())?;
            let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
            let mut value = BigRational::new(whole * &scale + frac, scale);
            if negative {
                value = -value;
            }
            return Ok(Real::Exact(value));
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Real::Exact(BigRational::from_integer(n)))
    }
}

fn binop(lhs: Real, rhs: Real, exact: impl Fn(BigRational, BigRational) -> BigRational, approx: impl Fn(f64, f64) -> f64) -> Real {
    match (lhs, rhs) {
        (Real::Exact(a), Real::Exact(b)) => Real::Exact(exact(a, b)),
        (a, b) => Real::Approx(approx(a.to_f64(), b.to_f64())),
    }
}

impl Add for Real {
    type Output = Real;
    fn add(self, rhs: Real) -> Real {
        binop(self, rhs, |a, b| a + b, |a, b| a + b)
    }
}

impl Sub for Real {
    type Output = Real;
    fn sub(self, rhs: Real) -> Real {
        binop(self, rhs, |a, b| a - b, |a, b| a - b)
    }
}

impl Mul for Real {
    type Output = Real;
    fn mul(self, rhs: Real) -> Real {
        binop(self, rhs, |a, b| a * b, |a, b| a * b)
    }
}

/// Unchecked division; use [`Real::checked_div`] when the denominator is data-driven.
impl Div for Real {
    type Output = Real;
    fn div(self, rhs: Real) -> Real {
        binop(self, rhs, |a, b| a / b, |a, b| a / b)
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        match self {
            Real::Exact(r) => Real::Exact(-r),
            Real::Approx(x) => Real::Approx(-x),
        }
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => Some(a.cmp(b)),
            (Real::Approx(a), Real::Approx(b)) => a.partial_cmp(b),
            // Mixed: finite floats are rationals, so compare exactly.
            (Real::Exact(a), Real::Approx(b)) => {
                if b.is_nan() {
                    None
                } else if b.is_infinite() {
                    Some(if *b > 0.0 { Ordering::Less } else { Ordering::Greater })
                } else {
                    BigRational::from_f64(*b).map(|b| a.cmp(&b))
                }
            }
            (Real::Approx(_), Real::Exact(_)) => other.partial_cmp(self).map(Ordering::reverse),
        }
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Real::Approx(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Real::Exact(_) => serializer.serialize_str(&self.to_string()),
            Real::Approx(x) => serializer.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RealVisitor;
        impl<'de> Visitor<'de> for RealVisitor {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a rational string like \"2/3\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Real, E> {
                Ok(Real::Approx(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Real, E> {
                Ok(Real::from_int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Real, E> {
                Ok(Real::Exact(BigRational::from_integer(BigInt::from(v))))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Real, E> {
                Real::parse(v).map_err(de::Error::custom)
            }
        }
        deserializer.deserialize_any(RealVisitor)
    }
}
