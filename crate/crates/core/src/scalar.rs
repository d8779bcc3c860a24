//! Scalar fields shared by the q-series and exact-moment code.
//!
//! Identity checks run either in floating point (`f64`, `Complex64`) or
//! exactly over big rationals (`BigRational`, [`ExactComplex`]). The
//! [`Scalar`] trait is the common ground: field operations from
//! `num_traits::Num` plus a floating magnitude for error reporting.

use std::fmt::Debug;
use std::ops::Neg;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive, Zero};

/// Complex number with arbitrary-precision rational parts.
pub type ExactComplex = Complex<BigRational>;

pub trait Scalar: Clone + Debug + PartialEq + Num + Neg<Output = Self> {
    /// Absolute value as a double, for error reporting.
    fn magnitude(&self) -> f64;

    fn from_i64(v: i64) -> Self;

    fn powu(&self, e: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    /// `self^e` for any integer exponent; `None` when inverting zero.
    fn powi_signed(&self, e: i64) -> Option<Self> {
        let p = self.powu(e.unsigned_abs() as u32);
        if e >= 0 {
            Some(p)
        } else if p.is_zero() {
            None
        } else {
            Some(Self::one() / p)
        }
    }
}

impl Scalar for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

impl Scalar for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
}

impl Scalar for BigRational {
    fn magnitude(&self) -> f64 {
        self.to_f64().map_or(f64::INFINITY, f64::abs)
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
}

impl Scalar for ExactComplex {
    fn magnitude(&self) -> f64 {
        let re = self.re.to_f64().unwrap_or(f64::INFINITY);
        let im = self.im.to_f64().unwrap_or(f64::INFINITY);
        re.hypot(im)
    }

    fn from_i64(v: i64) -> Self {
        Complex::new(BigRational::from_i64(v), BigRational::zero())
    }
}

pub fn rational(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn exact_real(value: BigRational) -> ExactComplex {
    Complex::new(value, BigRational::zero())
}

/// Parses `"p/q"` or an integer into a rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    match text.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).ok()?;
            let q = BigInt::from_str(q.trim()).ok()?;
            if q.is_zero() {
                return None;
            }
            Some(BigRational::new(p, q))
        }
        None => BigInt::from_str(text).ok().map(BigRational::from_integer),
    }
}

/// Rational point on the unit circle, `((1-t²) + 2t i)/(1+t²)`.
pub fn pythagorean_point(t: &BigRational) -> ExactComplex {
    let one = BigRational::one();
    let t2 = t.clone() * t.clone();
    let den = one.clone() + t2.clone();
    Complex::new((one - t2) / den.clone(), (t.clone() + t.clone()) / den)
}
