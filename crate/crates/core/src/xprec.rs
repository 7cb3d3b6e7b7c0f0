//! Extended-precision arithmetic on top of MPFR.
//!
//! Moments and cumulants of the magnetization suffer from heavy cancellation
//! (central moments grow like `N^{j/2}` while cumulants stay `O(N)`), so the
//! exact engine works in a configurable number of decimal digits. Only real
//! MPFR floats are used; the handful of complex operations needed here are
//! implemented on pairs of floats.

use std::cmp::Ordering;

use num_complex::Complex64;
use rug::float::Constant;
use rug::{Assign, Float};
use serde::{Deserialize, Serialize};

/// Default number of significant decimal digits.
pub const DEFAULT_DIGITS: u32 = 50;
const MIN_DIGITS: u32 = 17;
const GUARD_BITS: u32 = 16;

/// Working precision of the extended-precision engine, in decimal digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Precision {
    digits: u32,
}

impl Default for Precision {
    fn default() -> Self {
        Self::from_digits(DEFAULT_DIGITS)
    }
}

impl Precision {
    /// Requests below double precision are raised to 17 digits.
    pub fn from_digits(digits: u32) -> Self {
        Self {
            digits: digits.max(MIN_DIGITS),
        }
    }

    pub fn digits(self) -> u32 {
        self.digits
    }

    /// Mantissa bits, including guard bits.
    pub fn bits(self) -> u32 {
        (f64::from(self.digits) * std::f64::consts::LOG2_10).ceil() as u32 + GUARD_BITS
    }

    pub fn float<T>(self, value: T) -> Float
    where
        Float: Assign<T>,
    {
        Float::with_val(self.bits(), value)
    }

    pub fn zero(self) -> Float {
        Float::new(self.bits())
    }

    pub fn pi(self) -> Float {
        Float::with_val(self.bits(), Constant::Pi)
    }
}

/// Complex number with MPFR real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct XComplex {
    pub re: Float,
    pub im: Float,
}

impl XComplex {
    pub fn new(re: Float, im: Float) -> Self {
        Self { re, im }
    }

    pub fn zero(prec: Precision) -> Self {
        Self::new(prec.zero(), prec.zero())
    }

    pub fn from_c64(prec: Precision, z: Complex64) -> Self {
        Self::new(prec.float(z.re), prec.float(z.im))
    }

    pub fn add_assign(&mut self, other: &XComplex) {
        self.re += &other.re;
        self.im += &other.im;
    }

    pub fn sub(&self, other: &XComplex) -> XComplex {
        let prec = self.re.prec();
        XComplex::new(
            Float::with_val(prec, &self.re - &other.re),
            Float::with_val(prec, &self.im - &other.im),
        )
    }

    pub fn mul(&self, other: &XComplex) -> XComplex {
        let prec = self.re.prec();
        let rr = Float::with_val(prec, &self.re * &other.re);
        let ii = Float::with_val(prec, &self.im * &other.im);
        let ri = Float::with_val(prec, &self.re * &other.im);
        let ir = Float::with_val(prec, &self.im * &other.re);
        XComplex::new(rr - ii, ri + ir)
    }

    pub fn div(&self, other: &XComplex) -> XComplex {
        let prec = self.re.prec();
        let norm = Float::with_val(prec, other.re.clone().square() + other.im.clone().square());
        let conj = XComplex::new(other.re.clone(), Float::with_val(prec, -&other.im));
        self.mul(&conj).scale(&Float::with_val(prec, 1 / &norm))
    }

    pub fn scale(&self, factor: &Float) -> XComplex {
        let prec = self.re.prec();
        XComplex::new(
            Float::with_val(prec, &self.re * factor),
            Float::with_val(prec, &self.im * factor),
        )
    }

    pub fn exp(&self) -> XComplex {
        let prec = self.re.prec();
        let modulus = self.re.clone().exp();
        let (sin, cos) = self.im.clone().sin_cos(Float::new(prec));
        XComplex::new(Float::with_val(prec, &modulus * &cos), modulus * sin)
    }

    /// `e^{i theta}` for a real angle.
    pub fn cis(theta: &Float) -> XComplex {
        let (sin, cos) = theta.clone().sin_cos(Float::new(theta.prec()));
        XComplex::new(cos, sin)
    }

    pub fn abs(&self) -> Float {
        self.re.clone().hypot(&self.im)
    }

    /// Principal argument in (-pi, pi].
    pub fn arg(&self) -> Float {
        self.im.clone().atan2(&self.re)
    }

    /// Principal logarithm.
    pub fn ln(&self) -> XComplex {
        XComplex::new(self.abs().ln(), self.arg())
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

/// Sum after sorting ascending, so that the result does not depend on the
/// order in which the terms were produced.
pub fn sum_sorted(mut terms: Vec<Float>, prec: Precision) -> Float {
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mut acc = prec.zero();
    for t in &terms {
        acc += t;
    }
    acc
}

/// `log(sum_k exp(v_k))` with the maximum factored out.
pub fn log_sum_exp(values: &[Float], prec: Precision) -> Float {
    let Some(max) = values
        .iter()
        .max_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal))
        .cloned()
    else {
        return prec.float(f64::NEG_INFINITY);
    };
    let terms = values
        .iter()
        .map(|v| Float::with_val(prec.bits(), v - &max).exp())
        .collect();
    sum_sorted(terms, prec).ln() + max
}

/// Upper tail `P(Z >= x)` of the standard normal law, accurate in relative
/// terms far into the tail.
pub fn normal_upper_tail(x: &Float) -> Float {
    let prec = x.prec();
    let sqrt2 = Float::with_val(prec, 2).sqrt();
    let arg = Float::with_val(prec, x / &sqrt2);
    arg.erfc() / 2u32
}

/// Standard normal cdf in double precision.
pub fn normal_cdf(x: f64) -> f64 {
    let minus_x = Float::with_val(128, -x);
    normal_upper_tail(&minus_x).to_f64()
}

/// Decimal rendering with the requested number of significant digits.
pub fn to_decimal(value: &Float, digits: u32) -> String {
    value.to_string_radix(10, Some(digits as usize))
}
