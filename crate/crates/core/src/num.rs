//! Arbitrary-precision carriers built on MPFR.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float};
use serde::Serialize;

pub const DEFAULT_PREC: u32 = 128;

/// A real value at a fixed working precision together with an upper bound on
/// its absolute error.
#[derive(Clone, Debug)]
pub struct BigReal {
    pub value: Float,
    pub err: f64,
}

impl BigReal {
    pub fn new(value: Float, err: f64) -> Self {
        BigReal { value, err }
    }

    pub fn exact(value: Float) -> Self {
        BigReal { value, err: 0.0 }
    }

    pub fn prec(&self) -> u32 {
        self.value.prec()
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    /// Whether `other` lies within `tol + err` of this value.
    pub fn agrees_with(&self, other: &Float, tol: f64) -> bool {
        let d = Float::with_val(self.prec(), &self.value - other).abs();
        d.to_f64() <= tol + self.err
    }

    pub fn decimal(&self, digits: usize) -> String {
        decimal(&self.value, digits)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecimalValue {
    pub value: String,
    pub err: String,
}

impl From<&BigReal> for DecimalValue {
    fn from(b: &BigReal) -> Self {
        DecimalValue { value: b.decimal(digits_for(b.prec())), err: format!("{:e}", b.err) }
    }
}

pub fn digits_for(prec: u32) -> usize {
    ((prec as f64) * std::f64::consts::LOG10_2).floor() as usize
}

/// Decimal rendering with a fixed number of significant digits.
pub fn decimal(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix(10, Some(digits.max(1)))
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

pub fn euler_gamma(prec: u32) -> Float {
    Float::with_val(prec, Constant::Euler)
}

pub fn sqrt_u(n: u64, prec: u32) -> Float {
    Float::with_val(prec, n).sqrt()
}

/// `e(num/den) = exp(2 pi i num/den)` with the fraction reduced first so the
/// trigonometric argument stays in `[0, 2pi)`.
pub fn e_frac(num: i64, den: u64, prec: u32) -> Complex {
    let r = (num as i128).rem_euclid(den as i128) as u64;
    let mut angle = pi(prec + 16) * 2u32;
    angle *= r;
    angle /= den;
    let (s, c) = angle.sin_cos(Float::new(prec + 16));
    Complex::with_val(prec, (c, s))
}

/// Cosine and sine of `2 pi k / n` for every residue `k mod n`.
pub struct RootTable {
    pub n: u64,
    pub cos: Vec<Float>,
    pub sin: Vec<Float>,
}

impl RootTable {
    pub fn new(n: u64, prec: u32) -> Self {
        let wp = prec + 16;
        let two_pi = pi(wp) * 2u32;
        let mut cos = Vec::with_capacity(n as usize);
        let mut sin = Vec::with_capacity(n as usize);
        for k in 0..n {
            let angle = Float::with_val(wp, &two_pi * k) / n;
            let (s, c) = angle.sin_cos(Float::new(wp));
            cos.push(Float::with_val(prec, c));
            sin.push(Float::with_val(prec, s));
        }
        RootTable { n, cos, sin }
    }

    pub fn idx(&self, k: i64) -> usize {
        (k as i128).rem_euclid(self.n as i128) as usize
    }

    pub fn cos_of(&self, k: i64) -> &Float {
        &self.cos[self.idx(k)]
    }

    pub fn sin_of(&self, k: i64) -> &Float {
        &self.sin[self.idx(k)]
    }

    pub fn e(&self, k: i64, prec: u32) -> Complex {
        let i = self.idx(k);
        Complex::with_val(prec, (&self.cos[i], &self.sin[i]))
    }
}

pub fn abs_c(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.abs_ref())
}

/// `2^(-bits)` as an f64, saturating at the f64 range.
pub fn ulp_bound(bits: u32) -> f64 {
    2f64.powi(-(bits.min(1000) as i32))
}

pub fn pow_f(x: &Float, e: f64) -> Float {
    Float::with_val(x.prec(), x.pow(e))
}
