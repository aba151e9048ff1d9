//! Binary fixed-point reals on top of `BigInt`, for series whose partial
//! sums cancel by many orders of magnitude.
//!
//! A value is `raw * 2^-frac_bits`; all values in one computation share the
//! same `frac_bits`. Only the operations the series evaluators need are
//! provided: exact conversion from `f64`, multiplication by `f64` and small
//! integers, division by small integers, and addition.

use num_bigint::BigInt;
use num_traits::{Float, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug)]
pub struct Fixed {
    raw: BigInt,
    frac_bits: usize,
}

fn shift(v: BigInt, by: i64) -> BigInt {
    if by >= 0 {
        v << (by as usize)
    } else {
        v >> ((-by) as usize)
    }
}

impl Fixed {
    pub fn zero(frac_bits: usize) -> Self {
        Fixed {
            raw: BigInt::zero(),
            frac_bits,
        }
    }

    pub fn from_f64(x: f64, frac_bits: usize) -> Self {
        let (mantissa, exp, sign) = x.integer_decode();
        let raw = shift(BigInt::from(mantissa), exp as i64 + frac_bits as i64);
        Fixed {
            raw: if sign < 0 { -raw } else { raw },
            frac_bits,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.raw.is_zero()
    }

    pub fn mul_f64(&mut self, x: f64) {
        let (mantissa, exp, sign) = x.integer_decode();
        let prod = &self.raw * mantissa;
        let v = shift(prod, exp as i64);
        self.raw = if sign < 0 { -v } else { v };
    }

    pub fn mul_u64(&mut self, k: u64) {
        self.raw *= k;
    }

    pub fn div_u64(&mut self, k: u64) {
        self.raw /= k;
    }

    pub fn add_assign(&mut self, other: &Fixed) {
        debug_assert_eq!(self.frac_bits, other.frac_bits);
        self.raw += &other.raw;
    }

    /// `floor(log2 |x|)`, or `None` for zero.
    pub fn log2_abs(&self) -> Option<i64> {
        if self.raw.is_zero() {
            None
        } else {
            Some(self.raw.bits() as i64 - 1 - self.frac_bits as i64)
        }
    }

    /// `(m, e)` with `x ≈ m * 2^e` and `|m|` in `[0.5, 1)`; `(0, 0)` for zero.
    pub fn to_mantissa_exp2(&self) -> (f64, i64) {
        if self.raw.is_zero() {
            return (0.0, 0);
        }
        let bits = self.raw.bits() as i64;
        // keep 64 significant bits
        let drop = (bits - 64).max(0);
        let top = shift(self.raw.abs(), -drop).to_f64().unwrap_or(f64::NAN);
        let m = top / 2f64.powi((bits - drop) as i32);
        let m = if self.raw.is_negative() { -m } else { m };
        (m, bits - self.frac_bits as i64)
    }

    pub fn to_f64(&self) -> f64 {
        let (m, e) = self.to_mantissa_exp2();
        m * 2f64.powf(e as f64)
    }
}
