//! Probability masses that can be carried either as `f64` or as exact
//! rationals. Constructions that must satisfy strict inequalities are written
//! once against [`Mass`] and instantiated for both.

use std::ops::{Add, Div, Mul, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Absolute slack used when a floating-point mass is compared against a
/// coverage target.
pub const MASS_TOL: f64 = 1e-12;

pub trait Mass:
    Clone
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
{
    fn from_u64(n: u64) -> Self;
    fn floor_u64(&self) -> u64;
    fn to_f64(&self) -> f64;
    /// `self >= target`, with [`MASS_TOL`] slack for floats and none for rationals.
    fn covers(&self, target: &Self) -> bool;
}

impl Mass for f64 {
    fn from_u64(n: u64) -> Self {
        n as f64
    }

    fn floor_u64(&self) -> u64 {
        self.floor() as u64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn covers(&self, target: &Self) -> bool {
        *self >= *target - MASS_TOL
    }
}

impl Mass for BigRational {
    fn from_u64(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn floor_u64(&self) -> u64 {
        self.floor().to_integer().to_u64().unwrap_or(u64::MAX)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn covers(&self, target: &Self) -> bool {
        self >= target
    }
}

/// Exact rational for a finite float.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Natural log of a big unsigned integer, accurate to f64 precision.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        x.to_f64().expect("fits in f64").ln()
    } else {
        let shift = bits - 64;
        let top = (x >> shift).to_f64().expect("64-bit head");
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// `ceil(exp(ln_x))` as a big integer, with f64 relative precision. A few ulps
/// of slack keep exact integers from rounding up.
pub fn biguint_ceil_exp(ln_x: f64) -> BigUint {
    if ln_x <= 0.0 {
        return BigUint::one();
    }
    if ln_x < 36.0 {
        return BigUint::from((ln_x.exp() * (1.0 - 4.0 * f64::EPSILON)).ceil() as u64);
    }
    let log2 = ln_x / std::f64::consts::LN_2;
    let exponent = log2.floor() as u64 - 52;
    let mantissa = (log2 - exponent as f64).exp2().ceil() as u64;
    BigUint::from(mantissa) << exponent
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_of_big_powers() {
        let x = BigUint::one() << 4096u32;
        let want = 4096.0 * std::f64::consts::LN_2;
        assert!((ln_biguint(&x) - want).abs() < 1e-12 * want);
        assert_eq!(ln_biguint(&BigUint::from(1u8)), 0.0);
    }

    #[test]
    fn ceil_exp_round_trips() {
        assert_eq!(biguint_ceil_exp(0.0), BigUint::one());
        assert_eq!(biguint_ceil_exp(10f64.ln()), BigUint::from(10u8));
        let big = biguint_ceil_exp(3000.0);
        assert!((ln_biguint(&big) - 3000.0).abs() < 1e-12 * 3000.0);
    }

    #[test]
    fn rational_floor_and_cover() {
        let x = ratio(7, 2);
        assert_eq!(x.floor_u64(), 3);
        assert!(ratio(1, 2).covers(&ratio(1, 2)));
        assert!(!ratio(1, 3).covers(&ratio(1, 2)));
        assert!((0.5 - 1e-13).covers(&0.5));
    }
}
