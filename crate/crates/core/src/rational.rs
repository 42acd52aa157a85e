//! Exact rationals and their text form.
//!
//! `ExactRational` is `num_rational::BigRational`, always kept in lowest
//! terms with a positive denominator. The text form is `"num/den"`; parsing
//! also accepts a bare integer.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type ExactRational = BigRational;

pub fn rat(num: i64, den: i64) -> ExactRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> ExactRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `base^{-e}` exactly.
pub fn inv_pow(base: u32, e: u64) -> ExactRational {
    BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(base), e as usize))
}

pub fn pow(x: &ExactRational, e: u64) -> ExactRational {
    num_traits::pow(x.clone(), e as usize)
}

/// Always `"num/den"`, including `"3/1"` for integers.
pub fn format_rational(x: &ExactRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_rational(s: &str) -> Result<ExactRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("expected a rational \"a/b\" or integer, got {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Parse("zero denominator".into()));
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Nearest f64; exact conversion goes through the integer ratio so huge
/// numerators and denominators do not overflow.
pub fn to_f64(x: &ExactRational) -> f64 {
    if let Some(v) = x.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let n_bits = x.numer().bits() as i64;
    let d_bits = x.denom().bits() as i64;
    let shift = 60 - (n_bits - d_bits);
    let scaled = if shift >= 0 {
        (x.numer() << shift as usize).div_floor(x.denom())
    } else {
        x.numer().div_floor(&(x.denom() << (-shift) as usize))
    };
    scaled.to_f64().unwrap_or(0.0) * 2f64.powi(-shift as i32)
}

/// `ceil(x * 2^bits)` as an integer.
pub fn ceil_scaled(x: &ExactRational, bits: u32) -> BigInt {
    let scaled = x.numer() << bits as usize;
    let (q, r) = scaled.div_mod_floor(x.denom());
    if r.is_zero() {
        q
    } else {
        q + 1
    }
}

pub fn floor_scaled(x: &ExactRational, bits: u32) -> BigInt {
    (x.numer() << bits as usize).div_floor(x.denom())
}

pub fn dyadic(k: BigInt, bits: u32) -> ExactRational {
    BigRational::new(k, BigInt::one() << bits as usize)
}

pub fn abs(x: &ExactRational) -> ExactRational {
    x.abs()
}

pub mod serde_rational {
    //! `#[serde(with = ...)]` adapter for the `"num/den"` string form.
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &ExactRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ExactRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        assert_eq!(format_rational(&rat(6, 4)), "3/2");
        assert_eq!(format_rational(&int(3)), "3/1");
        assert_eq!(parse_rational("3/2").unwrap(), rat(3, 2));
        assert_eq!(parse_rational("-4").unwrap(), int(-4));
        assert_eq!(parse_rational(" 10/4 ").unwrap(), rat(5, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn scaled_rounding() {
        assert_eq!(ceil_scaled(&rat(1, 3), 2), BigInt::from(2));
        assert_eq!(floor_scaled(&rat(1, 3), 2), BigInt::from(1));
        assert_eq!(ceil_scaled(&rat(1, 2), 1), BigInt::from(1));
    }

    #[test]
    fn huge_values_convert_to_f64() {
        let tiny = inv_pow(2, 2000) * int(3);
        let v = to_f64(&(tiny.clone() / inv_pow(2, 1999)));
        assert!((v - 1.5).abs() < 1e-15);
        assert!((to_f64(&rat(1, 3)) - 1.0 / 3.0).abs() < 1e-16);
    }
}
