//! Midpoint-radius enclosures over exact rationals.
//!
//! A [`BoundedReal`] `(m, r)` asserts that some real number lies in
//! `[m − r, m + r]`. Every operation returns an enclosure of all results
//! obtainable from values inside the operands. Midpoints may carry very large
//! denominators after long products; [`BoundedReal::rounded`] trades a little
//! radius for a short dyadic midpoint.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, ExactRational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundedReal {
    #[serde(with = "rational::serde_rational")]
    mid: ExactRational,
    #[serde(with = "rational::serde_rational")]
    rad: ExactRational,
}

impl BoundedReal {
    /// Panics if `rad` is negative.
    pub fn new(mid: ExactRational, rad: ExactRational) -> Self {
        assert!(!rad.is_negative(), "negative enclosure radius");
        BoundedReal { mid, rad }
    }

    pub fn exact(x: ExactRational) -> Self {
        BoundedReal {
            mid: x,
            rad: ExactRational::zero(),
        }
    }

    pub fn zero() -> Self {
        Self::exact(ExactRational::zero())
    }

    /// The interval `[lo, hi]`; the bounds are swapped if given backwards.
    pub fn from_bounds(lo: ExactRational, hi: ExactRational) -> Self {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let two = rational::int(2);
        BoundedReal {
            mid: (&lo + &hi) / &two,
            rad: (hi - lo) / two,
        }
    }

    pub fn mid(&self) -> &ExactRational {
        &self.mid
    }

    pub fn rad(&self) -> &ExactRational {
        &self.rad
    }

    pub fn lo(&self) -> ExactRational {
        &self.mid - &self.rad
    }

    pub fn hi(&self) -> ExactRational {
        &self.mid + &self.rad
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    pub fn contains(&self, x: &ExactRational) -> bool {
        (x - &self.mid).abs() <= self.rad
    }

    pub fn contains_enclosure(&self, other: &BoundedReal) -> bool {
        self.lo() <= other.lo() && other.hi() <= self.hi()
    }

    pub fn intersects(&self, other: &BoundedReal) -> bool {
        (&self.mid - &other.mid).abs() <= &self.rad + &other.rad
    }

    pub fn abs(&self) -> BoundedReal {
        let lo = self.lo();
        let hi = self.hi();
        if !lo.is_negative() {
            self.clone()
        } else if !hi.is_positive() {
            -self.clone()
        } else {
            let top = if -&lo > hi { -lo } else { hi };
            BoundedReal::from_bounds(ExactRational::zero(), top)
        }
    }

    pub fn scale(&self, k: &ExactRational) -> BoundedReal {
        BoundedReal {
            mid: &self.mid * k,
            rad: &self.rad * k.abs(),
        }
    }

    /// Enclosure of `1/x`; fails when the interval touches zero.
    pub fn recip(&self) -> Result<BoundedReal> {
        let lo = self.lo();
        let hi = self.hi();
        if !lo.is_positive() && !hi.is_negative() {
            return Err(Error::OutOfRange(
                "reciprocal of an enclosure containing 0".into(),
            ));
        }
        Ok(BoundedReal::from_bounds(hi.recip(), lo.recip()))
    }

    /// Widens to an enclosure whose midpoint and radius are multiples of
    /// `2^-bits`.
    pub fn rounded(&self, bits: u32) -> BoundedReal {
        let scale = BigInt::from(1) << bits as usize;
        let scaled = &self.mid * ExactRational::from_integer(scale);
        let k = scaled.round();
        let new_mid = rational::dyadic(k.to_integer(), bits);
        let err = (&self.mid - &new_mid).abs();
        let new_rad = rational::dyadic(rational::ceil_scaled(&(&self.rad + err), bits), bits);
        BoundedReal {
            mid: new_mid,
            rad: new_rad,
        }
    }

    pub fn mid_f64(&self) -> f64 {
        rational::to_f64(&self.mid)
    }

    pub fn rad_f64(&self) -> f64 {
        rational::to_f64(&self.rad)
    }
}

impl fmt::Display for BoundedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.15e} ± {:.3e}", self.mid_f64(), self.rad_f64())
    }
}

impl Add for &BoundedReal {
    type Output = BoundedReal;
    fn add(self, o: &BoundedReal) -> BoundedReal {
        BoundedReal {
            mid: &self.mid + &o.mid,
            rad: &self.rad + &o.rad,
        }
    }
}

impl Sub for &BoundedReal {
    type Output = BoundedReal;
    fn sub(self, o: &BoundedReal) -> BoundedReal {
        BoundedReal {
            mid: &self.mid - &o.mid,
            rad: &self.rad + &o.rad,
        }
    }
}

impl Mul for &BoundedReal {
    type Output = BoundedReal;
    fn mul(self, o: &BoundedReal) -> BoundedReal {
        BoundedReal {
            mid: &self.mid * &o.mid,
            rad: self.mid.abs() * &o.rad + o.mid.abs() * &self.rad + &self.rad * &o.rad,
        }
    }
}

impl Neg for BoundedReal {
    type Output = BoundedReal;
    fn neg(self) -> BoundedReal {
        BoundedReal {
            mid: -self.mid,
            rad: self.rad,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for BoundedReal {
            type Output = BoundedReal;
            fn $m(self, o: BoundedReal) -> BoundedReal {
                (&self).$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl std::iter::Sum for BoundedReal {
    fn sum<I: Iterator<Item = BoundedReal>>(iter: I) -> BoundedReal {
        iter.fold(BoundedReal::zero(), |a, b| &a + &b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::*;

    fn arb_rat() -> impl Strategy<Value = ExactRational> {
        (-1000i64..1000, 1i64..200).prop_map(|(n, d)| rat(n, d))
    }

    /// An enclosure together with an exact value it contains.
    fn arb_enclosure() -> impl Strategy<Value = (BoundedReal, ExactRational)> {
        (arb_rat(), 0i64..50, 1i64..50, -100i64..=100).prop_map(|(m, rn, rd, t)| {
            let r = rat(rn, rd);
            let shadow = &m + &r * rat(t, 100);
            (BoundedReal::new(m, r), shadow)
        })
    }

    proptest! {
        #[test]
        fn arithmetic_encloses_exact_shadows((a, x) in arb_enclosure(), (b, y) in arb_enclosure(), k in arb_rat()) {
            prop_assert!(a.contains(&x));
            prop_assert!((&a + &b).contains(&(&x + &y)));
            prop_assert!((&a - &b).contains(&(&x - &y)));
            prop_assert!((&a * &b).contains(&(&x * &y)));
            prop_assert!(a.scale(&k).contains(&(&x * &k)));
            prop_assert!(a.abs().contains(&x.abs()));
            prop_assert!((-a.clone()).contains(&-x.clone()));
            if let Ok(inv) = a.recip() {
                prop_assert!(inv.contains(&x.recip()));
            }
            let r = a.rounded(20);
            prop_assert!(r.contains(&x));
            prop_assert!(r.contains_enclosure(&a));
        }
    }

    #[test]
    fn recip_rejects_zero() {
        let a = BoundedReal::new(rat(1, 10), rat(1, 5));
        assert!(a.recip().is_err());
    }

    #[test]
    fn from_bounds_orders() {
        let a = BoundedReal::from_bounds(rat(3, 1), rat(1, 1));
        assert_eq!(a.lo(), rat(1, 1));
        assert_eq!(a.hi(), rat(3, 1));
    }

    #[test]
    fn json_form() {
        let a = BoundedReal::new(rat(1, 3), rat(1, 100));
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"mid":"1/3","rad":"1/100"}"#);
        let back: BoundedReal = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
    }
}
