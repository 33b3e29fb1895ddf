//! Exact rational arithmetic.
//!
//! [`Rat`] is an arbitrary-precision rational that keeps small values in a
//! machine-word representation and transparently promotes to
//! [`num_rational::BigRational`] on overflow. Every constructor and operation
//! restores the canonical form: denominator positive, fraction reduced, and
//! values that fit in `i64` always stored in the small representation (so
//! structural equality is value equality).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

#[derive(Clone, Debug)]
pub enum Rat {
    /// `num / den` with `den > 0` and `gcd(|num|, den) = 1`.
    Small(i64, i64),
    /// Canonical reduced big rational that does not fit the small form.
    Big(Box<BigRational>),
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Reduce `num/den` (den != 0) over i128 and return the canonical pair.
fn reduce_i128(mut num: i128, mut den: i128) -> (i128, i128) {
    debug_assert!(den != 0);
    if den < 0 {
        num = -num;
        den = -den;
    }
    if num == 0 {
        return (0, 1);
    }
    let g = gcd_u128(num.unsigned_abs(), den.unsigned_abs()) as i128;
    (num / g, den / g)
}

fn fits(num: i128, den: i128) -> bool {
    num >= i64::MIN as i128 && num <= i64::MAX as i128 && den <= i64::MAX as i128
}

impl Rat {
    pub fn new(num: i64, den: i64) -> Rat {
        assert!(den != 0, "zero denominator");
        let (n, d) = reduce_i128(num as i128, den as i128);
        Rat::Small(n as i64, d as i64)
    }

    fn from_i128(num: i128, den: i128) -> Rat {
        let (n, d) = reduce_i128(num, den);
        if fits(n, d) {
            Rat::Small(n as i64, d as i64)
        } else {
            Rat::Big(Box::new(BigRational::new(BigInt::from(n), BigInt::from(d))))
        }
    }

    pub fn from_big(b: BigRational) -> Rat {
        // BigRational::new already reduces and fixes the denominator sign.
        match (b.numer().to_i64(), b.denom().to_i64()) {
            (Some(n), Some(d)) => Rat::Small(n, d),
            _ => Rat::Big(Box::new(b)),
        }
    }

    pub fn from_int(n: i64) -> Rat {
        Rat::Small(n, 1)
    }

    pub fn zero() -> Rat {
        Rat::Small(0, 1)
    }

    pub fn one() -> Rat {
        Rat::Small(1, 1)
    }

    pub fn to_big(&self) -> BigRational {
        match self {
            Rat::Small(n, d) => BigRational::new(BigInt::from(*n), BigInt::from(*d)),
            Rat::Big(b) => (**b).clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Rat::Small(0, _))
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Rat::Small(1, 1))
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Rat::Small(n, _) => *n < 0,
            Rat::Big(b) => b.is_negative(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match self {
            Rat::Small(_, d) => *d == 1,
            Rat::Big(b) => b.is_integer(),
        }
    }

    /// Integer value when the denominator is 1 and the numerator fits `i64`.
    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Rat::Small(n, 1) => Some(*n),
            _ => None,
        }
    }

    pub fn abs(&self) -> Rat {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Rat {
        assert!(!self.is_zero(), "division by zero");
        match self {
            Rat::Small(n, d) => {
                if *n < 0 {
                    Rat::from_i128(-(*d as i128), -(*n as i128))
                } else {
                    Rat::Small(*d, *n)
                }
            }
            Rat::Big(b) => Rat::from_big(b.recip()),
        }
    }

    pub fn pow(&self, exp: u32) -> Rat {
        let mut acc = Rat::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Rat::Small(n, d) => *n as f64 / *d as f64,
            Rat::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn min(self, other: Rat) -> Rat {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Rat) -> Rat {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Default for Rat {
    fn default() -> Self {
        Rat::zero()
    }
}

macro_rules! small_or_big {
    ($a:expr, $b:expr, $small:expr, $big:expr) => {
        match ($a, $b) {
            (Rat::Small(an, ad), Rat::Small(bn, bd)) => {
                let (an, ad, bn, bd) =
                    (*an as i128, *ad as i128, *bn as i128, *bd as i128);
                $small(an, ad, bn, bd)
            }
            (x, y) => $big(x.to_big(), y.to_big()),
        }
    };
}

impl Add for &Rat {
    type Output = Rat;
    fn add(self, rhs: &Rat) -> Rat {
        small_or_big!(
            self,
            rhs,
            |an: i128, ad: i128, bn: i128, bd: i128| Rat::from_i128(an * bd + bn * ad, ad * bd),
            |x: BigRational, y: BigRational| Rat::from_big(x + y)
        )
    }
}

impl Sub for &Rat {
    type Output = Rat;
    fn sub(self, rhs: &Rat) -> Rat {
        small_or_big!(
            self,
            rhs,
            |an: i128, ad: i128, bn: i128, bd: i128| Rat::from_i128(an * bd - bn * ad, ad * bd),
            |x: BigRational, y: BigRational| Rat::from_big(x - y)
        )
    }
}

impl Mul for &Rat {
    type Output = Rat;
    fn mul(self, rhs: &Rat) -> Rat {
        small_or_big!(
            self,
            rhs,
            |an: i128, ad: i128, bn: i128, bd: i128| Rat::from_i128(an * bn, ad * bd),
            |x: BigRational, y: BigRational| Rat::from_big(x * y)
        )
    }
}

impl Div for &Rat {
    type Output = Rat;
    fn div(self, rhs: &Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        small_or_big!(
            self,
            rhs,
            |an: i128, ad: i128, bn: i128, bd: i128| Rat::from_i128(an * bd, ad * bn),
            |x: BigRational, y: BigRational| Rat::from_big(x / y)
        )
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        match self {
            Rat::Small(n, d) => Rat::from_i128(-(*n as i128), *d as i128),
            Rat::Big(b) => Rat::from_big(-(**b).clone()),
        }
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl $trait for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        -&self
    }
}

impl PartialEq for Rat {
    fn eq(&self, other: &Rat) -> bool {
        // Canonical representation: values fitting i64 are always Small.
        match (self, other) {
            (Rat::Small(an, ad), Rat::Small(bn, bd)) => an == bn && ad == bd,
            (Rat::Big(a), Rat::Big(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Rat {}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Rat) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Rat) -> Ordering {
        match (self, other) {
            (Rat::Small(an, ad), Rat::Small(bn, bd)) => {
                (*an as i128 * *bd as i128).cmp(&(*bn as i128 * *ad as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rat::Small(n, 1) => write!(f, "{n}"),
            Rat::Small(n, d) => write!(f, "{n}/{d}"),
            Rat::Big(b) => {
                if b.is_integer() {
                    write!(f, "{}", b.numer())
                } else {
                    write!(f, "{}/{}", b.numer(), b.denom())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRatError(pub String);

impl fmt::Display for ParseRatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid rational literal: {}", self.0)
    }
}

impl std::error::Error for ParseRatError {}

impl FromStr for Rat {
    type Err = ParseRatError;

    fn from_str(s: &str) -> Result<Rat, ParseRatError> {
        let s = s.trim();
        let bad = || ParseRatError(s.to_string());
        let (num_s, den_s) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let num: BigInt = num_s.parse().map_err(|_| bad())?;
        let den: BigInt = den_s.parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        Ok(Rat::from_big(BigRational::new(num, den)))
    }
}

// JSON form: canonical "p/q" string.
impl serde::Serialize for Rat {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Rat {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand rational constructor.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(num, den)
}

/// Exact test of `lhs <= base^(num/den)` for nonnegative rationals,
/// evaluated as `lhs^den <= base^num` so no real roots are ever taken.
pub fn le_frac_pow(lhs: &Rat, base: &Rat, num: u32, den: u32) -> bool {
    debug_assert!(!lhs.is_negative() && !base.is_negative() && den > 0);
    lhs.pow(den) <= base.pow(num)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms() {
        assert_eq!(Rat::new(2, 4), Rat::new(1, 2));
        assert_eq!(Rat::new(-2, -4), Rat::new(1, 2));
        assert_eq!(Rat::new(2, -4), Rat::new(-1, 2));
        assert_eq!(Rat::new(0, -7), Rat::zero());
    }

    #[test]
    fn arithmetic() {
        let a = rat(1, 2);
        let b = rat(1, 3);
        assert_eq!(&a + &b, rat(5, 6));
        assert_eq!(&a - &b, rat(1, 6));
        assert_eq!(&a * &b, rat(1, 6));
        assert_eq!(&a / &b, rat(3, 2));
        assert_eq!(a.recip(), rat(2, 1));
        assert_eq!(rat(-3, 7).recip(), rat(-7, 3));
    }

    #[test]
    fn promotion_and_demotion() {
        let big = Rat::from_int(i64::MAX);
        let sq = &big * &big;
        assert!(matches!(sq, Rat::Big(_)));
        let back = &sq / &big;
        assert!(matches!(back, Rat::Small(..)));
        assert_eq!(back, big);
    }

    #[test]
    fn ordering() {
        assert!(rat(1, 3) < rat(1, 2));
        assert!(rat(-1, 2) < rat(-1, 3));
        let big = &Rat::from_int(i64::MAX) * &Rat::from_int(2);
        assert!(rat(1, 1) < big);
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("3/4".parse::<Rat>().unwrap(), rat(3, 4));
        assert_eq!("-6/8".parse::<Rat>().unwrap(), rat(-3, 4));
        assert_eq!("5".parse::<Rat>().unwrap(), Rat::from_int(5));
        assert_eq!(rat(-3, 4).to_string(), "-3/4");
        assert_eq!(Rat::from_int(7).to_string(), "7");
        assert!("1/0".parse::<Rat>().is_err());
    }

    #[test]
    fn frac_pow_comparison() {
        // 1/8 <= (1/4)^(3/2) iff (1/8)^2 <= (1/4)^3: 1/64 <= 1/64.
        assert!(le_frac_pow(&rat(1, 8), &rat(1, 4), 3, 2));
        assert!(!le_frac_pow(&rat(1, 7), &rat(1, 4), 3, 2));
    }
}
