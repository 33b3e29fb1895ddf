//! Gaussian-rational scalars: `a + b·i` with exact rational `a`, `b`.
//!
//! This is the field element for everything in the crate. Real inputs are the
//! `im = 0` subcase. The `Ord` implementation is the lexicographic order on
//! `(re, im)`; it is not compatible with the field structure and exists only
//! to give deterministic argmax tie-breaking and ordered map keys.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::rat::{ParseRatError, Rat};

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Scalar {
    re: Rat,
    im: Rat,
}

impl Scalar {
    pub fn new(re: Rat, im: Rat) -> Scalar {
        Scalar { re, im }
    }

    pub fn real(re: Rat) -> Scalar {
        Scalar { re, im: Rat::zero() }
    }

    pub fn from_int(n: i64) -> Scalar {
        Scalar::real(Rat::from_int(n))
    }

    pub fn from_ratio(num: i64, den: i64) -> Scalar {
        Scalar::real(Rat::new(num, den))
    }

    pub fn zero() -> Scalar {
        Scalar::from_int(0)
    }

    pub fn one() -> Scalar {
        Scalar::from_int(1)
    }

    /// The imaginary unit.
    pub fn i() -> Scalar {
        Scalar::new(Rat::zero(), Rat::one())
    }

    pub fn re(&self) -> &Rat {
        &self.re
    }

    pub fn im(&self) -> &Rat {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// Integer value for real integers that fit `i64`.
    pub fn as_i64(&self) -> Option<i64> {
        if self.im.is_zero() {
            self.re.as_i64()
        } else {
            None
        }
    }

    pub fn recip(&self) -> Scalar {
        assert!(!self.is_zero(), "division by zero");
        // 1/(a+bi) = (a - bi) / (a^2 + b^2)
        let norm = &(&self.re * &self.re) + &(&self.im * &self.im);
        Scalar {
            re: &self.re / &norm,
            im: &(-&self.im) / &norm,
        }
    }

    pub fn pow(&self, exp: u32) -> Scalar {
        let mut acc = Scalar::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Scalar {
        Scalar::from_int(n)
    }
}

impl From<Rat> for Scalar {
    fn from(r: Rat) -> Scalar {
        Scalar::real(r)
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        Scalar {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        Scalar {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        // (a+bi)(c+di) = (ac - bd) + (ad + bc)i
        Scalar {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

impl Div for &Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        self * &rhs.recip()
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            re: -&self.re,
            im: -&self.im,
        }
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Scalar) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Scalar) -> Ordering {
        self.re.cmp(&other.re).then_with(|| self.im.cmp(&other.im))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "{}{}i", self.re, self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl FromStr for Scalar {
    type Err = ParseRatError;

    /// Parses real scalars ("p/q"). Complex values travel as `{re, im}` JSON
    /// objects, not strings.
    fn from_str(s: &str) -> Result<Scalar, ParseRatError> {
        Ok(Scalar::real(s.parse()?))
    }
}

// JSON form: "p/q" for real values, {"re": "p/q", "im": "r/s"} otherwise.
impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_real() {
            serializer.serialize_str(&self.re.to_string())
        } else {
            let mut st = serializer.serialize_struct("Scalar", 2)?;
            st.serialize_field("re", &self.re.to_string())?;
            st.serialize_field("im", &self.im.to_string())?;
            st.end()
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Scalar, D::Error> {
        struct ScalarVisitor;

        impl<'de> Visitor<'de> for ScalarVisitor {
            type Value = Scalar;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational string \"p/q\", an integer, or {\"re\", \"im\"}")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Scalar, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Scalar, E> {
                Ok(Scalar::from_int(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Scalar, E> {
                i64::try_from(v)
                    .map(Scalar::from_int)
                    .map_err(|_| E::custom("integer out of range"))
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Scalar, A::Error> {
                let mut re: Option<String> = None;
                let mut im: Option<String> = None;
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "re" => re = Some(map.next_value()?),
                        "im" => im = Some(map.next_value()?),
                        other => return Err(de::Error::unknown_field(other, &["re", "im"])),
                    }
                }
                let re = re.unwrap_or_else(|| "0".to_string());
                let im = im.unwrap_or_else(|| "0".to_string());
                Ok(Scalar::new(
                    re.parse().map_err(de::Error::custom)?,
                    im.parse().map_err(de::Error::custom)?,
                ))
            }
        }

        deserializer.deserialize_any(ScalarVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    #[test]
    fn complex_arithmetic() {
        let i = Scalar::i();
        assert_eq!(&i * &i, Scalar::from_int(-1));
        let z = Scalar::new(rat(1, 2), rat(-1, 3));
        let w = &z * &z.recip();
        assert!(w.is_one());
    }

    #[test]
    fn division() {
        let a = Scalar::new(rat(1, 1), rat(1, 1));
        let b = Scalar::new(rat(0, 1), rat(1, 1));
        // (1+i)/i = 1 - i
        assert_eq!(&a / &b, Scalar::new(rat(1, 1), rat(-1, 1)));
    }

    #[test]
    fn lexicographic_order() {
        assert!(Scalar::from_int(0) < Scalar::i());
        assert!(Scalar::new(rat(-1, 1), rat(5, 1)) < Scalar::zero());
    }

    #[test]
    fn display_forms() {
        assert_eq!(Scalar::from_ratio(-3, 4).to_string(), "-3/4");
        assert_eq!(Scalar::i().to_string(), "1i");
        assert_eq!(Scalar::new(rat(1, 2), rat(-2, 3)).to_string(), "1/2-2/3i");
    }
}
