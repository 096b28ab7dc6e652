//! Exact decimal numbers.
//!
//! Batch-normalisation parameters and reward coefficients travel as decimal
//! strings so that no binary floating-point rounding ever enters the bias or
//! weight computations.

use std::{fmt, str::FromStr};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A decimal number `mantissa / 10^scale`, kept in normal form (no trailing
/// zeros in the fraction, zero has scale 0).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decimal {
    mantissa: BigInt,
    scale: u32,
}

impl Decimal {
    pub fn zero() -> Self {
        Decimal {
            mantissa: BigInt::zero(),
            scale: 0,
        }
    }

    pub fn from_int(v: i64) -> Self {
        Decimal {
            mantissa: BigInt::from(v),
            scale: 0,
        }
    }

    /// `mantissa * 10^exp10`, exp10 may be negative.
    pub fn from_scaled(mantissa: i64, exp10: i32) -> Self {
        if exp10 >= 0 {
            Self::normalized(BigInt::from(mantissa) * pow10(exp10 as u32), 0)
        } else {
            Self::normalized(BigInt::from(mantissa), exp10.unsigned_abs())
        }
    }

    fn normalized(mut mantissa: BigInt, mut scale: u32) -> Self {
        if mantissa.is_zero() {
            return Self::zero();
        }
        let ten = BigInt::from(10);
        while scale > 0 && (&mantissa % &ten).is_zero() {
            mantissa /= &ten;
            scale -= 1;
        }
        Decimal { mantissa, scale }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    /// Number of fractional digits in normal form.
    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.mantissa.clone(), pow10(self.scale))
    }

    /// The value multiplied by `10^pow`, if that is an integer fitting `i64`.
    pub fn scaled_integer(&self, pow: u32) -> Option<i64> {
        if pow < self.scale {
            return None;
        }
        (&self.mantissa * pow10(pow - self.scale)).to_i64()
    }

    pub fn mul(&self, other: &Decimal) -> Decimal {
        Self::normalized(&self.mantissa * &other.mantissa, self.scale + other.scale)
    }
}

pub(crate) fn pow10(exp: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), exp as usize)
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self.mantissa.abs().to_string();
        let sign = if self.mantissa.is_negative() { "-" } else { "" };
        let scale = self.scale as usize;
        if scale == 0 {
            return write!(f, "{sign}{digits}");
        }
        let padded = if digits.len() <= scale {
            format!("{}{}", "0".repeat(scale + 1 - digits.len()), digits)
        } else {
            digits
        };
        let (int, frac) = padded.split_at(padded.len() - scale);
        write!(f, "{sign}{int}.{frac}")
    }
}

impl FromStr for Decimal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Format(format!("`{s}` is not a decimal number"));
        let t = s.trim();
        let (body, exp) = match t.find(['e', 'E']) {
            Some(pos) => {
                let e: i32 = t[pos + 1..].parse().map_err(|_| bad())?;
                (&t[..pos], e)
            }
            None => (t, 0),
        };
        let (negative, unsigned) = match body.as_bytes().first() {
            Some(b'-') => (true, &body[1..]),
            Some(b'+') => (false, &body[1..]),
            _ => (false, body),
        };
        let (int, frac) = match unsigned.split_once('.') {
            Some((i, f)) => (i, f),
            None => (unsigned, ""),
        };
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int}{frac}");
        let mut mantissa: BigInt = digits.parse().map_err(|_| bad())?;
        if negative {
            mantissa = -mantissa;
        }
        let scale = frac.len() as i64 - exp as i64;
        if scale >= 0 {
            let scale = u32::try_from(scale).map_err(|_| bad())?;
            Ok(Self::normalized(mantissa, scale))
        } else {
            let up = u32::try_from(-scale).map_err(|_| bad())?;
            Ok(Self::normalized(mantissa * pow10(up), 0))
        }
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    #[test]
    fn parses_and_normalizes() {
        assert_eq!(d("0.50").to_string(), "0.5");
        assert_eq!(d("-0.05").to_string(), "-0.05");
        assert_eq!(d("+3").to_string(), "3");
        assert_eq!(d("1e-3").to_string(), "0.001");
        assert_eq!(d("2.5E2").to_string(), "250");
        assert_eq!(d("-0.0").to_string(), "0");
        assert_eq!(d(".25").to_string(), "0.25");
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "-", "1.2.3", "abc", "1e", "0x10", "1 2"] {
            assert!(s.parse::<Decimal>().is_err(), "{s}");
        }
    }

    #[test]
    fn scaled_integers() {
        assert_eq!(d("-1.25").scaled_integer(2), Some(-125));
        assert_eq!(d("-1.25").scaled_integer(1), None);
        assert_eq!(d("7").scaled_integer(0), Some(7));
        assert_eq!(Decimal::from_scaled(3, -2), d("0.03"));
        assert_eq!(Decimal::from_scaled(3, 2), d("300"));
    }
}
