//! Exact non-negative rational time.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Signed exact rational, used for offsets that may go negative.
pub type Rational = Rational64;

/// A non-negative exact rational amount of time.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Duration(Rational);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeError {
    #[error("negative duration {0}")]
    Negative(String),
    #[error("malformed number `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

impl Duration {
    pub const ZERO: Duration = Duration(Rational::new_raw(0, 1));

    pub fn new(value: Rational) -> Result<Self, TimeError> {
        if value.is_negative() {
            Err(TimeError::Negative(value.to_string()))
        } else {
            Ok(Duration(value))
        }
    }

    /// Panics on negative input; for literals known to be valid.
    pub fn from_ratio(numer: i64, denom: i64) -> Self {
        Duration::new(Rational::new(numer, denom)).expect("non-negative duration literal")
    }

    pub fn from_int(n: i64) -> Self {
        Duration::from_ratio(n, 1)
    }

    pub fn value(self) -> Rational {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0.is_zero()
    }

    pub fn checked_sub(self, other: Duration) -> Option<Duration> {
        Duration::new(self.0 - other.0).ok()
    }

    pub fn saturating_sub(self, other: Duration) -> Duration {
        self.checked_sub(other).unwrap_or(Duration::ZERO)
    }

    /// Signed difference `self - other`.
    pub fn diff(self, other: Duration) -> Rational {
        self.0 - other.0
    }

    pub fn half(self) -> Duration {
        Duration(self.0 / 2)
    }

    pub fn mul_int(self, k: i64) -> Duration {
        Duration::new(self.0 * k).expect("scaling by a non-negative factor")
    }

    pub fn div_int(self, k: i64) -> Duration {
        assert!(k > 0, "division by a non-positive factor");
        Duration(self.0 / k)
    }

    /// True when `self` is an integer multiple of `grid`.
    pub fn is_multiple_of(self, grid: Duration) -> bool {
        if grid.is_zero() {
            return self.is_zero();
        }
        (self.0 / grid.0).is_integer()
    }

    /// Largest multiple of `grid` not exceeding `self`.
    pub fn floor_to(self, grid: Duration) -> Duration {
        let k = (self.0 / grid.0).floor();
        Duration(k * grid.0)
    }

    /// Greatest common divisor of two rationals: gcd(a/b, c/d) = gcd(a,c)/lcm(b,d).
    pub fn gcd(self, other: Duration) -> Duration {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let n = self.0.numer().gcd(other.0.numer());
        let d = self.0.denom().lcm(other.0.denom());
        Duration(Rational::new(n, d))
    }
}

impl Add for Duration {
    type Output = Duration;
    fn add(self, rhs: Duration) -> Duration {
        Duration(self.0 + rhs.0)
    }
}

impl AddAssign for Duration {
    fn add_assign(&mut self, rhs: Duration) {
        self.0 += rhs.0;
    }
}

impl PartialEq<Rational> for Duration {
    fn eq(&self, other: &Rational) -> bool {
        self.0 == *other
    }
}

impl PartialOrd<Rational> for Duration {
    fn partial_cmp(&self, other: &Rational) -> Option<Ordering> {
        self.0.partial_cmp(other)
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Parses `7`, `3/4`, or `0.125` into an exact rational.
impl FromStr for Duration {
    type Err = TimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || TimeError::Malformed(s.to_string());
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if let Some((n, d)) = s.split_once('/') {
            if !digits(n) || !digits(d) {
                return Err(malformed());
            }
            let n: i64 = n.parse().map_err(|_| malformed())?;
            let d: i64 = d.parse().map_err(|_| malformed())?;
            if d == 0 {
                return Err(TimeError::ZeroDenominator(s.to_string()));
            }
            return Ok(Duration(Rational::new(n, d)));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if !digits(int) || !digits(frac) || frac.len() > 15 {
                return Err(malformed());
            }
            let scale = 10i64.pow(frac.len() as u32);
            let i: i64 = int.parse().map_err(|_| malformed())?;
            let f: i64 = frac.parse().map_err(|_| malformed())?;
            let numer = i
                .checked_mul(scale)
                .and_then(|v| v.checked_add(f))
                .ok_or_else(malformed)?;
            return Ok(Duration(Rational::new(numer, scale)));
        }
        if !digits(s) {
            return Err(malformed());
        }
        Ok(Duration(Rational::from_integer(s.parse().map_err(|_| malformed())?)))
    }
}

impl Serialize for Duration {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Duration {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Renders a signed rational as `p/q` (or `p`).
pub fn fmt_rational(r: Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_literals_are_exact() {
        let a: Duration = "0.1".parse().unwrap();
        let b: Duration = "0.2".parse().unwrap();
        let c: Duration = "0.3".parse().unwrap();
        assert_eq!(a + b, c);
    }

    #[test]
    fn fraction_and_integer_forms() {
        assert_eq!("3/6".parse::<Duration>().unwrap(), Duration::from_ratio(1, 2));
        assert_eq!("12".parse::<Duration>().unwrap(), Duration::from_int(12));
        assert_eq!(Duration::from_ratio(5, 2).to_string(), "5/2");
        assert!("1/0".parse::<Duration>().is_err());
        assert!("-1".parse::<Duration>().is_err());
        assert!("1.".parse::<Duration>().is_err());
    }

    #[test]
    fn gcd_of_rationals() {
        let a = Duration::from_ratio(1, 2);
        let b = Duration::from_ratio(1, 3);
        assert_eq!(a.gcd(b), Duration::from_ratio(1, 6));
        assert_eq!(Duration::from_int(4).gcd(Duration::from_int(6)), Duration::from_int(2));
        assert_eq!(Duration::ZERO.gcd(Duration::from_int(3)), Duration::from_int(3));
    }

    #[test]
    fn subtraction_saturates() {
        let a = Duration::from_int(2);
        let b = Duration::from_int(3);
        assert_eq!(a.checked_sub(b), None);
        assert_eq!(a.saturating_sub(b), Duration::ZERO);
        assert_eq!(b.checked_sub(a), Some(Duration::from_int(1)));
    }
}
