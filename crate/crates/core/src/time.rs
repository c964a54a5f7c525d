//! Exact decimal time stamps.
//!
//! The process axioms `U(t,s)∘U(s,τ) = U(t,τ)` and `U_σ(t+s, τ+s) = U_{T(s)σ}(t, τ)`
//! only hold bit-for-bit if every forcing evaluation sees the same argument
//! regardless of how the shifts were grouped. Float addition is not
//! associative, so times and symbol shifts are carried as integers counting
//! 10⁻¹⁸ time units and only rounded to `f64` at the point of evaluation.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const TICKS_PER_UNIT: i128 = 1_000_000_000_000_000_000;

/// A point on the time axis with 18 exact decimal digits after the point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Time(i128);

impl Time {
    pub const ZERO: Time = Time(0);

    pub const fn from_ticks(ticks: i128) -> Self {
        Time(ticks)
    }

    pub const fn ticks(self) -> i128 {
        self.0
    }

    /// Conversion from a float through its shortest round-trip decimal form,
    /// so `0.1` maps to exactly one tenth. Digits below one tick are rounded
    /// half away from zero. Returns `None` for non-finite input or
    /// magnitudes beyond ~1.7e20.
    pub fn try_from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        // "d.ddddde±x" with the shortest digit string that round-trips
        let sci = format!("{:e}", x.abs());
        let (mantissa, exp) = sci.split_once('e')?;
        let exp: i32 = exp.parse().ok()?;
        let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
        let value: i128 = digits.parse().ok()?;
        // x = value * 10^(exp - (len - 1)); ticks = x * 10^18
        let scale = exp - (digits.len() as i32 - 1) + 18;
        let magnitude = if scale >= 0 {
            value.checked_mul(10i128.checked_pow(scale as u32)?)?
        } else if scale < -38 {
            0
        } else {
            let div = 10i128.pow((-scale) as u32);
            let (q, r) = (value / div, value % div);
            if 2 * r >= div {
                q + 1
            } else {
                q
            }
        };
        Some(Time(if x < 0.0 { -magnitude } else { magnitude }))
    }

    /// Panics on non-finite or out-of-range input.
    pub fn from_f64(x: f64) -> Self {
        Self::try_from_f64(x).unwrap_or_else(|| panic!("time value {x} is not representable"))
    }

    pub fn to_f64(self) -> f64 {
        let whole = self.0 / TICKS_PER_UNIT;
        let frac = self.0 % TICKS_PER_UNIT;
        whole as f64 + frac as f64 * 1e-18
    }

    /// `self / step` as a float, computed on the exact tick counts.
    pub fn ratio(self, step: Time) -> f64 {
        let q = self.0 / step.0;
        let r = self.0 % step.0;
        q as f64 + r as f64 / step.0 as f64
    }

    pub fn half(self) -> Time {
        Time(self.0 / 2)
    }
}

impl From<f64> for Time {
    fn from(x: f64) -> Self {
        Time::from_f64(x)
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl AddAssign for Time {
    fn add_assign(&mut self, rhs: Time) {
        self.0 += rhs.0;
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

impl Neg for Time {
    type Output = Time;
    fn neg(self) -> Time {
        Time(-self.0)
    }
}

impl Mul<i64> for Time {
    type Output = Time;
    fn mul(self, k: i64) -> Time {
        Time(self.0 * k as i128)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        Time::try_from_f64(x).ok_or_else(|| serde::de::Error::custom("time out of range"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_steps_are_exact() {
        let dt = Time::from_f64(1e-3);
        assert_eq!(dt.ticks(), 1_000_000_000_000_000);
        assert_eq!(dt * 1000, Time::from_f64(1.0));
        assert_eq!(Time::from_f64(5e-4) * 2, dt);
        assert_eq!(Time::from_f64(0.5) * 2, Time::from_f64(1.0));
        assert_eq!(Time::from_f64(0.1).ticks(), 100_000_000_000_000_000);
        assert_eq!(Time::from_f64(0.1) + Time::from_f64(0.2), Time::from_f64(0.3));
        assert_eq!(Time::from_f64(-2.5e-3).ticks(), -2_500_000_000_000_000);
        assert_eq!(Time::from_f64(1e-20).ticks(), 0);
    }

    #[test]
    fn round_trip_is_close() {
        for &x in &[0.0, 1.0, -2.5, std::f64::consts::PI, 1e-7, 12345.678] {
            let t = Time::from_f64(x);
            assert!((t.to_f64() - x).abs() <= 1e-15 * x.abs().max(1.0), "{x}");
        }
    }

    #[test]
    fn addition_is_associative() {
        let a = Time::from_f64(std::f64::consts::PI);
        let b = Time::from_f64(0.1);
        let c = Time::from_f64(-7.3);
        assert_eq!((a + b) + c, a + (b + c));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Time::try_from_f64(f64::NAN).is_none());
        assert!(Time::try_from_f64(f64::INFINITY).is_none());
        assert!(Time::try_from_f64(1e30).is_none());
    }

    #[test]
    fn ratio_counts_steps() {
        let dt = Time::from_f64(1e-3);
        assert_eq!(Time::from_f64(2.0).ratio(dt), 2000.0);
    }
}
