//! Exact points of the unit circle `R/Z` stored as 128-bit binary fractions.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Sub};

const TWO_POW_128: f64 = 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

/// A point `t` of the circle, represented by `floor(t * 2^128)`.
///
/// Addition wraps modulo one, so rotations accumulate without drift.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Circle(pub u128);

impl Circle {
    pub const ZERO: Circle = Circle(0);
    pub const HALF: Circle = Circle(1u128 << 127);

    /// Nearest fixed-point value to `t mod 1`.
    pub fn from_f64(t: f64) -> Circle {
        let f = t - t.floor();
        let scaled = f * TWO_POW_128;
        if scaled >= TWO_POW_128 {
            Circle(0)
        } else {
            Circle(scaled as u128)
        }
    }

    /// Value in `[0, 1)`, truncated to 53 significant bits (never rounds up to 1).
    #[inline]
    pub fn to_f64(self) -> f64 {
        let v = self.0;
        if v == 0 {
            return 0.0;
        }
        let lz = v.leading_zeros() as u64;
        let mantissa = ((v << lz) >> 75) as u64 & ((1u64 << 52) - 1);
        f64::from_bits(((1022 - lz) << 52) | mantissa)
    }

    /// `n * self` on the circle.
    pub fn times(self, n: u128) -> Circle {
        Circle(self.0.wrapping_mul(n))
    }

    /// Circle distance `min(|s - t|, 1 - |s - t|)` as an exact fixed-point value.
    #[inline]
    pub fn distance_fixed(self, other: Circle) -> u128 {
        (self.0.wrapping_sub(other.0) as i128).unsigned_abs()
    }

    #[inline]
    pub fn distance(self, other: Circle) -> f64 {
        Circle(self.distance_fixed(other)).to_f64()
    }
}

impl Add for Circle {
    type Output = Circle;
    fn add(self, rhs: Circle) -> Circle {
        Circle(self.0.wrapping_add(rhs.0))
    }
}

impl Sub for Circle {
    type Output = Circle;
    fn sub(self, rhs: Circle) -> Circle {
        Circle(self.0.wrapping_sub(rhs.0))
    }
}

/// Converts a radius in `[0, 1/2]` to fixed point, rounding down.
pub(crate) fn radius_fixed(r: f64) -> u128 {
    if r >= 0.5 {
        1u128 << 127
    } else if r <= 0.0 {
        0
    } else {
        (r * TWO_POW_128) as u128
    }
}

#[inline]
pub(crate) fn u128_to_unit(v: u128) -> f64 {
    Circle(v).to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_wraps() {
        let a = Circle::from_f64(0.95);
        let b = Circle::from_f64(0.05);
        assert!((a.distance(b) - 0.1).abs() < 1e-15);
        assert_eq!(a.distance_fixed(b), b.distance_fixed(a));
    }

    #[test]
    fn times_is_repeated_addition() {
        let t = Circle::from_f64(0.618_033_988_749_894_9);
        let mut acc = Circle::ZERO;
        for _ in 0..1000 {
            acc = acc + t;
        }
        assert_eq!(acc, t.times(1000));
    }

    #[test]
    fn conversion_truncates() {
        assert_eq!(Circle(1u128 << 127).to_f64(), 0.5);
        assert_eq!(Circle(1).to_f64(), 2f64.powi(-128));
        assert!(Circle(u128::MAX).to_f64() < 1.0);
        let v: u128 = 0x1234_5678_9abc_def0_1122_3344_5566_7788;
        let exact = v as f64 / TWO_POW_128;
        assert!((Circle(v).to_f64() - exact).abs() <= f64::EPSILON * exact);
    }

    #[test]
    fn round_trip() {
        for &x in &[0.0, 0.25, 0.5, 0.123456789, 0.999999] {
            assert!((Circle::from_f64(x).to_f64() - x).abs() < 1e-16);
        }
    }
}
