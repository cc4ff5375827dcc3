//! Scalar abstraction shared by the geometry and threshold code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::TAU();
    let mut r = a % two_pi;
    if r <= -T::PI() {
        r = r + two_pi;
    } else if r > T::PI() {
        r = r - two_pi;
    }
    r
}

/// Wrap an angle into `[0, 2pi)`.
pub fn mod_two_pi<T: Real>(a: T) -> T {
    let two_pi = T::TAU();
    let r = a % two_pi;
    let r = if r < T::zero() { r + two_pi } else { r };
    // `r + 2pi` can round up to exactly 2pi for tiny negative inputs.
    if r >= two_pi {
        T::zero()
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_keeps_half_open_interval() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.5_f32) - 0.5).abs() < 1e-7);
    }

    #[test]
    fn mod_two_pi_is_non_negative() {
        assert!(mod_two_pi(-1e-300_f64) >= 0.0);
        assert_eq!(mod_two_pi(2.0 * PI), 0.0);
    }
}
