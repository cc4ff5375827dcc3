use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::scalar::{wrap_angle, Real};

/// Planar pose. `theta` is kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose<T> {
    pub x: T,
    pub y: T,
    pub theta: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }
}

impl<T: Real> Pose<T> {
    pub fn new(x: T, y: T, theta: T) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn position(self) -> Point<T> {
        Point::new(self.x, self.y)
    }

    /// Express a point given in this pose's frame in the parent frame.
    pub fn transform_point(self, p: Point<T>) -> Point<T> {
        let (s, c) = self.theta.sin_cos();
        Point::new(self.x + c * p.x - s * p.y, self.y + s * p.x + c * p.y)
    }

    /// Express a parent-frame point in this pose's frame.
    pub fn inverse_transform_point(self, p: Point<T>) -> Point<T> {
        let (s, c) = self.theta.sin_cos();
        let dx = p.x - self.x;
        let dy = p.y - self.y;
        Point::new(c * dx + s * dy, -s * dx + c * dy)
    }

    /// `self ⊕ other`: `other` is relative to `self`.
    pub fn compose(self, other: Pose<T>) -> Pose<T> {
        let p = self.transform_point(other.position());
        Pose::new(p.x, p.y, self.theta + other.theta)
    }

    pub fn inverse(self) -> Pose<T> {
        let (s, c) = self.theta.sin_cos();
        Pose::new(
            -(c * self.x + s * self.y),
            s * self.x - c * self.y,
            -self.theta,
        )
    }

    /// `other` expressed relative to `self`.
    pub fn between(self, other: Pose<T>) -> Pose<T> {
        self.inverse().compose(other)
    }

    pub fn distance(self, other: Pose<T>) -> T {
        self.position().distance(other.position())
    }

    pub fn heading_error(self, other: Pose<T>) -> T {
        wrap_angle(self.theta - other.theta).abs()
    }

    /// Move `distance` along the current heading.
    pub fn advanced(self, distance: T) -> Pose<T> {
        let (s, c) = self.theta.sin_cos();
        Pose::new(self.x + distance * c, self.y + distance * s, self.theta)
    }

    pub fn cast<U: Real>(self) -> Pose<U> {
        Pose::new(
            U::lit(self.x.to_f64_lossy()),
            U::lit(self.y.to_f64_lossy()),
            U::lit(self.theta.to_f64_lossy()),
        )
    }
}

impl<T: Real> Mul for Pose<T> {
    type Output = Pose<T>;

    fn mul(self, rhs: Pose<T>) -> Pose<T> {
        self.compose(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn constructor_normalizes() {
        assert!((Pose::new(0.0, 0.0, 3.0 * PI).theta - PI).abs() < 1e-12);
        assert_eq!(Pose::new(0.0f64, 0.0, -PI).theta, PI);
    }

    proptest! {
        #[test]
        fn compose_with_inverse_is_identity(
            x in -10.0..10.0f64, y in -10.0..10.0f64, t in -PI..PI,
            px in -5.0..5.0f64, py in -5.0..5.0f64,
        ) {
            let a = Pose::new(x, y, t);
            let id = a.compose(a.inverse());
            prop_assert!(id.x.abs() < 1e-9 && id.y.abs() < 1e-9 && id.theta.abs() < 1e-9);
            let p = Point::new(px, py);
            let back = a.inverse_transform_point(a.transform_point(p));
            prop_assert!(back.distance(p) < 1e-9);
        }
    }
}
