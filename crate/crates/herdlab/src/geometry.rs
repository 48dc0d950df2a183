//! Planar vector math and angle conventions shared by every module.
//!
//! Angles are radians, measured counter-clockwise from the +X axis.
//! Headings are stored normalized to `[0, 2π)`; angle differences are
//! wrapped into `(-π, π]`.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A 2-D point or vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector pointing along `angle`.
    pub fn from_angle(angle: f64) -> Self {
        Vec2::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Z-component of the 3-D cross product; positive when `other` is to
    /// the left of `self`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Direction of the vector via `atan2`, in `(-π, π]`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Left-hand normal (rotation by +90°).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Unit vector in the same direction; `None` for near-zero vectors.
    pub fn unit(self) -> Option<Vec2> {
        let n = self.norm();
        if n < 1e-12 {
            None
        } else {
            Some(self / n)
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x / rhs, self.y / rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Normalize an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let a = theta.rem_euclid(TAU);
    // rem_euclid of a tiny negative number can round up to exactly 2π.
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Wrap an angle difference into `(-π, π]`.
pub fn wrap_to_pi(theta: f64) -> f64 {
    let a = normalize_angle(theta);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    p.dist(project_onto_segment(p, a, b))
}

/// Closest point to `p` on the segment `[a, b]`.
pub fn project_onto_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq < 1e-24 {
        return a;
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    a + ab * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_maps_pi_to_pi() {
        assert_eq!(wrap_to_pi(PI), PI);
        assert_eq!(wrap_to_pi(-PI), PI);
        assert!((wrap_to_pi(3.0 * PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn normalize_handles_tiny_negative() {
        let a = normalize_angle(-1e-18);
        assert!((0.0..TAU).contains(&a));
    }

    proptest! {
        #[test]
        fn normalize_range(theta in -100.0f64..100.0) {
            let a = normalize_angle(theta);
            prop_assert!((0.0..TAU).contains(&a));
        }

        #[test]
        fn wrap_range(theta in -100.0f64..100.0) {
            let w = wrap_to_pi(theta);
            prop_assert!(w > -PI && w <= PI);
        }

        #[test]
        fn wrap_is_congruent(theta in -50.0f64..50.0) {
            let w = wrap_to_pi(theta);
            let d = (theta - w).rem_euclid(TAU);
            prop_assert!(d < 1e-9 || (TAU - d) < 1e-9);
        }

        #[test]
        fn segment_projection_is_closest(px in -10.0f64..10.0, py in -10.0f64..10.0,
                                         t in 0.0f64..1.0) {
            let a = Vec2::new(-3.0, 1.0);
            let b = Vec2::new(4.0, -2.0);
            let p = Vec2::new(px, py);
            let d = point_segment_distance(p, a, b);
            let on_seg = a + (b - a) * t;
            prop_assert!(d <= p.dist(on_seg) + 1e-12);
        }
    }
}
