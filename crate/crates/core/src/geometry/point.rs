use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A position or displacement in the plane, in arena units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    #[inline]
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Unit vector in the same direction, or `None` when the norm is at most `tol`.
    pub fn normalized(self, tol: f64) -> Option<Point2> {
        let n = self.norm();
        if n <= tol {
            None
        } else {
            Some(self * (1.0 / n))
        }
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Point2 {
    #[inline]
    fn add_assign(&mut self, rhs: Point2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Point2::new(x, y)
    }
}

/// A straight boundary piece between two points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn centroid(&self) -> Point2 {
        self.a.midpoint(self.b)
    }

    pub fn reversed(&self) -> Segment {
        Segment::new(self.b, self.a)
    }

    /// Closest point of the segment to `q`.
    pub fn closest_point(&self, q: Point2) -> Point2 {
        let d = self.b - self.a;
        let len2 = d.norm_squared();
        if len2 == 0.0 {
            return self.a;
        }
        let t = ((q - self.a).dot(d) / len2).clamp(0.0, 1.0);
        self.a + d * t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_measures() {
        let s = Segment::new(Point2::new(5.0, 0.0), Point2::new(5.0, 10.0));
        assert_eq!(s.length(), 10.0);
        assert_eq!(s.centroid(), Point2::new(5.0, 5.0));
        assert_eq!(s.reversed().centroid(), s.centroid());
    }

    #[test]
    fn closest_point_clamps_to_endpoints() {
        let s = Segment::new(Point2::new(0.0, 0.0), Point2::new(10.0, 0.0));
        assert_eq!(s.closest_point(Point2::new(12.0, 3.0)), Point2::new(10.0, 0.0));
        assert_eq!(s.closest_point(Point2::new(4.0, -3.0)), Point2::new(4.0, 0.0));
    }

    #[test]
    fn normalizing_zero_vector_is_none() {
        assert!(Point2::ZERO.normalized(1e-9).is_none());
        let u = Point2::new(3.0, 4.0).normalized(1e-9).unwrap();
        assert!((u.x - 0.6).abs() < 1e-15 && (u.y - 0.8).abs() < 1e-15);
    }
}
