//! Points of C^2 and 2x2 complex matrices.

use crate::scalar::{C64, ONE, ZERO};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: C64,
    pub y: C64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: ZERO, y: ZERO };

    pub fn new(x: C64, y: C64) -> Self {
        Point2 { x, y }
    }

    pub fn real(x: f64, y: f64) -> Self {
        Point2 { x: C64::new(x, 0.0), y: C64::new(y, 0.0) }
    }

    /// max(|x|, |y|), the norm used for escape tests.
    pub fn max_norm(&self) -> f64 {
        self.x.norm().max(self.y.norm())
    }

    /// Hermitian (Euclidean) norm.
    pub fn norm(&self) -> f64 {
        (self.x.norm_sqr() + self.y.norm_sqr()).sqrt()
    }

    pub fn dist(&self, o: &Point2) -> f64 {
        (*self - *o).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn conj(&self) -> Point2 {
        Point2 { x: self.x.conj(), y: self.y.conj() }
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2 { x: self.x + o.x, y: self.y + o.y }
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2 { x: self.x - o.x, y: self.y - o.y }
    }
}

impl Mul<C64> for Point2 {
    type Output = Point2;
    fn mul(self, s: C64) -> Point2 {
        Point2 { x: self.x * s, y: self.y * s }
    }
}

/// Row-major 2x2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m: [[C64; 2]; 2],
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { m: [[ONE, ZERO], [ZERO, ONE]] };

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(c0: Point2, c1: Point2) -> Self {
        Mat2::new(c0.x, c1.x, c0.y, c1.y)
    }

    pub fn column(&self, j: usize) -> Point2 {
        Point2::new(self.m[0][j], self.m[1][j])
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        Point2 { x: self.m[0][0] * p.x + self.m[0][1] * p.y, y: self.m[1][0] * p.x + self.m[1][1] * p.y }
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        if d.norm() <= 1e-300 || d.norm() < 1e-14 * scale * scale {
            return None;
        }
        Some(Mat2::new(self.m[1][1] / d, -self.m[0][1] / d, -self.m[1][0] / d, self.m[0][0] / d))
    }

    /// Solve `self * v = rhs`.
    pub fn solve(&self, rhs: Point2) -> Option<Point2> {
        self.inverse().map(|inv| inv.apply(rhs))
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn sub_identity(&self, lambda: C64) -> Mat2 {
        Mat2::new(self.m[0][0] - lambda, self.m[0][1], self.m[1][0], self.m[1][1] - lambda)
    }

    /// Eigenvalues ordered by increasing modulus.
    pub fn eigenvalues(&self) -> (C64, C64) {
        let t = self.trace();
        let d = self.det();
        let disc = (t * t - d * 4.0).sqrt();
        // Avoid cancellation: take the larger root from the stable formula.
        let big = if (t + disc).norm() >= (t - disc).norm() { (t + disc) / 2.0 } else { (t - disc) / 2.0 };
        let small = if big.norm() > 0.0 { d / big } else { ZERO };
        if small.norm() <= big.norm() {
            (small, big)
        } else {
            (big, small)
        }
    }

    /// A unit eigenvector for the eigenvalue `lambda`.
    pub fn eigenvector(&self, lambda: C64) -> Point2 {
        let a = self.sub_identity(lambda);
        // Null vector of a rank-one 2x2: orthogonal complement of the larger row.
        let r0 = Point2::new(a.m[0][0], a.m[0][1]);
        let r1 = Point2::new(a.m[1][0], a.m[1][1]);
        let r = if r0.norm() >= r1.norm() { r0 } else { r1 };
        let v = if r.norm() == 0.0 { Point2::new(ONE, ZERO) } else { Point2::new(-r.y, r.x) };
        v * C64::new(1.0 / v.norm(), 0.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.m;
        let b = &o.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    #[test]
    fn eigen_pair_of_henon_linear_part() {
        let a = 0.3;
        let m = Mat2::new(c(1.0 + a, 0.0), c(-a, 0.0), ONE, ZERO);
        let (s, b) = m.eigenvalues();
        assert!((s - c(a, 0.0)).norm() < 1e-14);
        assert!((b - ONE).norm() < 1e-14);
        let v = m.eigenvector(ONE);
        let mv = m.apply(v);
        assert!((mv - v).norm() < 1e-14);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2::new(c(1.0, 2.0), c(0.5, 0.0), c(-0.3, 0.1), c(2.0, 0.0));
        let p = m * m.inverse().unwrap();
        assert!((p.m[0][0] - ONE).norm() < 1e-14 && p.m[0][1].norm() < 1e-14);
    }
}
