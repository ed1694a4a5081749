//! The quadratic Hénon family, the one- and two-dimensional model families,
//! and the generic orbit and derivative machinery shared by every engine.

use crate::error::{Error, Result};
use crate::geometry::{Mat2, Point2};
use crate::scalar::{Dual, Ring, C64, ONE, ZERO};
use serde::{Deserialize, Serialize};

/// A polynomial self-map of C^2, evaluable over any [`Ring`].
pub trait PlaneMap: Send + Sync {
    fn eval<T: Ring>(&self, x: T, y: T) -> (T, T);

    #[inline]
    fn apply(&self, p: Point2) -> Point2 {
        let (x, y) = self.eval(p.x, p.y);
        Point2 { x, y }
    }

    /// Value and exact Jacobian via forward-mode differentiation.
    fn jet(&self, p: Point2) -> Jet2 {
        let (fx, fy) = self.eval(Dual::var_x(p.x), Dual::var_y(p.y));
        Jet2 { value: Point2::new(fx.v, fy.v), deriv: Mat2::new(fx.dx, fx.dy, fy.dx, fy.dy) }
    }

    fn jacobian(&self, p: Point2) -> Mat2 {
        self.jet(p).deriv
    }

    /// Inverse map, when it exists in closed form.
    fn inverse(&self, _p: Point2) -> Option<Point2> {
        None
    }
}

impl<M: PlaneMap> PlaneMap for &M {
    fn eval<T: Ring>(&self, x: T, y: T) -> (T, T) {
        (**self).eval(x, y)
    }
    fn inverse(&self, p: Point2) -> Option<Point2> {
        (**self).inverse(p)
    }
}

/// Point together with the derivative of the composed evaluation producing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: Point2,
    pub deriv: Mat2,
}

impl Jet2 {
    pub fn identity(p: Point2) -> Self {
        Jet2 { value: p, deriv: Mat2::IDENTITY }
    }

    /// Push the jet one step forward through `map` (chain rule).
    pub fn step<M: PlaneMap>(&self, map: &M) -> Jet2 {
        let j = map.jet(self.value);
        Jet2 { value: j.value, deriv: j.deriv * self.deriv }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Parameters of `F(x, y) = ((1+a)x - a y + x^2 + eps^2, x + eps^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HenonParams {
    pub a: C64,
    pub eps: C64,
}

impl HenonParams {
    pub fn new(a: C64, eps: C64) -> Result<Self> {
        if !a.is_finite() || !eps.is_finite() {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if a.norm() == 0.0 {
            return Err(Error::InvalidParams("a = 0 makes the map non-invertible".into()));
        }
        if (a - ONE).norm() == 0.0 {
            return Err(Error::InvalidParams("a = 1 leaves eps' = eps/(1-a)^(1/2) undefined".into()));
        }
        if a.norm() >= 1.0 {
            return Err(Error::InvalidParams("|a| < 1 is required (semi-attracting)".into()));
        }
        Ok(HenonParams { a, eps })
    }

    pub fn real(a: f64, eps: f64) -> Result<Self> {
        Self::new(C64::new(a, 0.0), C64::new(eps, 0.0))
    }

    /// The parameter of the normalized form, `eps / (1 - a)^(1/2)`.
    pub fn eps_prime(&self) -> C64 {
        self.eps / (ONE - self.a).sqrt()
    }

    pub fn with_eps(&self, eps: C64) -> HenonParams {
        HenonParams { a: self.a, eps }
    }
}

impl PlaneMap for HenonParams {
    #[inline]
    fn eval<T: Ring>(&self, x: T, y: T) -> (T, T) {
        let e2 = self.eps * self.eps;
        let x1 = x.scale(ONE + self.a) - y.scale(self.a) + x.clone() * x.clone();
        (x1.add_c(e2), x.add_c(e2))
    }

    fn inverse(&self, p: Point2) -> Option<Point2> {
        let e2 = self.eps * self.eps;
        let x = p.y - e2;
        let y = ((ONE + self.a) * x + x * x + e2 - p.x) / self.a;
        Some(Point2::new(x, y))
    }
}

/// Checked application of the Hénon map in either direction.
pub fn henon_apply(params: &HenonParams, p: Point2, direction: Direction) -> Result<Point2> {
    let q = match direction {
        Direction::Forward => params.apply(p),
        Direction::Inverse => params.inverse(p).expect("Hénon map is invertible"),
    };
    if q.is_finite() {
        Ok(q)
    } else {
        Err(Error::Overflow)
    }
}

/// Jacobian product along an orbit segment and its eigenvalues.
pub fn derivative_data<M: PlaneMap>(map: &M, orbit_points: &[Point2]) -> Result<(Mat2, (C64, C64))> {
    let mut prod = Mat2::IDENTITY;
    for p in orbit_points {
        prod = map.jacobian(*p) * prod;
        if prod.max_abs().is_nan() || prod.max_abs().is_infinite() {
            return Err(Error::Overflow);
        }
    }
    Ok((prod, prod.eigenvalues()))
}

/// The two fixed points of the Hénon map, `x^2 + eps^2 (1-a) = 0`, `y = x + eps^2`.
pub fn fixed_points(params: &HenonParams) -> [Point2; 2] {
    let e2 = params.eps * params.eps;
    let root = (-(e2 * (ONE - params.a))).sqrt();
    let xs = if root.im >= 0.0 { [root, -root] } else { [-root, root] };
    xs.map(|x| Point2::new(x, x + e2))
}

/// The Hénon map written in the eigenframe at `O` and dilated so the
/// parabolic coefficient is one:
/// `X' = X + Z^2 + eps'^2`, `Y' = aY - Z^2`, `Z = X + aY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedHenon {
    pub a: C64,
    pub eps_prime: C64,
}

impl NormalizedHenon {
    pub fn from_params(p: &HenonParams) -> Self {
        NormalizedHenon { a: p.a, eps_prime: p.eps_prime() }
    }
}

impl PlaneMap for NormalizedHenon {
    #[inline]
    fn eval<T: Ring>(&self, x: T, y: T) -> (T, T) {
        let z = x.clone() + y.scale(self.a);
        let z2 = z.clone() * z;
        let x1 = (x + z2.clone()).add_c(self.eps_prime * self.eps_prime);
        let y1 = y.scale(self.a) - z2;
        (x1, y1)
    }

    fn inverse(&self, p: Point2) -> Option<Point2> {
        // X + aY = (X' + aY' - eps'^2)/(1-a)... solve via Z: X' + Y' = X + aY + eps'^2 = Z + eps'^2.
        let e2 = self.eps_prime * self.eps_prime;
        let z = p.x + p.y - e2;
        let y = (p.y + z * z) / self.a;
        let x = z - self.a * y;
        Some(Point2::new(x, y))
    }
}

/// Sparse bivariate polynomial `sum c_ij x^i y^j`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BiPoly {
    pub terms: Vec<(usize, usize, C64)>,
}

impl BiPoly {
    pub fn new(terms: Vec<(usize, usize, C64)>) -> Self {
        BiPoly { terms }
    }

    pub fn constant_term(&self) -> C64 {
        self.terms.iter().filter(|t| t.0 == 0 && t.1 == 0).map(|t| t.2).sum()
    }

    pub fn coeff(&self, i: usize, j: usize) -> C64 {
        self.terms.iter().filter(|t| t.0 == i && t.1 == j).map(|t| t.2).sum()
    }

    pub fn eval<T: Ring>(&self, x: &T, y: &T) -> T {
        let mut acc = x.lift(ZERO);
        for &(i, j, cij) in &self.terms {
            let mut m = x.lift(cij);
            for _ in 0..i {
                m = m * x.clone();
            }
            for _ in 0..j {
                m = m * y.clone();
            }
            acc = acc + m;
        }
        acc
    }
}

/// `f_eps(x) = x + (x^2 + eps^2) alpha(x)` with `alpha(0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFamily1D {
    pub alpha_coeffs: Vec<C64>,
}

impl ModelFamily1D {
    pub fn new(alpha_coeffs: Vec<C64>) -> Result<Self> {
        if alpha_coeffs.first().copied() != Some(ONE) {
            return Err(Error::InvalidParams("alpha must have constant coefficient 1".into()));
        }
        Ok(ModelFamily1D { alpha_coeffs })
    }

    /// The quadratic family `x + x^2 + eps^2`.
    pub fn quadratic() -> Self {
        ModelFamily1D { alpha_coeffs: vec![ONE] }
    }

    /// q, read off the linear coefficient `q + 1` of alpha.
    pub fn q(&self) -> C64 {
        self.alpha_coeffs.get(1).copied().unwrap_or(ZERO) - ONE
    }

    pub fn alpha<T: Ring>(&self, x: &T) -> T {
        let mut acc = x.lift(ZERO);
        for &ck in self.alpha_coeffs.iter().rev() {
            acc = (acc * x.clone()).add_c(ck);
        }
        acc
    }

    pub fn apply_1d(&self, eps: C64, x: C64) -> C64 {
        x + (x * x + eps * eps) * self.alpha(&x)
    }

    pub fn at(&self, eps: C64) -> Model1D {
        Model1D { family: self.clone(), eps }
    }
}

/// A member of a [`ModelFamily1D`], embedded in C^2 as `(x, y) -> (f(x), 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model1D {
    pub family: ModelFamily1D,
    pub eps: C64,
}

impl PlaneMap for Model1D {
    fn eval<T: Ring>(&self, x: T, y: T) -> (T, T) {
        let e2 = self.eps * self.eps;
        let x1 = x.clone() + (x.clone() * x.clone()).add_c(e2) * self.family.alpha(&x);
        (x1, y.scale(ZERO))
    }
}

/// `F(x,y) = (x + (x^2+eps^2) alpha(x,y), b(x) y + (x^2+eps^2) beta(x,y))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFamily2D {
    pub alpha: BiPoly,
    pub b_coeffs: Vec<C64>,
    pub beta: BiPoly,
}

impl ModelFamily2D {
    pub fn new(alpha: BiPoly, b_coeffs: Vec<C64>, beta: BiPoly) -> Result<Self> {
        if (alpha.constant_term() - ONE).norm() != 0.0 {
            return Err(Error::InvalidParams("alpha must have constant coefficient 1".into()));
        }
        let b0 = b_coeffs.first().copied().unwrap_or(ZERO);
        if b0.norm() >= 1.0 {
            return Err(Error::InvalidParams("|b(0)| < 1 is required".into()));
        }
        Ok(ModelFamily2D { alpha, b_coeffs, beta })
    }

    /// `alpha = 1 + (q+1)x + r y`, `b(x) = b`, `beta = x`.
    pub fn linear(q: C64, r: C64, b: C64) -> Self {
        ModelFamily2D {
            alpha: BiPoly::new(vec![(0, 0, ONE), (1, 0, q + ONE), (0, 1, r)]),
            b_coeffs: vec![b],
            beta: BiPoly::new(vec![(1, 0, ONE)]),
        }
    }

    pub fn q(&self) -> C64 {
        self.alpha.coeff(1, 0) - ONE
    }

    pub fn r(&self) -> C64 {
        self.alpha.coeff(0, 1)
    }

    pub fn b(&self) -> C64 {
        self.b_coeffs.first().copied().unwrap_or(ZERO)
    }

    pub fn b_of<T: Ring>(&self, x: &T) -> T {
        let mut acc = x.lift(ZERO);
        for &ck in self.b_coeffs.iter().rev() {
            acc = (acc * x.clone()).add_c(ck);
        }
        acc
    }

    pub fn at(&self, eps: C64) -> Model2D {
        Model2D { family: self.clone(), eps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model2D {
    pub family: ModelFamily2D,
    pub eps: C64,
}

impl PlaneMap for Model2D {
    fn eval<T: Ring>(&self, x: T, y: T) -> (T, T) {
        let fam = &self.family;
        let s = (x.clone() * x.clone()).add_c(self.eps * self.eps);
        let x1 = x.clone() + s.clone() * fam.alpha.eval(&x, &y);
        let y1 = fam.b_of(&x) * y.clone() + s * fam.beta.eval(&x, &y);
        (x1, y1)
    }
}

/// Evaluate a model family at parameter eps.
pub fn model_apply_1d(fam: &ModelFamily1D, eps: C64, x: C64) -> C64 {
    fam.apply_1d(eps, x)
}

pub fn model_apply_2d(fam: &ModelFamily2D, eps: C64, p: Point2) -> Point2 {
    fam.at(eps).apply(p)
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrbitOutcome {
    /// `max(|x|,|y|)` exceeded the radius (or overflowed) at this step.
    Escaped {
        step: usize,
        trace: Vec<Point2>,
    },
    Completed {
        last: Point2,
        trace: Vec<Point2>,
    },
}

impl OrbitOutcome {
    pub fn escaped(&self) -> bool {
        matches!(self, OrbitOutcome::Escaped { .. })
    }
    pub fn trace(&self) -> &[Point2] {
        match self {
            OrbitOutcome::Escaped { trace, .. } | OrbitOutcome::Completed { trace, .. } => trace,
        }
    }
}

/// Iterate `map` up to `n_max` times; at most `trace_limit` points are kept.
pub fn orbit<M: PlaneMap>(map: &M, p: Point2, n_max: usize, escape_radius: f64, trace_limit: usize) -> OrbitOutcome {
    let mut trace = Vec::new();
    let mut cur = p;
    for step in 0..=n_max {
        if !cur.is_finite() || cur.max_norm() > escape_radius {
            return OrbitOutcome::Escaped { step, trace };
        }
        if trace.len() < trace_limit {
            trace.push(cur);
        }
        if step == n_max {
            break;
        }
        cur = map.apply(cur);
    }
    OrbitOutcome::Completed { last: cur, trace }
}

/// Iterate `n` times without any test.
pub fn iterate<M: PlaneMap>(map: &M, mut p: Point2, n: usize) -> Point2 {
    for _ in 0..n {
        p = map.apply(p);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    fn henon(a: f64, e: f64) -> HenonParams {
        HenonParams::real(a, e).unwrap()
    }

    #[test]
    fn origin_fixed_and_unit_substitution() {
        let f = henon(0.3, 0.0);
        assert_eq!(f.apply(Point2::ORIGIN), Point2::ORIGIN);
        let q = f.apply(Point2::real(1.0, 0.0));
        assert!((q.x - c(2.3, 0.0)).norm() < 1e-15);
        assert!((q.y - ONE).norm() < 1e-15);
    }

    #[test]
    fn inverse_identity_small_eps() {
        let f = henon(0.3, 0.05);
        let p = Point2::real(0.1, -0.2);
        let back = henon_apply(&f, henon_apply(&f, p, Direction::Inverse).unwrap(), Direction::Forward).unwrap();
        assert!(back.dist(&p) < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(HenonParams::real(0.0, 0.1).is_err());
        assert!(HenonParams::real(1.0, 0.1).is_err());
        assert!(HenonParams::real(1.5, 0.1).is_err());
    }

    #[test]
    fn multipliers_at_origin() {
        let f = henon(0.3, 0.0);
        let (_, (l1, l2)) = derivative_data(&f, &[Point2::ORIGIN]).unwrap();
        assert!((l1 - c(0.3, 0.0)).norm() < 1e-14);
        assert!((l2 - ONE).norm() < 1e-14);
    }

    #[test]
    fn jet_matches_central_differences() {
        let f = henon(0.3, 0.05);
        let p = Point2::real(0.1, 0.1);
        let j = f.jacobian(p);
        let h = 1e-5;
        for (col, dir) in [Point2::real(1.0, 0.0), Point2::real(0.0, 1.0)].iter().enumerate() {
            let d = (f.apply(p + *dir * c(h, 0.0)) - f.apply(p - *dir * c(h, 0.0))) * c(0.5 / h, 0.0);
            let jc = j.column(col);
            assert!((d - jc).norm() / jc.norm() < 1e-6);
        }
    }

    #[test]
    fn fixed_points_residual_and_location() {
        let f = henon(0.3, 0.05);
        let fps = fixed_points(&f);
        let expect = 0.05 * (0.7f64).sqrt();
        assert!((fps[0].x - c(0.0, expect)).norm() < 1e-15);
        assert!((fps[0].x - c(0.0, 0.041_833_001_326_703_78)).norm() < 1e-12);
        for p in fps {
            assert!((f.apply(p) - p).norm() < 1e-12 * (1.0 + p.norm()));
        }
        let f0 = henon(0.3, 0.0);
        let fps0 = fixed_points(&f0);
        assert_eq!(fps0[0], Point2::ORIGIN);
        assert_eq!(fps0[1], Point2::ORIGIN);
    }

    #[test]
    fn fixed_point_multipliers_follow_normal_form() {
        // (1 +- 2 i eps', a) up to O(eps^2).
        for eps in [0.02, 0.01, 0.005] {
            let f = henon(0.3, eps);
            let ep = f.eps_prime();
            for (k, p) in fixed_points(&f).iter().enumerate() {
                let (_, (small, big)) = derivative_data(&f, &[*p]).unwrap();
                let sign = if k == 0 { 1.0 } else { -1.0 };
                let target = ONE + c(0.0, 2.0 * sign) * ep;
                assert!((big - target).norm() < 4.0 * eps * eps, "eps={eps}");
                assert!((small - c(0.3, 0.0)).norm() < 4.0 * eps);
            }
        }
    }

    #[test]
    fn normalized_henon_inverse() {
        let g = NormalizedHenon { a: c(0.3, 0.0), eps_prime: c(0.02, 0.001) };
        let p = Point2::new(c(0.1, -0.05), c(0.2, 0.3));
        let q = g.inverse(g.apply(p)).unwrap();
        assert!(q.dist(&p) < 1e-14);
    }

    #[test]
    fn model_1d_values() {
        let fam = ModelFamily1D::quadratic();
        assert_eq!(fam.apply_1d(ZERO, ZERO), ZERO);
        assert!((fam.apply_1d(ZERO, c(-0.1, 0.0)) - c(-0.09, 0.0)).norm() < 1e-16);
        assert_eq!(fam.q(), c(-1.0, 0.0));
    }

    #[test]
    fn model_2d_against_direct_formula() {
        let q = c(-13.0 / 7.0, 0.0);
        let fam = ModelFamily2D::linear(q, ONE, c(0.3, 0.0));
        let eps = c(0.01, 0.0);
        let p = Point2::new(c(-0.07, 0.01), c(0.05, -0.02));
        let got = model_apply_2d(&fam, eps, p);
        // Written out by hand from the normal form.
        let s = p.x * p.x + eps * eps;
        let alpha = ONE + (q + ONE) * p.x + p.y;
        let want = Point2::new(p.x + s * alpha, c(0.3, 0.0) * p.y + s * p.x);
        assert!(got.dist(&want) < 1e-16);
    }

    #[test]
    fn orbit_driver_cases() {
        let f = henon(0.3, 0.0);
        match orbit(&f, Point2::ORIGIN, 100, 10.0, 4) {
            OrbitOutcome::Completed { last, trace } => {
                assert_eq!(last, Point2::ORIGIN);
                assert_eq!(trace.len(), 4);
            }
            _ => panic!("origin escaped"),
        }
        match orbit(&f, Point2::real(10.0, 0.0), 100, 5.0, 0) {
            OrbitOutcome::Escaped { step, .. } => assert_eq!(step, 0),
            _ => panic!("should escape"),
        }
    }
}
