//! Scalar types the polynomial maps can be evaluated over.
//!
//! Every map in this crate is a polynomial, so one generic evaluator serves
//! plain complex points, forward-mode jets (exact Jacobians) and truncated
//! power series (invariant-curve and normal-form solves).

use num_complex::{Complex, Complex64};
use std::ops::{Add, Mul, Neg, Sub};
use twofloat::TwoFloat;

pub type C64 = Complex64;

/// Complex double-double (about 32 significant digits), used where a
/// measured quantity sits far below double-precision resolution.
pub type Cdd = Complex<TwoFloat>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Minimal commutative-ring interface needed to evaluate a polynomial map.
pub trait Ring: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    /// A constant shaped like `self` (same truncation order for series).
    fn lift(&self, c: C64) -> Self;
    fn scale(&self, c: C64) -> Self;
    fn add_c(&self, c: C64) -> Self;
}

impl Ring for C64 {
    #[inline]
    fn lift(&self, c: C64) -> Self {
        c
    }
    #[inline]
    fn scale(&self, c: C64) -> Self {
        *self * c
    }
    #[inline]
    fn add_c(&self, c: C64) -> Self {
        *self + c
    }
}

impl Ring for Cdd {
    #[inline]
    fn lift(&self, c: C64) -> Self {
        to_dd(c)
    }
    #[inline]
    fn scale(&self, c: C64) -> Self {
        *self * to_dd(c)
    }
    #[inline]
    fn add_c(&self, c: C64) -> Self {
        *self + to_dd(c)
    }
}

pub fn to_dd(c: C64) -> Cdd {
    Complex::new(TwoFloat::from(c.re), TwoFloat::from(c.im))
}

pub fn from_dd(c: Cdd) -> C64 {
    C64::new(f64::from(c.re), f64::from(c.im))
}

/// Modulus of a double-double complex, rounded to double.
pub fn norm_dd(c: Cdd) -> f64 {
    let r = c.re * c.re + c.im * c.im;
    f64::from(r).sqrt()
}

/// Value with its gradient with respect to the two phase-space coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: C64,
    pub dx: C64,
    pub dy: C64,
}

impl Dual {
    pub fn var_x(v: C64) -> Self {
        Dual { v, dx: ONE, dy: ZERO }
    }
    pub fn var_y(v: C64) -> Self {
        Dual { v, dx: ZERO, dy: ONE }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, dx: self.dx + o.dx, dy: self.dy + o.dy }
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, dx: self.dx - o.dx, dy: self.dy - o.dy }
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, dx: self.dx * o.v + self.v * o.dx, dy: self.dy * o.v + self.v * o.dy }
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual { v: -self.v, dx: -self.dx, dy: -self.dy }
    }
}

impl Ring for Dual {
    #[inline]
    fn lift(&self, c: C64) -> Self {
        Dual { v: c, dx: ZERO, dy: ZERO }
    }
    #[inline]
    fn scale(&self, c: C64) -> Self {
        Dual { v: self.v * c, dx: self.dx * c, dy: self.dy * c }
    }
    #[inline]
    fn add_c(&self, c: C64) -> Self {
        Dual { v: self.v + c, ..*self }
    }
}

/// Truncated power series `sum_{k<=order} c_k t^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub coeffs: Vec<C64>,
}

impl Series {
    pub fn zero(order: usize) -> Self {
        Series { coeffs: vec![ZERO; order + 1] }
    }

    pub fn constant(order: usize, c: C64) -> Self {
        let mut s = Series::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// The identity series `t`.
    pub fn variable(order: usize) -> Self {
        let mut s = Series::zero(order);
        if order >= 1 {
            s.coeffs[1] = ONE;
        }
        s
    }

    pub fn from_coeffs(order: usize, coeffs: &[C64]) -> Self {
        let mut s = Series::zero(order);
        for (k, &v) in coeffs.iter().enumerate().take(order + 1) {
            s.coeffs[k] = v;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    /// Horner evaluation at a point.
    pub fn eval(&self, t: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &ck| acc * t + ck)
    }

    /// Derivative evaluated at a point.
    pub fn eval_deriv(&self, t: C64) -> C64 {
        let mut acc = ZERO;
        for k in (1..self.coeffs.len()).rev() {
            acc = acc * t + self.coeffs[k] * k as f64;
        }
        acc
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Series {
        let n = self.coeffs.len();
        let a0 = self.coeffs[0];
        assert!(a0 != ZERO, "series inverse needs a nonzero constant term");
        let mut r = vec![ZERO; n];
        r[0] = ONE / a0;
        for m in 1..n {
            let mut s = ZERO;
            for k in 1..=m {
                s += self.coeffs[k] * r[m - k];
            }
            r[m] = -s / a0;
        }
        Series { coeffs: r }
    }

    fn derivative_series(&self) -> Series {
        let n = self.coeffs.len();
        let mut d = vec![ZERO; n];
        for k in 1..n {
            d[k - 1] = self.coeffs[k] * k as f64;
        }
        Series { coeffs: d }
    }

    /// Logarithm of a series with constant term one.
    pub fn ln_unit(&self) -> Series {
        assert!((self.coeffs[0] - ONE).norm() < 1e-12, "ln_unit needs constant term 1");
        let q = self.derivative_series() * self.recip();
        let n = self.coeffs.len();
        let mut r = vec![ZERO; n];
        for k in 1..n {
            r[k] = q.coeffs[k - 1] / k as f64;
        }
        Series { coeffs: r }
    }

    /// `self(inner(t))`, where `inner` has zero constant term.
    pub fn compose(&self, inner: &Series) -> Series {
        assert!(inner.coeffs[0].norm() == 0.0, "compose needs inner(0) = 0");
        let order = inner.order();
        let mut out = Series::zero(order);
        let mut pow = Series::constant(order, ONE);
        for k in 0..self.coeffs.len().min(order + 1) {
            let ck = self.coeffs[k];
            if ck != ZERO {
                for (o, p) in out.coeffs.iter_mut().zip(&pow.coeffs) {
                    *o += ck * p;
                }
            }
            pow = pow * inner.clone();
        }
        out
    }

    /// Divide by `t`, dropping the (assumed zero) constant term.
    pub fn shift_down(&self) -> Series {
        let mut c = self.coeffs[1..].to_vec();
        c.push(ZERO);
        Series { coeffs: c }
    }

    pub fn pow(&self, k: usize) -> Series {
        let mut r = Series::constant(self.order(), ONE);
        for _ in 0..k {
            r = r * self.clone();
        }
        r
    }
}

impl Add for Series {
    type Output = Series;
    fn add(mut self, o: Series) -> Series {
        for (a, b) in self.coeffs.iter_mut().zip(&o.coeffs) {
            *a += b;
        }
        self
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(mut self, o: Series) -> Series {
        for (a, b) in self.coeffs.iter_mut().zip(&o.coeffs) {
            *a -= b;
        }
        self
    }
}

impl Mul for Series {
    type Output = Series;
    fn mul(self, o: Series) -> Series {
        let n = self.coeffs.len().min(o.coeffs.len());
        let mut r = vec![ZERO; n];
        for (i, &a) in self.coeffs.iter().enumerate().take(n) {
            if a == ZERO {
                continue;
            }
            for (j, &b) in o.coeffs.iter().enumerate().take(n - i) {
                r[i + j] += a * b;
            }
        }
        Series { coeffs: r }
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(mut self) -> Series {
        for a in self.coeffs.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl Ring for Series {
    fn lift(&self, c: C64) -> Self {
        Series::constant(self.order(), c)
    }
    fn scale(&self, c: C64) -> Self {
        Series { coeffs: self.coeffs.iter().map(|&a| a * c).collect() }
    }
    fn add_c(&self, c: C64) -> Self {
        let mut s = self.clone();
        s.coeffs[0] += c;
        s
    }
}

/// Complex log of `1 + z`, accurate for small `z`.
pub fn ln_1p(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        // Taylor series to well below double precision for |z| < 1e-4.
        let mut term = z;
        let mut sum = ZERO;
        for k in 1..=6 {
            sum += term / k as f64 * if k % 2 == 1 { 1.0 } else { -1.0 };
            term *= z;
        }
        sum
    } else {
        (ONE + z).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recip_times_self_is_one() {
        let s = Series::from_coeffs(8, &[c(2.0, 1.0), c(0.5, 0.0), c(-1.0, 0.3)]);
        let p = s.clone() * s.recip();
        assert!((p.coeff(0) - ONE).norm() < 1e-14);
        for k in 1..=8 {
            assert!(p.coeff(k).norm() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn ln_of_exp_series() {
        // exp(t) truncated; ln should give t.
        let n = 10;
        let mut e = vec![ZERO; n + 1];
        let mut f = 1.0;
        for (k, ek) in e.iter_mut().enumerate() {
            if k > 0 {
                f *= k as f64;
            }
            *ek = c(1.0 / f, 0.0);
        }
        let l = Series { coeffs: e }.ln_unit();
        assert!((l.coeff(1) - ONE).norm() < 1e-14);
        for k in 2..=n {
            assert!(l.coeff(k).norm() < 1e-13);
        }
    }

    #[test]
    fn dual_product_rule() {
        let x = Dual::var_x(c(0.3, 0.1));
        let y = Dual::var_y(c(-0.2, 0.0));
        let f = x * x * y;
        assert!((f.dx - c(2.0, 0.0) * x.v * y.v).norm() < 1e-15);
        assert!((f.dy - x.v * x.v).norm() < 1e-15);
    }

    #[test]
    fn ln_1p_matches_direct() {
        for z in [c(1e-5, 2e-5), c(0.3, -0.1), c(-5e-5, 0.0)] {
            assert!((ln_1p(z) - (ONE + z).ln()).norm() < 1e-15);
        }
    }
}
