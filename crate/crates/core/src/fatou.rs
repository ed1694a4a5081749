//! Fatou coordinates at the semi-parabolic point (eps = 0).
//!
//! Everything runs in the normalized frame where the map reads
//! `X' = X + X^2 + ...`, `Y' = bY + ...`. Both Fatou coordinates are
//! evaluated through the same asymptotic expansion
//! `phi(X) = -1/X - q log(-+X) + sum d_k X^k` of the map restricted to the
//! center-manifold series `Y = h(X)`, applied once the orbit has reached
//! the deep incoming (resp. started in the deep outgoing) petal.

use crate::dynamics::{Model1D, Model2D, ModelFamily1D, ModelFamily2D, NormalizedHenon, PlaneMap};
use crate::error::{BasinMiss, Error, Result};
use crate::escape::{EscapeConfig, Petal, PointClass};
use crate::geometry::{Mat2, Point2};
use crate::scalar::{from_dd, norm_dd, to_dd, Cdd, Series, C64, I, ONE, ZERO};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Linear frame `p = dilation * basis * P` taking normalized coordinates `P` to original ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenFrame {
    pub a: C64,
    pub basis: Mat2,
    pub basis_inv: Mat2,
    pub dilation: C64,
}

impl EigenFrame {
    /// Eigenvectors `(1,1)` (eigenvalue 1) and `(a,1)` (eigenvalue a) of
    /// `[[1+a, -a], [1, 0]]`, with the dilation `1-a` that makes the
    /// quadratic coefficient of the center coordinate equal to one.
    pub fn henon(a: C64) -> Result<Self> {
        let basis = Mat2::from_columns(Point2::new(ONE, ONE), Point2::new(a, ONE));
        let basis_inv = basis.inverse().ok_or(Error::Singular)?;
        let dilation = ONE - a;
        if dilation.norm() == 0.0 {
            return Err(Error::InvalidParams("a = 1".into()));
        }
        Ok(EigenFrame { a, basis, basis_inv, dilation })
    }

    pub fn identity() -> Self {
        EigenFrame { a: ZERO, basis: Mat2::IDENTITY, basis_inv: Mat2::IDENTITY, dilation: ONE }
    }

    #[inline]
    pub fn to_normalized(&self, p: Point2) -> Point2 {
        self.basis_inv.apply(p) * (ONE / self.dilation)
    }

    #[inline]
    pub fn from_normalized(&self, p: Point2) -> Point2 {
        self.basis.apply(p) * self.dilation
    }

    /// Map a vector (not a point): same linear action.
    pub fn vector_from_normalized(&self, v: Point2) -> Point2 {
        self.from_normalized(v)
    }
}

/// `q = (a+1)/(a-1)` for the Hénon family.
pub fn q_of_henon(a: C64) -> Result<C64> {
    if (a - ONE).norm() == 0.0 {
        return Err(Error::InvalidParams("a = 1 has no normal form".into()));
    }
    Ok((a + ONE) / (a - ONE))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicData {
    pub q: C64,
    pub c0_plus: C64,
    pub c0_minus: C64,
}

impl ParabolicData {
    pub fn from_q(q: C64) -> Self {
        let c0_plus = I * PI * q;
        ParabolicData { q, c0_plus, c0_minus: -c0_plus }
    }

    pub fn henon(a: C64) -> Result<Self> {
        Ok(Self::from_q(q_of_henon(a)?))
    }
}

/// Graph `Y = h(X) = sum_{k>=2} h_k X^k` of the formal center manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSeries {
    /// `coeffs[k]` multiplies `X^k`; entries 0 and 1 are zero.
    pub coeffs: Vec<C64>,
    pub order: usize,
}

impl SigmaSeries {
    /// Solve `F_Y(t, h(t)) = h(F_X(t, h(t)))` order by order. The order-m
    /// coefficient enters as `(b - 1) h_m`, so each step is one division.
    pub fn solve<M: PlaneMap>(map: &M, b: C64, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParams("series order must be at least 2".into()));
        }
        assert!((b - ONE).norm() > 1e-12, "center manifold solve resonant at b = 1");
        let t = Series::variable(order);
        let mut h = Series::zero(order);
        for m in 2..=order {
            let (fx, fy) = map.eval(t.clone(), h.clone());
            let res = fy - h.compose(&fx);
            h.coeffs[m] = -res.coeff(m) / (b - ONE);
        }
        Ok(SigmaSeries { coeffs: h.coeffs, order })
    }

    pub fn as_series(&self) -> Series {
        Series { coeffs: self.coeffs.clone() }
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.as_series().eval(x)
    }

    pub fn eval_deriv(&self, x: C64) -> C64 {
        self.as_series().eval_deriv(x)
    }

    /// `|F_Y(x, h(x)) - h(F_X(x, h(x)))|`.
    pub fn residual<M: PlaneMap>(&self, map: &M, x: C64) -> f64 {
        let img = map.apply(Point2::new(x, self.eval(x)));
        (img.y - self.eval(img.x)).norm()
    }

    /// The restriction `g(X) = F_X(X, h(X))` as a series.
    pub fn restricted<M: PlaneMap>(&self, map: &M) -> Series {
        let t = Series::variable(self.order);
        map.eval(t, self.as_series()).0
    }
}

/// Asymptotic expansion of the Fatou coordinates of `g(X) = X + X^2 + ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatouSeries {
    pub q: C64,
    /// `d[k]` multiplies `X^k`; `d[0]` is unused.
    pub d: Vec<C64>,
    /// Number of terms used when evaluating (the series is divergent).
    pub terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Incoming,
    Outgoing,
}

impl FatouSeries {
    /// Solve `phi(g(X)) = phi(X) + 1` in powers of X.
    pub fn solve(g: &Series) -> Result<Self> {
        let n = g.order();
        if n < 5 {
            return Err(Error::InvalidParams("need the restricted map to order >= 5".into()));
        }
        if g.coeff(0).norm() > 1e-14 || (g.coeff(1) - ONE).norm() > 1e-10 || (g.coeff(2) - ONE).norm() > 1e-10 {
            return Err(Error::InvalidParams("restricted map is not of the form X + X^2 + ...".into()));
        }
        let big_g = g.shift_down();
        let q = big_g.coeff(2) - ONE;
        let mut fs = FatouSeries { q, d: vec![ZERO; n - 1], terms: n - 3 };
        // Coefficient m of the residual is exact for m < n.
        for m in 2..n {
            let r = fs.abel_residual_series(&big_g);
            fs.d[m - 1] = -r.coeff(m) / (m - 1) as f64;
        }
        Ok(fs)
    }

    /// `phi(g) - phi - 1` expanded as a series, with `G = g/X`.
    pub fn abel_residual_series(&self, big_g: &Series) -> Series {
        let order = big_g.order();
        let mut a = -big_g.recip();
        a.coeffs[0] += ONE;
        let mut r = a.shift_down() - big_g.ln_unit().scale_by(self.q);
        r.coeffs[0] -= ONE;
        let one = Series::constant(order, ONE);
        let t = Series::variable(order);
        let mut gk = one.clone();
        let mut xk = one.clone();
        for k in 1..order {
            gk = gk * big_g.clone();
            xk = xk * t.clone();
            let dk = self.d.get(k).copied().unwrap_or(ZERO);
            if dk != ZERO {
                r = r + (xk.clone() * (gk.clone() - one.clone())).scale_by(dk);
            }
        }
        r
    }

    #[inline]
    pub fn eval(&self, x: C64, side: Side) -> C64 {
        let l = match side {
            Side::Incoming => (-x).ln(),
            Side::Outgoing => x.ln(),
        };
        let mut s = ZERO;
        for k in (1..=self.terms).rev() {
            s = (s + self.d[k]) * x;
        }
        -x.inv() - self.q * l + s
    }

    #[inline]
    pub fn eval_deriv(&self, x: C64) -> C64 {
        let mut s = ZERO;
        for k in (1..=self.terms).rev() {
            s = s * x + self.d[k] * k as f64;
        }
        (x * x).inv() - self.q / x + s
    }

    /// Size of the last retained term, used as the truncation estimate.
    pub fn tail_estimate(&self, x: C64) -> f64 {
        (self.d[self.terms] * x.powu(self.terms as u32)).norm()
    }
}

trait ScaleBy {
    fn scale_by(self, c: C64) -> Self;
}

impl ScaleBy for Series {
    fn scale_by(self, c: C64) -> Series {
        Series { coeffs: self.coeffs.into_iter().map(|v| v * c).collect() }
    }
}

/// A Fatou-coordinate value with an estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatouValue {
    pub value: C64,
    pub err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatouConfig {
    pub escape: EscapeConfig,
    pub sigma_order: usize,
    /// Minimum number of steps before the expansion is applied.
    pub n_min: usize,
    /// Outgoing seeds are placed at `Re(zeta - n) <= -seed_depth`.
    pub seed_depth: usize,
    /// Extra depth used to certify outgoing seeds.
    pub deepen: usize,
}

impl Default for FatouConfig {
    fn default() -> Self {
        FatouConfig {
            escape: EscapeConfig { n_max: 100_000, ..EscapeConfig::default() },
            sigma_order: 16,
            n_min: 60,
            seed_depth: 50,
            deepen: 10,
        }
    }
}

/// Contraction rate along a fiber and the fiber-separation product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberRates {
    /// `(1/n) log dist(F^n p1, F^n p2)`; `-inf` if the distance vanished.
    pub stable_rate: f64,
    /// `n^2 |X_{1,n} - X_{2,n}|`.
    pub quadratic_product: f64,
    /// Step at which the distance first became exactly zero.
    pub underflow_at: Option<usize>,
}

/// A point in extended precision, used only by the fiber experiments.
pub type PointDd = [Cdd; 2];

pub fn point_to_dd(p: Point2) -> PointDd {
    [to_dd(p.x), to_dd(p.y)]
}

pub fn point_from_dd(p: &PointDd) -> Point2 {
    Point2::new(from_dd(p[0]), from_dd(p[1]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FatouEngine<M> {
    /// The map in normalized coordinates at eps = 0.
    pub map: M,
    pub frame: EigenFrame,
    /// Stable multiplier at the origin.
    pub b: C64,
    pub data: ParabolicData,
    pub sigma: SigmaSeries,
    pub series: FatouSeries,
    pub cfg: FatouConfig,
    petal: Petal,
    n_min: usize,
}

impl FatouEngine<NormalizedHenon> {
    pub fn henon(a: C64, cfg: FatouConfig) -> Result<Self> {
        crate::dynamics::HenonParams::new(a, ZERO)?;
        let map = NormalizedHenon { a, eps_prime: ZERO };
        let eng = FatouEngine::new(map, EigenFrame::henon(a)?, cfg)?;
        let q = q_of_henon(a)?;
        if (eng.data.q - q).norm() > 1e-9 {
            return Err(Error::InvalidParams(format!("series q {} disagrees with (a+1)/(a-1) {}", eng.data.q, q)));
        }
        Ok(eng)
    }
}

impl FatouEngine<Model1D> {
    pub fn model_1d(fam: &ModelFamily1D, cfg: FatouConfig) -> Result<Self> {
        FatouEngine::new(fam.at(ZERO), EigenFrame::identity(), cfg)
    }
}

impl FatouEngine<Model2D> {
    pub fn model_2d(fam: &ModelFamily2D, cfg: FatouConfig) -> Result<Self> {
        FatouEngine::new(fam.at(ZERO), EigenFrame::identity(), cfg)
    }
}

impl<M: PlaneMap> FatouEngine<M> {
    pub fn new(map: M, frame: EigenFrame, cfg: FatouConfig) -> Result<Self> {
        cfg.escape.validate()?;
        if map.apply(Point2::ORIGIN).norm() != 0.0 {
            return Err(Error::InvalidParams("origin must be fixed".into()));
        }
        let j = map.jacobian(Point2::ORIGIN);
        let b = j.m[1][1];
        if (j.m[0][0] - ONE).norm() > 1e-12 || j.m[0][1].norm() > 1e-12 || j.m[1][0].norm() > 1e-12 {
            return Err(Error::InvalidParams("map is not in normalized form at the origin".into()));
        }
        if b.norm() >= 1.0 {
            return Err(Error::InvalidParams("|b| < 1 is required".into()));
        }
        let sigma = SigmaSeries::solve(&map, b, cfg.sigma_order)?;
        let series = FatouSeries::solve(&sigma.restricted(&map))?;
        let data = ParabolicData::from_q(series.q);
        // Enough steps for the distance to the center manifold (~|b|^n) to vanish.
        let n_b = if b.norm() > 0.0 { (40.0 / -b.norm().ln()).ceil() as usize } else { 0 };
        let eng = FatouEngine {
            map,
            frame,
            b,
            data,
            sigma,
            series,
            petal: cfg.escape.petal(),
            n_min: cfg.n_min.max(n_b),
            cfg,
        };
        eng.validate_petal()?;
        Ok(eng)
    }

    pub fn petal(&self) -> Petal {
        self.petal
    }

    pub fn n_min(&self) -> usize {
        self.n_min
    }

    /// Boundary-sample check that the trap is mapped into itself.
    pub fn validate_petal(&self) -> Result<()> {
        let p = self.petal;
        let w0 = 0.5 / p.r;
        let mut ws = Vec::new();
        for k in 0..=40 {
            let t = -1.0 + 2.0 * k as f64 / 40.0;
            ws.push(C64::new(w0 * (1.0 + 1e-9), 0.999 * w0 * t));
        }
        for k in 0..=40 {
            let s = w0 * 10f64.powf(k as f64 / 10.0);
            ws.push(C64::new(s, 0.999 * s));
            ws.push(C64::new(s, -0.999 * s));
        }
        for w in ws {
            let x = -w.inv();
            for m in 0..8 {
                let th = 2.0 * PI * m as f64 / 8.0;
                let y = C64::from_polar(0.999 * p.kappa.min(p.eta0 / (2.0 * p.r)) * x.norm(), th);
                let pt = Point2::new(x, y);
                if !p.contains(pt) {
                    continue;
                }
                if !p.contains(self.map.apply(pt)) {
                    return Err(Error::InvalidParams(format!("petal trap not forward invariant near X = {x}")));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn escaped(&self, p: Point2) -> bool {
        !p.is_finite() || self.frame.from_normalized(p).max_norm() > self.cfg.escape.escape_radius
    }

    /// Forward classification of a normalized-frame point.
    pub fn classify(&self, p: Point2, n_max: usize) -> PointClass {
        let mut cur = p;
        for n in 0..=n_max {
            if self.escaped(cur) {
                return PointClass::Escaped(n);
            }
            if self.petal.contains(cur) {
                return PointClass::AttractedToO(n);
            }
            cur = self.map.apply(cur);
        }
        PointClass::BoundedOther
    }

    /// Iterate into the trap and at least `n_min` steps; returns the step
    /// count and the final point.
    fn run_in(&self, p: Point2, n_min: usize) -> Result<(usize, Point2)> {
        let n_max = self.cfg.escape.n_max;
        let mut cur = p;
        let mut entered = false;
        let mut n = 0usize;
        loop {
            if self.escaped(cur) {
                return Err(Error::NotInBasin(BasinMiss::Escaped(n)));
            }
            entered = entered || self.petal.contains(cur);
            if entered && n >= n_min {
                return Ok((n, cur));
            }
            if !entered && n >= n_max {
                return Err(Error::NotInBasin(BasinMiss::BoundedOther));
            }
            cur = self.map.apply(cur);
            n += 1;
        }
    }

    fn phi_in_at(&self, p: Point2, n_min: usize) -> Result<FatouValue> {
        let (n, q) = self.run_in(p, n_min)?;
        let value = self.series.eval(q.x, Side::Incoming) - n as f64;
        let off_manifold = self.b.norm().powi(n as i32) * (n * n) as f64;
        let err = self.series.tail_estimate(q.x) + off_manifold + 4.0 * f64::EPSILON * (n as f64 + value.norm());
        Ok(FatouValue { value, err })
    }

    /// Incoming Fatou coordinate of a normalized-frame point of the basin.
    pub fn phi_in(&self, p: Point2, tol: f64) -> Result<FatouValue> {
        let mut n_min = self.n_min;
        loop {
            let v = self.phi_in_at(p, n_min)?;
            if v.err <= tol {
                return Ok(v);
            }
            if n_min > self.cfg.escape.n_max {
                return Err(Error::BudgetExceeded(format!("phi_in error {:.2e} above tol {tol:.2e}", v.err)));
            }
            n_min *= 2;
        }
    }

    /// `phi_in` with the default 1e-8 target.
    pub fn phi_in_value(&self, p: Point2) -> Result<C64> {
        self.phi_in(p, 1e-8).map(|v| v.value)
    }

    /// Deepening check: difference between the default and a much deeper evaluation.
    pub fn phi_in_deepening(&self, p: Point2) -> Result<f64> {
        let a = self.phi_in_at(p, self.n_min)?;
        let b = self.phi_in_at(p, self.n_min * 8)?;
        Ok((a.value - b.value).norm())
    }

    /// Solve `phi_out(X, h(X)) = s` near the origin on the outgoing side.
    fn outgoing_seed(&self, s: C64) -> Result<Point2> {
        let mut x = -s.inv();
        let mut last = f64::INFINITY;
        for _ in 0..60 {
            let f = self.series.eval(x, Side::Outgoing) - s;
            let dx = f / self.series.eval_deriv(x);
            x -= dx;
            let d = dx.norm();
            // Stop at convergence or once roundoff stalls the step size.
            if d <= 1e-16 * x.norm() || (d >= last && d <= 1e-13 * x.norm()) {
                return Ok(Point2::new(x, self.sigma.eval(x)));
            }
            last = d;
        }
        Err(Error::NewtonFailed(format!("outgoing seed for s = {s}")))
    }

    /// `(phi_out)^{-1}(zeta)` seeded at depth `depth`.
    pub fn phi_out_inverse_at(&self, zeta: C64, depth: usize) -> Result<Point2> {
        let n = (zeta.re + depth as f64).ceil().max(0.0) as usize;
        let mut p = self.outgoing_seed(zeta - n as f64)?;
        for k in 0..n {
            p = self.map.apply(p);
            if self.escaped(p) {
                return Err(Error::NotInBasin(BasinMiss::Escaped(k + 1)));
            }
        }
        Ok(p)
    }

    pub fn phi_out_inverse(&self, zeta: C64) -> Result<Point2> {
        self.phi_out_inverse_at(zeta, self.cfg.seed_depth)
    }

    /// Point on Sigma together with the deepening discrepancy that certifies it.
    pub fn phi_out_inverse_certified(&self, zeta: C64, tol: f64) -> Result<(Point2, f64)> {
        let p = self.phi_out_inverse_at(zeta, self.cfg.seed_depth)?;
        let p2 = self.phi_out_inverse_at(zeta, self.cfg.seed_depth + self.cfg.deepen)?;
        let d = p.dist(&p2);
        let scale = 1.0 + p.norm();
        if d > tol * scale {
            return Err(Error::BudgetExceeded(format!("outgoing deepening moved the point by {d:.2e}")));
        }
        Ok((p, d))
    }

    /// `(1/n) log dist` and `n^2 |dX|` after n steps, in extended precision.
    pub fn fiber_rates_dd(&self, p1: &PointDd, p2: &PointDd, n: usize) -> FiberRates {
        let (mut a, mut b) = (*p1, *p2);
        let mut underflow_at = None;
        let dist = |a: &PointDd, b: &PointDd| {
            let dx = norm_dd(a[0] - b[0]);
            let dy = norm_dd(a[1] - b[1]);
            (dx * dx + dy * dy).sqrt()
        };
        if dist(&a, &b) == 0.0 {
            underflow_at = Some(0);
        }
        for k in 1..=n {
            let (x, y) = self.map.eval(a[0], a[1]);
            a = [x, y];
            let (x, y) = self.map.eval(b[0], b[1]);
            b = [x, y];
            if underflow_at.is_none() && dist(&a, &b) == 0.0 {
                underflow_at = Some(k);
            }
        }
        let d = dist(&a, &b);
        let stable_rate = if d == 0.0 { f64::NEG_INFINITY } else { d.ln() / n as f64 };
        let quadratic_product = (n as f64).powi(2) * norm_dd(a[0] - b[0]);
        FiberRates { stable_rate, quadratic_product, underflow_at }
    }

    pub fn fiber_rates(&self, p1: Point2, p2: Point2, n: usize) -> FiberRates {
        self.fiber_rates_dd(&point_to_dd(p1), &point_to_dd(p2), n)
    }

    /// A point `(X2, y2)` on the strong-stable fiber of `p1`, i.e. with
    /// `phi_in(X2, y2) = phi_in(p1)`, resolved to extended precision.
    ///
    /// A double-precision point can only sit on a fiber to about 1e-16 in
    /// the center direction, which swamps the `|b|^n` contraction after a few
    /// dozen steps; so the final solve requires the center component of
    /// `F^m(p2) - F^m(p1)` to vanish, computed in double-double.
    pub fn fiber_partner(&self, p1: Point2, y2: C64) -> Result<PointDd> {
        let target = self.phi_in(p1, 1e-10)?.value;
        let mut x2 = p1.x;
        for _ in 0..40 {
            let f = self.phi_in(Point2::new(x2, y2), 1e-10)?.value - target;
            let h = 1e-7 * (1.0 + x2.norm());
            let fp = self.phi_in(Point2::new(x2 + h, y2), 1e-10)?.value;
            let fm = self.phi_in(Point2::new(x2 - h, y2), 1e-10)?.value;
            let dx = f / ((fp - fm) / (2.0 * h));
            x2 -= dx;
            if dx.norm() < 1e-14 * (1.0 + x2.norm()) {
                break;
            }
        }
        let m = 100;
        let kk = 200;
        let mut o1 = point_to_dd(p1);
        for _ in 0..m {
            let (x, y) = self.map.eval(o1[0], o1[1]);
            o1 = [x, y];
        }
        // Center covector at F^m(p1): pull (1, 0) back along the orbit.
        let mut orbit = vec![point_from_dd(&o1)];
        for _ in 0..kk {
            orbit.push(self.map.apply(*orbit.last().unwrap()));
        }
        let mut ell = [ONE, ZERO];
        for q in orbit[..kk].iter().rev() {
            let j = self.map.jacobian(*q);
            let l0 = ell[0] * j.m[0][0] + ell[1] * j.m[1][0];
            let l1 = ell[0] * j.m[0][1] + ell[1] * j.m[1][1];
            let s = (l0.norm_sqr() + l1.norm_sqr()).sqrt();
            ell = [l0 / s, l1 / s];
        }
        let ell_dd = [to_dd(ell[0]), to_dd(ell[1])];
        let mut x2_dd = to_dd(x2);
        let y2_dd = to_dd(y2);
        for _ in 0..8 {
            let mut o2 = [x2_dd, y2_dd];
            let mut jet = crate::dynamics::Jet2::identity(Point2::new(x2, y2));
            for _ in 0..m {
                let (x, y) = self.map.eval(o2[0], o2[1]);
                o2 = [x, y];
                jet = jet.step(&self.map);
            }
            let c = ell_dd[0] * (o2[0] - o1[0]) + ell_dd[1] * (o2[1] - o1[1]);
            let dcdx = ell[0] * jet.deriv.m[0][0] + ell[1] * jet.deriv.m[1][0];
            let step = c / to_dd(dcdx);
            x2_dd -= step;
            if norm_dd(step) < 1e-33 {
                break;
            }
        }
        Ok([x2_dd, y2_dd])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::HenonParams;
    use crate::scalar::c;

    fn eng() -> FatouEngine<NormalizedHenon> {
        FatouEngine::henon(c(0.3, 0.0), FatouConfig::default()).unwrap()
    }

    #[test]
    fn q_values() {
        assert!((q_of_henon(c(0.3, 0.0)).unwrap() - c(-13.0 / 7.0, 0.0)).norm() < 1e-15);
        assert!((q_of_henon(c(0.0, 0.0)).unwrap() - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((q_of_henon(c(0.5, 0.0)).unwrap() - c(-3.0, 0.0)).norm() < 1e-15);
        assert!(q_of_henon(ONE).is_err());
        let d = ParabolicData::henon(c(0.3, 0.0)).unwrap();
        assert!((d.c0_plus - c(0.0, -5.834_386_356_666_759)).norm() < 1e-12);
        assert_eq!(d.c0_plus + d.c0_minus, ZERO);
    }

    #[test]
    fn frame_conjugates_henon_to_normal_form() {
        let a = c(0.3, 0.0);
        let f = HenonParams::new(a, c(0.01, 0.0)).unwrap();
        let fr = EigenFrame::henon(a).unwrap();
        let g = NormalizedHenon::from_params(&f);
        let p = Point2::new(c(0.03, -0.02), c(0.1, 0.05));
        let lhs = fr.to_normalized(f.apply(fr.from_normalized(p)));
        assert!(lhs.dist(&g.apply(p)) < 1e-15);
        assert!(fr.to_normalized(fr.from_normalized(p)).dist(&p) < 1e-15);
        assert_eq!(fr.to_normalized(Point2::ORIGIN), Point2::ORIGIN);
        // Basis columns are eigenvectors of the linear part.
        let lin = Mat2::new(ONE + a, -a, ONE, ZERO);
        for (col, lam) in [(0, ONE), (1, a)] {
            let v = fr.basis.column(col);
            assert!((lin.apply(v) - v * lam).norm() < 1e-12);
        }
    }

    #[test]
    fn normalized_quadratic_coefficient_is_one() {
        // Second difference along the center direction, through the frame.
        let a = c(0.3, 0.0);
        let f = HenonParams::new(a, ZERO).unwrap();
        let fr = EigenFrame::henon(a).unwrap();
        let g = |t: f64| fr.to_normalized(f.apply(fr.from_normalized(Point2::real(t, 0.0)))).x;
        let h = 1e-3;
        let second = (g(h) - g(0.0) * 2.0 + g(-h)) / (h * h);
        assert!((second / 2.0 - ONE).norm() < 1e-8);
    }

    #[test]
    fn sigma_coefficients() {
        let e = eng();
        assert_eq!(e.sigma.coeffs[0], ZERO);
        assert_eq!(e.sigma.coeffs[1], ZERO);
        // h_2 = 1/(a-1) by hand: Y' = aY - X^2 - ..., h(X + X^2) = h_2 X^2 + ...
        assert!((e.sigma.coeffs[2] - c(1.0 / (0.3 - 1.0), 0.0)).norm() < 1e-14);
        let g = e.sigma.restricted(&e.map);
        assert!((g.coeff(3) - c(2.0 * 0.3 / (0.3 - 1.0), 0.0)).norm() < 1e-13);
    }

    #[test]
    fn sigma_residual_order() {
        let e = eng();
        let n = e.sigma.order as f64;
        let r1 = e.sigma.residual(&e.map, c(0.05, 0.0));
        let r2 = e.sigma.residual(&e.map, c(0.025, 0.0));
        let observed = (r1 / r2).log2();
        assert!(observed >= n - 0.5, "observed order {observed}");
    }

    #[test]
    fn decoupled_model_has_flat_sigma() {
        let fam = ModelFamily2D::new(
            crate::dynamics::BiPoly::new(vec![(0, 0, ONE), (1, 0, c(0.5, 0.0))]),
            vec![c(0.3, 0.0)],
            crate::dynamics::BiPoly::default(),
        )
        .unwrap();
        let e = FatouEngine::model_2d(&fam, FatouConfig::default()).unwrap();
        assert!(e.sigma.coeffs.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn fatou_series_abel_residual_is_small() {
        let e = eng();
        let g = e.sigma.restricted(&e.map);
        let r = e.series.abel_residual_series(&g.shift_down());
        for m in 0..g.order() {
            assert!(r.coeff(m).norm() < 1e-9, "order {m}: {}", r.coeff(m));
        }
    }

    #[test]
    fn quadratic_model_series_matches_known_terms() {
        // f = x + x^2: phi = -1/x + log(-x) - x/2 + x^2/3 + ...
        let e = FatouEngine::model_1d(&ModelFamily1D::quadratic(), FatouConfig::default()).unwrap();
        assert_eq!(e.data.q, c(-1.0, 0.0));
        assert!((e.series.d[1] - c(-0.5, 0.0)).norm() < 1e-13);
        assert!((e.series.d[2] - c(1.0 / 3.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn phi_in_abel_equation_and_bound() {
        let e = eng();
        for p in [Point2::real(-0.05, 0.0), Point2::real(-0.1, 0.02), Point2::new(c(-0.3, 0.1), ZERO)] {
            let v0 = e.phi_in(p, 1e-8).unwrap();
            let v1 = e.phi_in(e.map.apply(p), 1e-8).unwrap();
            assert!((v1.value - v0.value - ONE).norm() < 1e-9);
            assert!(e.phi_in_deepening(p).unwrap() < 1e-9);
            let w = -p.x.inv() - e.data.q * (-p.x).ln();
            assert!((v0.value - w).norm() < 10.0);
        }
    }

    #[test]
    fn phi_in_reference_value() {
        // Value from an independent numpy implementation of the same algorithm.
        let v = eng().phi_in(Point2::real(-0.05, 0.0), 1e-8).unwrap();
        assert!((v.value - c(14.560_126_199_32, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn phi_in_rejects_escaping_point() {
        let e = eng();
        assert!(matches!(e.phi_in(Point2::real(5.0, 0.0), 1e-8), Err(Error::NotInBasin(BasinMiss::Escaped(_)))));
    }

    #[test]
    fn phi_out_inverse_shift_and_deepening() {
        let e = eng();
        for z in [c(0.3, 3.5), c(-3.0, -4.0), c(1.2, 9.5), c(0.4, 6.0)] {
            let p = e.phi_out_inverse(z).unwrap();
            let p1 = e.phi_out_inverse(z + ONE).unwrap();
            assert!(p1.dist(&e.map.apply(p)) < 1e-8 * (1.0 + p.norm()));
            let (_, d) = e.phi_out_inverse_certified(z, 1e-8).unwrap();
            assert!(d < 1e-8 * (1.0 + p.norm()));
        }
        let p = e.phi_out_inverse(c(-50.0, 0.0)).unwrap();
        // -1/x - q log x = -50 puts |x| near 1/(50 + q log 50).
        assert!((e.series.eval(p.x, Side::Outgoing) + 50.0).norm() < 1e-12);
        assert!((p.x.norm() * 50.0 - 1.0).abs() < 0.2);
        assert!((p.y - e.sigma.eval(p.x)).norm() < 1e-15);
    }

    #[test]
    fn equal_pair_rate_is_zero_distance() {
        let e = eng();
        let p = Point2::real(-0.05, 0.0);
        let r = e.fiber_rates(p, p, 10);
        assert_eq!(r.stable_rate, f64::NEG_INFINITY);
        assert_eq!(r.underflow_at, Some(0));
    }

    #[test]
    fn frame_compose_escape_radius() {
        let e = eng();
        assert!(e.escaped(e.frame.to_normalized(Point2::real(11.0, 0.0))));
        assert!(!e.escaped(Point2::ORIGIN));
        let _ = I;
    }
}
