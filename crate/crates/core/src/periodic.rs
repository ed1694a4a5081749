//! Periodic orbits: Newton on the composed map, the 2-cycle that stays a
//! saddle through the bifurcation, unstable-manifold uniformization, and the
//! saddle-creation experiment near a repelling fixed point of `h_alpha`.

use crate::almost_fatou::{alpha_sequence_eps, AlphaSequence, SequenceKind};
use crate::dynamics::{HenonParams, Jet2, NormalizedHenon, PlaneMap};
use crate::error::{Error, Result};
use crate::escape::{classify_forward, green_plus, par_grid, EscapeConfig, GreenDirection, Grid, PointClass};
use crate::fatou::{EigenFrame, FatouEngine};
use crate::geometry::{Mat2, Point2};
use crate::lavaurs::{transition_h, transition_h_deriv, ZetaBox};
use crate::scalar::{Series, C64, ONE, ZERO};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitKind {
    Saddle,
    Sink,
    Source,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub points: Vec<Point2>,
    /// Eigenvalues of the Jacobian product, larger modulus first. The small
    /// one underflows to zero for long strongly dissipative orbits; the logs
    /// below stay meaningful.
    pub multipliers: (C64, C64),
    /// Logs of the multipliers. The first comes from the forward product,
    /// the second independently from the product of inverse Jacobians.
    pub log_multipliers: (C64, C64),
    pub kind: OrbitKind,
    /// `|F^period(p0) - p0|`.
    pub residual: f64,
}

impl PeriodicOrbit {
    pub fn period(&self) -> usize {
        self.points.len()
    }

    /// `|Re(log l1 + log l2) - period * ln|a||` plus the phase mismatch.
    pub fn log_det_defect(&self, a: C64) -> f64 {
        let s = self.log_multipliers.0 + self.log_multipliers.1;
        let t = C64::new(a.norm().ln(), a.arg()) * self.period() as f64;
        let d = s - t;
        let tau = 2.0 * std::f64::consts::PI;
        let ph = d.im - tau * (d.im / tau).round();
        d.re.hypot(ph)
    }
}

/// Product `J_{n-1} ... J_0` kept as a unit-size matrix times `exp(scale)`.
fn scaled_product(mats: impl Iterator<Item = Mat2>) -> Result<(Mat2, f64)> {
    let mut m = Mat2::IDENTITY;
    let mut scale = 0.0;
    for j in mats {
        m = j * m;
        let s = m.max_abs();
        if !s.is_finite() || s == 0.0 {
            return Err(Error::Overflow);
        }
        m = Mat2::new(m.m[0][0] / s, m.m[0][1] / s, m.m[1][0] / s, m.m[1][1] / s);
        scale += s.ln();
    }
    Ok((m, scale))
}

fn dominant_log(m: &Mat2, scale: f64) -> C64 {
    let (_, big) = m.eigenvalues();
    big.ln() + scale
}

/// Multipliers of a cycle from its points, in log space.
pub fn cycle_multipliers<M: PlaneMap>(map: &M, points: &[Point2]) -> Result<((C64, C64), (C64, C64))> {
    let (mf, sf) = scaled_product(points.iter().map(|p| map.jacobian(*p)))?;
    let l1 = dominant_log(&mf, sf);
    let invs: Vec<Mat2> =
        points.iter().map(|p| map.jacobian(*p).inverse().ok_or(Error::Singular)).collect::<Result<_>>()?;
    // M^{-1} = J_0^{-1} ... J_{n-1}^{-1}: fold from the last point backward.
    let (mb, sb) = scaled_product(invs.into_iter().rev())?;
    let l2 = -dominant_log(&mb, sb);
    Ok(((l1.exp(), l2.exp()), (l1, l2)))
}

fn kind_from_logs(l: (C64, C64)) -> OrbitKind {
    let tol = 1e-9;
    let out = |x: C64| x.re > tol;
    let inn = |x: C64| x.re < -tol;
    match (out(l.0), out(l.1), inn(l.0), inn(l.1)) {
        (true, false, _, true) | (false, true, true, _) => OrbitKind::Saddle,
        (true, true, _, _) => OrbitKind::Source,
        (_, _, true, true) => OrbitKind::Sink,
        _ => OrbitKind::Neutral,
    }
}

fn compose_residual<M: PlaneMap>(map: &M, p: Point2, n: usize) -> f64 {
    let mut q = p;
    for _ in 0..n {
        q = map.apply(q);
    }
    q.dist(&p)
}

/// Build the orbit record for a point known to be periodic with period `period`.
pub fn orbit_from_point<M: PlaneMap>(map: &M, p: Point2, period: usize) -> Result<PeriodicOrbit> {
    let mut points = Vec::with_capacity(period);
    let mut q = p;
    for _ in 0..period {
        points.push(q);
        q = map.apply(q);
    }
    let residual = q.dist(&p);
    let (multipliers, log_multipliers) = cycle_multipliers(map, &points)?;
    Ok(PeriodicOrbit { points, multipliers, log_multipliers, kind: kind_from_logs(log_multipliers), residual })
}

/// Smallest divisor d of `period` with `F^d(p) = p` to `tol`.
pub fn minimal_period<M: PlaneMap>(map: &M, p: Point2, period: usize, tol: f64) -> usize {
    (1..=period)
        .filter(|d| period.is_multiple_of(*d))
        .find(|&d| compose_residual(map, p, d) < tol * (1.0 + p.norm()))
        .unwrap_or(period)
}

/// Newton on `F^period - id` with Jet2 Jacobians and step halving.
pub fn newton_periodic<M: PlaneMap>(map: &M, period: usize, guess: Point2, tol: f64) -> Result<PeriodicOrbit> {
    if period == 0 {
        return Err(Error::InvalidParams("period must be at least 1".into()));
    }
    let residual_at = |p: Point2| -> Result<(Point2, Mat2)> {
        let mut jet = Jet2::identity(p);
        for _ in 0..period {
            jet = jet.step(map);
        }
        if !jet.value.is_finite() || !jet.deriv.max_abs().is_finite() {
            return Err(Error::Overflow);
        }
        Ok((jet.value - p, jet.deriv.sub_identity(ONE)))
    };
    let mut p = guess;
    let (mut g, mut dg) = residual_at(p)?;
    for _ in 0..50 {
        if g.norm() < tol * (1.0 + p.norm()) {
            let d = minimal_period(map, p, period, tol.max(1e-12) * 100.0);
            let orbit = orbit_from_point(map, p, d)?;
            if orbit.residual >= 1e-10 * (1.0 + p.norm()) {
                return Err(Error::NewtonFailed(format!("residual {:.2e} after convergence", orbit.residual)));
            }
            return Ok(orbit);
        }
        let step = dg.solve(g).ok_or(Error::Singular)?;
        if !step.is_finite() {
            return Err(Error::Singular);
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=10 {
            let cand = p - step * C64::new(t, 0.0);
            if let Ok((gc, dgc)) = residual_at(cand) {
                if gc.norm() < g.norm() {
                    p = cand;
                    g = gc;
                    dg = dgc;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonFailed(format!("no decrease from residual {:.2e}", g.norm())));
        }
    }
    Err(Error::NewtonFailed(format!("no convergence in 50 steps, residual {:.2e}", g.norm())))
}

/// The 2-cycle `{(p, q), (q, p)}`, `p, q = -(1+a)(1 -+ i)` at eps = 0; for
/// eps != 0 continued along the segment from 0.
pub fn two_cycle(a: C64, eps: C64) -> Result<PeriodicOrbit> {
    let f0 = HenonParams::new(a, ZERO)?;
    let s = -(ONE + a);
    let p = s * C64::new(1.0, -1.0);
    let q = s * C64::new(1.0, 1.0);
    let mut pt = Point2::new(p, q);
    if eps == ZERO {
        return orbit_from_point(&f0, pt, 2);
    }
    let steps = 20;
    let mut orbit = None;
    for k in 1..=steps {
        let f = f0.with_eps(eps * (k as f64 / steps as f64));
        let o = newton_periodic(&f, 2, pt, 1e-13)?;
        if o.period() != 2 {
            return Err(Error::NewtonFailed("2-cycle continuation collapsed onto a fixed point".into()));
        }
        pt = o.points[0];
        orbit = Some(o);
    }
    orbit.ok_or(Error::Singular)
}

/// `gamma(t) = Q + v t + sum c_k t^k` with `F^period(gamma(t)) = gamma(lambda t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnstableParam {
    pub base: PeriodicOrbit,
    pub lambda: C64,
    pub coeffs: Vec<Point2>,
    pub order: usize,
    /// Series trust radius.
    pub t0: f64,
}

fn map_series<M: PlaneMap>(map: &M, x: Series, y: Series, n: usize) -> (Series, Series) {
    let (mut x, mut y) = (x, y);
    for _ in 0..n {
        let (a, b) = map.eval(x, y);
        x = a;
        y = b;
    }
    (x, y)
}

fn series_of(coeffs: &[Point2], order: usize) -> (Series, Series) {
    let xs: Vec<C64> = coeffs.iter().map(|p| p.x).collect();
    let ys: Vec<C64> = coeffs.iter().map(|p| p.y).collect();
    (Series::from_coeffs(order, &xs), Series::from_coeffs(order, &ys))
}

pub fn unstable_param<M: PlaneMap>(map: &M, orbit: &PeriodicOrbit, order: usize) -> Result<UnstableParam> {
    if orbit.kind != OrbitKind::Saddle {
        return Err(Error::InvalidParams("unstable parametrization needs a saddle".into()));
    }
    if order < 2 {
        return Err(Error::InvalidParams("order must be at least 2".into()));
    }
    let period = orbit.period();
    let q = orbit.points[0];
    let mut jet = Jet2::identity(q);
    for _ in 0..period {
        jet = jet.step(map);
    }
    let a = jet.deriv;
    let (l_small, l_big) = a.eigenvalues();
    let lambda = if l_big.norm() > 1.0 { l_big } else { l_small };
    let v = a.eigenvector(lambda);
    let v = v * C64::new(1.0 / v.norm(), 0.0);
    let mut coeffs = vec![q, v];
    let mut lk = lambda;
    for k in 2..=order {
        lk *= lambda;
        let mut trial = coeffs.clone();
        trial.push(Point2::ORIGIN);
        let (sx, sy) = series_of(&trial, order);
        let (gx, gy) = map_series(map, sx, sy, period);
        let rk = Point2::new(gx.coeff(k), gy.coeff(k));
        let ck = a.sub_identity(lk).solve(rk * C64::new(-1.0, 0.0)).ok_or(Error::Singular)?;
        coeffs.push(ck);
    }
    let cn = coeffs[order].norm().max(1e-300);
    let t0 = (1e-12 / cn).powf(1.0 / order as f64).min(1.0);
    Ok(UnstableParam { base: orbit.clone(), lambda, coeffs, order, t0 })
}

impl UnstableParam {
    pub fn eval_series(&self, t: C64) -> Point2 {
        let mut acc = Point2::ORIGIN;
        for c in self.coeffs.iter().rev() {
            acc = acc * t + *c;
        }
        acc
    }

    pub fn eval<M: PlaneMap>(&self, map: &M, t: C64) -> Point2 {
        let r = t.norm();
        let m = if r <= self.t0 { 0 } else { ((r / self.t0).ln() / self.lambda.norm().ln()).ceil() as usize };
        let mut p = self.eval_series(t / self.lambda.powi(m as i32));
        for _ in 0..m * self.base.period() {
            if !p.is_finite() {
                break;
            }
            p = map.apply(p);
        }
        p
    }

    /// `|F^period(gamma(t)) - gamma(lambda t)|` with the series alone.
    pub fn conjugacy_residual<M: PlaneMap>(&self, map: &M, t: C64) -> f64 {
        let mut p = self.eval_series(t);
        for _ in 0..self.base.period() {
            p = map.apply(p);
        }
        p.dist(&self.eval_series(self.lambda * t))
    }
}

/// `t = center + scale (u + i v)` with `u, v` in `[-1, 1]` at pixel centres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnstableWindow {
    pub center: C64,
    pub scale: C64,
    pub width: usize,
    pub height: usize,
}

impl UnstableWindow {
    pub fn t(&self, i: usize, j: usize) -> C64 {
        let u = -1.0 + (2.0 * j as f64 + 1.0) / self.width as f64;
        let v = 1.0 - (2.0 * i as f64 + 1.0) / self.height as f64;
        self.center + self.scale * C64::new(u, v)
    }

    pub fn scaled(&self, f: C64) -> Self {
        UnstableWindow { center: self.center * f, scale: self.scale * f, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UnstableGrid {
    Green(Grid<f64>),
    Class(Grid<PointClass>),
}

pub fn unstable_slice_grid<M: PlaneMap>(
    map: &M,
    frame: Option<&EigenFrame>,
    param: &UnstableParam,
    window: &UnstableWindow,
    cfg: &EscapeConfig,
    green: bool,
) -> Result<UnstableGrid> {
    cfg.validate()?;
    if window.width == 0 || window.height == 0 || window.scale == ZERO {
        return Err(Error::InvalidParams("empty unstable-slice window".into()));
    }
    let (w, h) = (window.width, window.height);
    Ok(if green {
        UnstableGrid::Green(par_grid(w, h, |i, j| {
            green_plus(map, param.eval(map, window.t(i, j)), cfg, GreenDirection::Forward)
        }))
    } else {
        UnstableGrid::Class(par_grid(w, h, |i, j| classify_forward(map, frame, param.eval(map, window.t(i, j)), cfg)))
    })
}

/// Candidate `zeta0` with `|h_0'(zeta0)| > min_mod`, scanned over a grid.
pub fn repelling_seed<M: PlaneMap>(eng: &FatouEngine<M>, bx: &ZetaBox, n: usize, min_mod: f64) -> Option<(C64, C64)> {
    let mut best: Option<(C64, f64)> = None;
    for i in 0..n {
        for j in 0..n {
            let z = bx.point(i, j, n, n);
            if let Ok(d) = transition_h_deriv(eng, ZERO, z, 1e-5) {
                let m = d.norm();
                if m > min_mod && best.is_none_or(|b| m < b.1) {
                    best = Some((z, m));
                }
            }
        }
    }
    let (z, _) = best?;
    Some((z, z - transition_h(eng, ZERO, z).ok()?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleRecord {
    pub a: C64,
    pub alpha: C64,
    pub zeta0: C64,
    pub j: usize,
    pub mu: usize,
    /// `(phi_out)^{-1}(zeta0)` in original coordinates.
    pub p0: Point2,
    pub eps: C64,
    pub eps_prime: C64,
    /// The orbit in original coordinates.
    pub orbit: PeriodicOrbit,
    pub dist: f64,
}

/// Newton from `p0 = (phi_out)^{-1}(zeta0)` on `F^{j mu}_{eps_j}`.
pub fn saddle_creation(
    eng: &FatouEngine<NormalizedHenon>,
    alpha: C64,
    zeta0: C64,
    j: usize,
    mu: usize,
) -> Result<SaddleRecord> {
    let a = eng.map.a;
    let seq = AlphaSequence::henon(alpha, SequenceKind::Full, a);
    let t = alpha_sequence_eps(&seq, j)?;
    let p0n = eng.phi_out_inverse(zeta0)?;
    let map = NormalizedHenon { a, eps_prime: t.eps_prime };
    let orb = newton_periodic(&map, j * mu, p0n, 1e-13)?;
    // The multipliers do not depend on the linear frame; the points do.
    let points: Vec<Point2> = orb.points.iter().map(|p| eng.frame.from_normalized(*p)).collect();
    let p0 = eng.frame.from_normalized(p0n);
    let dist = points[0].dist(&p0);
    let f = HenonParams::new(a, t.eps)?;
    let residual = compose_residual(&f, points[0], points.len());
    let orbit = PeriodicOrbit { points, residual, ..orb };
    Ok(SaddleRecord { a, alpha, zeta0, j, mu, p0, eps: t.eps, eps_prime: t.eps_prime, orbit, dist })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::fixed_points;
    use crate::scalar::c;

    #[test]
    fn period_one_finds_fixed_point() {
        let f = HenonParams::real(0.3, 0.05).unwrap();
        let o = newton_periodic(&f, 1, Point2::new(c(0.0, 0.04), ZERO), 1e-14).unwrap();
        let fp = fixed_points(&f)[0];
        assert!(o.points[0].dist(&fp) < 1e-12);
        assert!((o.points[0].x - c(0.0, 0.05 * 0.7f64.sqrt())).norm() < 1e-12);
    }

    #[test]
    fn far_guess_never_returns_nonperiodic() {
        let f = HenonParams::real(0.3, 0.05).unwrap();
        if let Ok(o) = newton_periodic(&f, 1, Point2::real(3.0, -2.0), 1e-13) {
            assert!(o.residual < 1e-10);
        }
    }

    #[test]
    fn two_cycle_closed_form() {
        let o = two_cycle(c(0.3, 0.0), ZERO).unwrap();
        assert!((o.points[0].x - c(-1.3, 1.3)).norm() < 1e-15);
        assert!((o.points[0].y - c(-1.3, -1.3)).norm() < 1e-15);
        assert!(o.residual < 1e-12);
        assert_ne!(o.points[0], o.points[1]);
        assert_eq!(o.kind, OrbitKind::Saddle);
        let m = o.multipliers.0.norm();
        assert!(m > 6.0 && m < 10.0, "{m}");
        let n =
            newton_periodic(&HenonParams::real(0.3, 0.0).unwrap(), 2, Point2::new(c(-1.2, 1.4), c(-1.4, -1.2)), 1e-14)
                .unwrap();
        assert!(n.points.iter().any(|p| p.dist(&o.points[0]) < 1e-11));
    }

    #[test]
    fn two_cycle_continues_in_eps() {
        let o = two_cycle(c(0.3, 0.0), c(0.05, 0.0)).unwrap();
        assert_eq!(o.period(), 2);
        assert_eq!(o.kind, OrbitKind::Saddle);
        assert!(o.residual < 1e-12);
    }

    #[test]
    fn multiplier_logs_match_det() {
        let o = two_cycle(c(0.3, 0.0), ZERO).unwrap();
        let direct = (o.multipliers.0 * o.multipliers.1 - c(0.09, 0.0)).norm();
        assert!(direct < 1e-12);
        assert!(o.log_det_defect(c(0.3, 0.0)) < 1e-12);
    }

    #[test]
    fn unstable_param_basics_and_order() {
        let f = HenonParams::real(0.3, 0.0).unwrap();
        let o = two_cycle(f.a, ZERO).unwrap();
        let u = unstable_param(&f, &o, 12).unwrap();
        assert_eq!(u.eval_series(ZERO), o.points[0]);
        let t = c(u.t0, 0.0);
        let r1 = u.conjugacy_residual(&f, t);
        let r2 = u.conjugacy_residual(&f, t * 0.5);
        if r1 > 1e-13 {
            assert!((r1 / r2).log2() > 9.0, "{r1} {r2}");
        }
        let big = c(3.0 * u.t0, 1.0 * u.t0);
        let p = u.eval(&f, big);
        let q = u.eval(&f, big / u.lambda);
        assert!(f.apply(f.apply(q)).dist(&p) < 1e-9 * (1.0 + p.norm()));
    }

    #[test]
    fn unstable_param_rejects_non_saddle() {
        let f = HenonParams::real(0.3, 0.05).unwrap();
        let o = newton_periodic(&f, 1, Point2::new(c(0.0, 0.04), ZERO), 1e-14).unwrap();
        if o.kind != OrbitKind::Saddle {
            assert!(unstable_param(&f, &o, 8).is_err());
        }
    }

    #[test]
    fn minimal_period_detects_divisor() {
        let f = HenonParams::real(0.3, 0.0).unwrap();
        let o = two_cycle(f.a, ZERO).unwrap();
        assert_eq!(minimal_period(&f, o.points[0], 6, 1e-10), 2);
    }
}
