//! Almost-Fatou coordinates for eps != 0 on the model families
//! `x + (x^2 + eps^2) alpha(x, y)`.
//!
//! All orbit-wise quantities are accumulated from exact one-step increments,
//! so the arctan and log branches are continued along the orbit instead of
//! jumping at the principal cuts.

use crate::dynamics::{ModelFamily1D, ModelFamily2D, PlaneMap};
use crate::error::{Error, Result};
use crate::fatou::Side;
use crate::geometry::Point2;
use crate::scalar::{ln_1p, C64, I, ONE, ZERO};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A family in the form `(x + (x^2+eps^2) alpha, b(x) y + (x^2+eps^2) beta)`.
pub trait NearParabolicFamily: Sync {
    fn q(&self) -> C64;
    /// y-coefficient of alpha (zero in one dimension).
    fn r(&self) -> C64 {
        ZERO
    }
    fn b(&self) -> C64 {
        ZERO
    }
    fn alpha_at(&self, eps: C64, p: Point2) -> C64;
    fn step(&self, eps: C64, p: Point2) -> Point2;
}

impl NearParabolicFamily for ModelFamily1D {
    fn q(&self) -> C64 {
        ModelFamily1D::q(self)
    }
    fn alpha_at(&self, _eps: C64, p: Point2) -> C64 {
        self.alpha(&p.x)
    }
    fn step(&self, eps: C64, p: Point2) -> Point2 {
        Point2::new(self.apply_1d(eps, p.x), ZERO)
    }
}

impl NearParabolicFamily for ModelFamily2D {
    fn q(&self) -> C64 {
        ModelFamily2D::q(self)
    }
    fn r(&self) -> C64 {
        ModelFamily2D::r(self)
    }
    fn b(&self) -> C64 {
        ModelFamily2D::b(self)
    }
    fn alpha_at(&self, _eps: C64, p: Point2) -> C64 {
        self.alpha.eval(&p.x, &p.y)
    }
    fn step(&self, eps: C64, p: Point2) -> Point2 {
        self.at(eps).apply(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlmostFatouParams {
    pub q: C64,
    pub r: C64,
    pub b: C64,
    pub eps: C64,
}

impl AlmostFatouParams {
    pub fn of<Fam: NearParabolicFamily>(fam: &Fam, eps: C64) -> Self {
        AlmostFatouParams { q: fam.q(), r: fam.r(), b: fam.b(), eps }
    }

    /// `Re eps > 0` and `|Im eps| <= c |eps|^2`.
    pub fn check_condition(&self, c: f64) -> Result<()> {
        let e = self.eps;
        if !(e.re > 0.0) || e.im.abs() > c * e.norm_sqr() {
            return Err(Error::InvalidParams(format!("eps = {e} violates Re eps > 0, |Im eps| <= {c} |eps|^2")));
        }
        if self.b.norm() >= 1.0 {
            return Err(Error::InvalidParams("|b| < 1 is required".into()));
        }
        Ok(())
    }
}

/// `(1/e) arctan(e g)`, continuous through `e = 0`.
pub fn atan_over(e: C64, g: C64) -> C64 {
    let z = e * g;
    if z.norm() < 1e-4 {
        let z2 = z * z;
        g * (ONE - z2 / 3.0 + z2 * z2 / 5.0 - z2 * z2 * z2 / 7.0)
    } else {
        (ln_1p(I * z) - ln_1p(-I * z)) / (2.0 * I * e)
    }
}

fn check_pole(x: C64, eps: C64) -> Result<()> {
    let s = x * x + eps * eps;
    if s.norm() <= 1e-300
        || (x - I * eps).norm() < 1e-14 * (1.0 + eps.norm())
        || (x + I * eps).norm() < 1e-14 * (1.0 + eps.norm())
    {
        Err(Error::Pole)
    } else {
        Ok(())
    }
}

/// `(1/eps) arctan(x/eps)` on the principal branch.
pub fn u_eps(x: C64, eps: C64) -> Result<C64> {
    if eps.norm() == 0.0 {
        return Err(Error::InvalidParams("u_eps needs eps != 0".into()));
    }
    check_pole(x, eps)?;
    Ok(((I * eps - x) / (I * eps + x)).ln() / (2.0 * I * eps))
}

/// `u_eps(f x) - u_eps(x)` for the step `f x = x + (x^2+eps^2) alpha`.
pub fn u_increment(x: C64, alpha: C64, eps: C64) -> C64 {
    atan_over(eps, alpha / (ONE + x * alpha))
}

/// `log(x1^2 + eps^2) - log(x^2 + eps^2)` for the same step.
pub fn log_increment(x: C64, alpha: C64, eps: C64) -> C64 {
    let s = x * x + eps * eps;
    ln_1p(x * alpha * 2.0 + s * alpha * alpha)
}

/// `u_eps - (q/2) log(1 + x^2/eps^2)`.
pub fn w_eps(x: C64, p: &AlmostFatouParams) -> Result<C64> {
    let u = u_eps(x, p.eps)?;
    Ok(u - p.q / 2.0 * ln_1p(x * x / (p.eps * p.eps)))
}

/// `w_eps - q log eps +- pi/(2 eps)`, written as
/// `u_eps +- pi/(2 eps) - (q/2) log(eps^2 + x^2)`; converges to
/// `-1/x - q log(-+x)` as eps -> 0 on the matching side.
pub fn w_eps_io(x: C64, p: &AlmostFatouParams, side: Side) -> Result<C64> {
    let u = u_eps(x, p.eps)?;
    let sign = match side {
        Side::Incoming => 1.0,
        Side::Outgoing => -1.0,
    };
    Ok(u + sign * PI / (2.0 * p.eps) - p.q / 2.0 * (p.eps * p.eps + x * x).ln())
}

/// The eps = 0 coordinates `-1/x - q log(-+x)`.
pub fn w0_io(x: C64, q: C64, side: Side) -> C64 {
    let l = match side {
        Side::Incoming => (-x).ln(),
        Side::Outgoing => x.ln(),
    };
    -x.inv() - q * l
}

/// `w(F p) - w(p) - 1` with `w = w_eps(x) + r y/(1-b)`; in one dimension
/// the y-term vanishes. Defined also at eps = 0.
///
/// The x-increment of `w_eps` is `1 + r y + O(2)` and `y' - y = (b-1) y + O(2)`,
/// so the y-correction needs the coefficient `r/(1-b)` to cancel the `r y` term.
pub fn a_eps<Fam: NearParabolicFamily>(fam: &Fam, eps: C64, p: Point2) -> C64 {
    let al = fam.alpha_at(eps, p);
    let dw = u_increment(p.x, al, eps) - fam.q() / 2.0 * log_increment(p.x, al, eps);
    let y_term = if fam.r() != ZERO {
        let img = fam.step(eps, p);
        fam.r() * (img.y - p.y) / (ONE - fam.b())
    } else {
        ZERO
    };
    dw + y_term - ONE
}

/// Region `S(eps, R)`: two disks of radius R whose boundary circles pass
/// through `+-i eps`, centred on the line through 0 in the direction of eps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub eps: C64,
    pub r: f64,
}

impl RegionSpec {
    pub fn new(eps: C64, r: f64) -> Result<Self> {
        if !(eps.norm() < r) {
            return Err(Error::InvalidParams("need |eps| < R".into()));
        }
        Ok(RegionSpec { eps, r })
    }

    fn centre(&self) -> C64 {
        let e = self.eps;
        let dir = if e.norm() > 0.0 { e / e.norm() } else { ONE };
        dir * (self.r * self.r - e.norm_sqr()).sqrt()
    }

    pub fn in_s(&self, x: C64) -> bool {
        let c = self.centre();
        (x - c).norm() < self.r || (x + c).norm() < self.r
    }

    /// Left of the line `eps * iR`.
    pub fn in_h_in(&self, x: C64) -> bool {
        (x * self.eps.conj()).re < 0.0
    }

    pub fn in_h_out(&self, x: C64) -> bool {
        (x * self.eps.conj()).re > 0.0
    }

    pub fn in_s_in(&self, x: C64) -> bool {
        self.in_s(x) && self.in_h_in(x)
    }

    pub fn in_s_out(&self, x: C64) -> bool {
        self.in_s(x) && self.in_h_out(x)
    }

    pub fn in_d(&self, x: C64) -> bool {
        x.norm() < self.eps.norm()
    }
}

/// Outcome of an almost-Fatou orbit evaluation with the measured constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiEpsN {
    pub value: C64,
    /// `max_k |w_eps(f^k x) - w_eps(x) - k|` along the orbit.
    pub k0: f64,
    /// `max_k |x_k| / max(2/k, |eps|)` along the orbit.
    pub c0: f64,
}

/// `phi_{eps,n}`: incoming `w^i(F^n p) - n`, outgoing `w^o(F^{-n} p) + n`,
/// with `w = w_eps + r y/(1-b)` and the orbit confined to `S(eps, R)`.
pub fn phi_eps_n<Fam: NearParabolicFamily>(
    fam: &Fam,
    p: Point2,
    eps: C64,
    n: usize,
    side: Side,
    region_r: f64,
) -> Result<PhiEpsN> {
    let params = AlmostFatouParams::of(fam, eps);
    let region = RegionSpec::new(eps, region_r)?;
    let y_coef = if fam.r() != ZERO { fam.r() / (ONE - fam.b()) } else { ZERO };
    let mut cur = p;
    let mut w = w_eps_io(p.x, &params, side)?;
    let w_start = w;
    let mut k0: f64 = 0.0;
    let mut c0: f64 = 0.0;
    for k in 0..n {
        if !region.in_s(cur.x) {
            return Err(Error::OrbitLeftRegion(k));
        }
        let next = match side {
            Side::Incoming => fam.step(eps, cur),
            Side::Outgoing => inverse_step(fam, eps, cur)?,
        };
        // Increments are taken in the forward direction of the step.
        let (from, alpha_pt) = match side {
            Side::Incoming => (cur, cur),
            Side::Outgoing => (next, next),
        };
        let al = fam.alpha_at(eps, alpha_pt);
        let d = u_increment(from.x, al, eps) - params.q / 2.0 * log_increment(from.x, al, eps);
        match side {
            Side::Incoming => w += d,
            Side::Outgoing => w -= d,
        }
        cur = next;
        let steps = (k + 1) as f64;
        let shift = match side {
            Side::Incoming => steps,
            Side::Outgoing => -steps,
        };
        k0 = k0.max((w - w_start - shift).norm());
        c0 = c0.max(cur.x.norm() / (2.0 / steps).max(eps.norm()));
    }
    if !region.in_s(cur.x) {
        return Err(Error::OrbitLeftRegion(n));
    }
    let shift = match side {
        Side::Incoming => -(n as f64),
        Side::Outgoing => n as f64,
    };
    Ok(PhiEpsN { value: w + y_coef * cur.y + shift, k0, c0 })
}

/// One backward step by Newton on the forward map.
pub fn inverse_step<Fam: NearParabolicFamily>(fam: &Fam, eps: C64, p: Point2) -> Result<Point2> {
    let s = p.x * p.x + eps * eps;
    let mut z = Point2::new(p.x - s, p.y);
    for _ in 0..50 {
        let fz = fam.step(eps, z);
        let r = fz - p;
        if r.norm() <= 1e-16 * (1.0 + p.norm()) {
            return Ok(z);
        }
        // Jacobian by central differences is adequate for this well-conditioned solve.
        let h = 1e-7;
        let jx = (fam.step(eps, z + Point2::new(C64::new(h, 0.0), ZERO))
            - fam.step(eps, z - Point2::new(C64::new(h, 0.0), ZERO)))
            * C64::new(0.5 / h, 0.0);
        let jy = (fam.step(eps, z + Point2::new(ZERO, C64::new(h, 0.0)))
            - fam.step(eps, z - Point2::new(ZERO, C64::new(h, 0.0))))
            * C64::new(0.5 / h, 0.0);
        let mut jac = crate::geometry::Mat2::from_columns(jx, jy);
        if jac.m[1][1].norm() == 0.0 && jac.m[1][0].norm() == 0.0 {
            // One-dimensional family: y is slaved to zero.
            jac.m[1][1] = ONE;
        }
        let dz = jac.solve(r).ok_or(Error::Singular)?;
        z = z - dz;
    }
    Err(Error::NewtonFailed("inverse step".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SequenceKind {
    /// `n_j = j`, so `n_j - pi/eps'_j = alpha` exactly.
    Full,
    /// `n_j = floor(j/2)`, so `pi/(2 eps'_j) - n_j` stays bounded.
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSequence {
    pub alpha: C64,
    pub kind: SequenceKind,
    /// `eps_j = family_adjust * eps'_j` (`(1-a)^{1/2}` for Hénon, 1 for the models).
    pub family_adjust: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceTerm {
    pub j: usize,
    pub n: usize,
    pub eps_prime: C64,
    pub eps: C64,
}

impl AlphaSequence {
    pub fn model(alpha: C64, kind: SequenceKind) -> Self {
        AlphaSequence { alpha, kind, family_adjust: ONE }
    }

    pub fn henon(alpha: C64, kind: SequenceKind, a: C64) -> Self {
        AlphaSequence { alpha, kind, family_adjust: (ONE - a).sqrt() }
    }

    /// Smallest constant for which every term satisfies `|Im eps'| <= C |eps'|^2`.
    pub fn condition_constant(&self) -> f64 {
        self.alpha.im.abs() / PI
    }
}

/// `eps'_j = pi/(j - alpha)` and the matching `n_j`.
pub fn alpha_sequence_eps(seq: &AlphaSequence, j: usize) -> Result<SequenceTerm> {
    let ep = PI / (C64::new(j as f64, 0.0) - seq.alpha);
    let c = seq.condition_constant() * (1.0 + 1e-9) + 1e-300;
    AlmostFatouParams { q: ZERO, r: ZERO, b: ZERO, eps: ep }.check_condition(c)?;
    let n = match seq.kind {
        SequenceKind::Full => j,
        SequenceKind::Half => j / 2,
    };
    Ok(SequenceTerm { j, n, eps_prime: ep, eps: seq.family_adjust * ep })
}
