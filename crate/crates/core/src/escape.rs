//! K+ membership, the Green function and complex-line slice grids.

use crate::dynamics::PlaneMap;
use crate::error::{Error, Result};
use crate::fatou::EigenFrame;
use crate::geometry::Point2;
use crate::scalar::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeConfig {
    pub escape_radius: f64,
    pub n_max: usize,
    /// Radius of the incoming disk `|X + r| < r` in the normalized frame.
    pub petal_r: f64,
    pub petal_eta0: f64,
    /// Slope of the cone `|Y| <= kappa |X|` around the center direction.
    pub petal_kappa: f64,
}

impl Default for EscapeConfig {
    fn default() -> Self {
        EscapeConfig { escape_radius: 10.0, n_max: 10_000, petal_r: 0.01, petal_eta0: 0.2, petal_kappa: 0.1 }
    }
}

impl EscapeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.petal_r > 0.0 && self.escape_radius > 2.0 * self.petal_r) {
            return Err(Error::InvalidParams("need escape_radius > 2 petal_r > 0".into()));
        }
        if self.n_max < 1 {
            return Err(Error::InvalidParams("n_max must be at least 1".into()));
        }
        if !(self.petal_eta0 > 0.0 && self.petal_kappa > 0.0) {
            return Err(Error::InvalidParams("petal_eta0 and petal_kappa must be positive".into()));
        }
        Ok(())
    }

    pub fn petal(&self) -> Petal {
        Petal { r: self.petal_r, eta0: self.petal_eta0, kappa: self.petal_kappa }
    }
}

/// Forward-invariant trap inside the incoming petal, in normalized coordinates.
///
/// The disk `|X + r| < r` is the half-plane `Re(-1/X) > 1/(2r)`; it is cut
/// down to the sector `|Im w| < Re w` (`w = -1/X`) and to a thin cone around
/// the center direction, which together are mapped into themselves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Petal {
    pub r: f64,
    pub eta0: f64,
    pub kappa: f64,
}

impl Petal {
    #[inline]
    pub fn contains(&self, p: Point2) -> bool {
        let xn = p.x.norm();
        if xn == 0.0 || xn >= 2.0 * self.r {
            return false;
        }
        let w = -p.x.inv();
        let yn = p.y.norm();
        w.re > 0.5 / self.r && w.im.abs() < w.re && yn <= self.kappa * xn && yn < self.eta0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointClass {
    Escaped(usize),
    AttractedToO(usize),
    BoundedOther,
}

impl PointClass {
    pub fn in_kplus(&self) -> bool {
        !matches!(self, PointClass::Escaped(_))
    }

    pub fn code(&self) -> u8 {
        match self {
            PointClass::Escaped(_) => 0,
            PointClass::AttractedToO(_) => 1,
            PointClass::BoundedOther => 2,
        }
    }
}

/// Forward classification of a point in original coordinates.
///
/// Orbits still undecided after `n_max` steps count as `BoundedOther`, which
/// biases pictures toward K+. The petal certifies the basin of O only for the
/// parabolic map; pass `None` for perturbed maps.
pub fn classify_forward<M: PlaneMap>(map: &M, frame: Option<&EigenFrame>, p: Point2, cfg: &EscapeConfig) -> PointClass {
    let petal = cfg.petal();
    let mut cur = p;
    for n in 0..=cfg.n_max {
        if !cur.is_finite() || cur.max_norm() > cfg.escape_radius {
            return PointClass::Escaped(n);
        }
        if frame.is_some_and(|f| petal.contains(f.to_normalized(cur))) {
            return PointClass::AttractedToO(n);
        }
        cur = map.apply(cur);
    }
    PointClass::BoundedOther
}

/// Escape-only classification (no basin test).
pub fn escape_time<M: PlaneMap>(map: &M, p: Point2, cfg: &EscapeConfig) -> Option<usize> {
    let mut cur = p;
    for n in 0..=cfg.n_max {
        if !cur.is_finite() || cur.max_norm() > cfg.escape_radius {
            return Some(n);
        }
        cur = map.apply(cur);
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GreenDirection {
    Forward,
    Backward,
}

/// Iterates with `log max(|x|,|y|)` above this are in the regime where the
/// next iterate squares the norm to full double precision.
const GREEN_CUTOFF: f64 = 1e100;

/// `lim 2^{-n} log+ ||F^n p||` for the degree-2 family (`G+`), or the
/// same for the inverse map (`G-`). Returns 0 for orbits bounded through `n_max`.
pub fn green_plus<M: PlaneMap>(map: &M, p: Point2, cfg: &EscapeConfig, direction: GreenDirection) -> f64 {
    let step = |q: Point2| match direction {
        GreenDirection::Forward => map.apply(q),
        GreenDirection::Backward => map.inverse(q).expect("backward Green function needs an invertible map"),
    };
    let mut cur = p;
    let mut scale = 1.0;
    for _ in 0..=cfg.n_max {
        if !cur.is_finite() {
            // One step at most squares the norm, so this needs non-finite input.
            return f64::INFINITY;
        }
        let m = cur.max_norm();
        if m > GREEN_CUTOFF {
            return scale * m.ln();
        }
        cur = step(cur);
        scale *= 0.5;
    }
    0.0
}

/// A complex line `origin + c * direction` with a rectangular window in the c-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub origin: Point2,
    pub direction: Point2,
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub width: usize,
    pub height: usize,
}

impl SliceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.direction.norm() == 0.0 {
            return Err(Error::InvalidParams("slice direction must be nonzero".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParams("resolution must be positive".into()));
        }
        if !(self.re_max > self.re_min && self.im_max > self.im_min) {
            return Err(Error::InvalidParams("empty window".into()));
        }
        Ok(())
    }

    /// Line parameter at pixel centre (row 0 at the top).
    pub fn param(&self, i: usize, j: usize) -> C64 {
        let re = self.re_min + (j as f64 + 0.5) * (self.re_max - self.re_min) / self.width as f64;
        let im = self.im_max - (i as f64 + 0.5) * (self.im_max - self.im_min) / self.height as f64;
        C64::new(re, im)
    }

    pub fn point(&self, i: usize, j: usize) -> Point2 {
        self.origin + self.direction * self.param(i, j)
    }
}

/// Row-major grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.width + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.width..(i + 1) * self.width]
    }
}

/// Evaluate `f` on every pixel in parallel; the result does not depend on scheduling.
pub fn par_grid<T: Send, F: Fn(usize, usize) -> T + Sync>(width: usize, height: usize, f: F) -> Grid<T> {
    let data: Vec<T> = (0..width * height).into_par_iter().map(|k| f(k / width, k % width)).collect();
    Grid { width, height, data }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SliceQuantity {
    Green,
    Class,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SliceGrid {
    Green(Grid<f64>),
    Class(Grid<PointClass>),
}

pub fn slice_grid<M: PlaneMap>(
    map: &M,
    frame: Option<&EigenFrame>,
    spec: &SliceSpec,
    cfg: &EscapeConfig,
    quantity: SliceQuantity,
) -> Result<SliceGrid> {
    spec.validate()?;
    cfg.validate()?;
    Ok(match quantity {
        SliceQuantity::Green => SliceGrid::Green(par_grid(spec.width, spec.height, |i, j| {
            green_plus(map, spec.point(i, j), cfg, GreenDirection::Forward)
        })),
        SliceQuantity::Class => SliceGrid::Class(par_grid(spec.width, spec.height, |i, j| {
            classify_forward(map, frame, spec.point(i, j), cfg)
        })),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{fixed_points, HenonParams};
    use crate::periodic::two_cycle;
    use crate::scalar::{c, ONE};

    fn setup() -> (HenonParams, EigenFrame, EscapeConfig) {
        let f = HenonParams::real(0.3, 0.0).unwrap();
        (f, EigenFrame::henon(f.a).unwrap(), EscapeConfig::default())
    }

    #[test]
    fn petal_point_is_attracted() {
        let (f, frame, cfg) = setup();
        let p = frame.from_normalized(Point2::real(-0.05, 0.0));
        assert!(matches!(classify_forward(&f, Some(&frame), p, &cfg), PointClass::AttractedToO(_)));
    }

    #[test]
    fn far_point_escapes() {
        let (f, frame, cfg) = setup();
        assert_eq!(classify_forward(&f, Some(&frame), Point2::real(20.0, 20.0), &cfg), PointClass::Escaped(0));
    }

    #[test]
    fn two_cycle_is_bounded_other() {
        let (f, frame, mut cfg) = setup();
        // A saddle: roundoff drives the orbit off after a few dozen steps.
        cfg.n_max = 20;
        let q = two_cycle(f.a, crate::scalar::ZERO).unwrap().points[0];
        assert_eq!(classify_forward(&f, Some(&frame), q, &cfg), PointClass::BoundedOther);
    }

    #[test]
    fn green_zero_at_origin_and_doubles() {
        let (f, _, cfg) = setup();
        assert_eq!(green_plus(&f, Point2::ORIGIN, &cfg, GreenDirection::Forward), 0.0);
        let p = Point2::real(3.0, -1.0);
        let g0 = green_plus(&f, p, &cfg, GreenDirection::Forward);
        let g1 = green_plus(&f, f.apply(p), &cfg, GreenDirection::Forward);
        assert!(g0 > 0.0);
        assert!((g1 - 2.0 * g0).abs() < 1e-8 * g1.max(1.0));
    }

    #[test]
    fn green_large_x_is_log_norm() {
        // F(10^6, 0) ~ (10^12, 10^6); G = lim 2^-n log|x_n| = log 10^6 + o(1).
        let (f, _, cfg) = setup();
        let g = green_plus(&f, Point2::real(1e6, 0.0), &cfg, GreenDirection::Forward);
        assert!((g - 1e6f64.ln()).abs() < 1e-5, "{g}");
    }

    #[test]
    fn green_backward_is_positive_off_kminus() {
        let (f, _, cfg) = setup();
        let g = green_plus(&f, Point2::real(0.0, 20.0), &cfg, GreenDirection::Backward);
        assert!(g > 0.0);
        let fp = fixed_points(&f)[0];
        assert_eq!(green_plus(&f, fp, &cfg, GreenDirection::Backward), 0.0);
    }

    #[test]
    fn slice_near_origin_is_in_kplus() {
        let (f, frame, cfg) = setup();
        let spec = SliceSpec {
            origin: Point2::ORIGIN,
            direction: Point2::new(ONE, ONE),
            re_min: -0.05,
            re_max: 0.0,
            im_min: -0.01,
            im_max: 0.01,
            width: 8,
            height: 4,
        };
        match slice_grid(&f, Some(&frame), &spec, &cfg, SliceQuantity::Green).unwrap() {
            SliceGrid::Green(g) => assert!(g.data.iter().all(|&v| v == 0.0)),
            _ => unreachable!(),
        }
        assert_eq!(spec.param(0, 0), c(-0.05 + 0.05 / 16.0, 0.01 - 0.01 / 4.0));
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = EscapeConfig { escape_radius: 0.01, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
