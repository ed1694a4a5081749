//! Transition maps `h_alpha`, Lavaurs maps `T_alpha`, the Julia-Lavaurs
//! classification on Sigma, and the convergence `F^{n_j}_{eps_j} -> T_alpha`.

use crate::almost_fatou::{alpha_sequence_eps, AlphaSequence};
use crate::dynamics::PlaneMap;
use crate::error::{BasinMiss, Error, Result};
use crate::escape::{par_grid, Grid, PointClass};
use crate::fatou::FatouEngine;
use crate::geometry::Point2;
use crate::scalar::{C64, ONE, ZERO};
use serde::{Deserialize, Serialize};

/// A point of the cylinder `C/Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderPoint {
    pub zeta: C64,
    /// Translate of `zeta` by an integer with real part in `[0, 1)`.
    pub reduced: C64,
}

impl CylinderPoint {
    pub fn new(zeta: C64) -> Self {
        let k = zeta.re.floor();
        let mut reduced = C64::new(zeta.re - k, zeta.im);
        if reduced.re >= 1.0 {
            reduced.re -= 1.0;
        }
        CylinderPoint { zeta, reduced }
    }

    /// Distance on the cylinder.
    pub fn dist(&self, o: &CylinderPoint) -> f64 {
        let mut dr = (self.reduced.re - o.reduced.re).abs();
        dr = dr.min(1.0 - dr);
        dr.hypot(self.reduced.im - o.reduced.im)
    }
}

/// `h_alpha(zeta) = phi_in((phi_out)^{-1}(zeta)) + alpha`.
pub fn transition_h<M: PlaneMap>(eng: &FatouEngine<M>, alpha: C64, zeta: C64) -> Result<C64> {
    let p = eng.phi_out_inverse(zeta)?;
    Ok(eng.phi_in(p, 1e-8)?.value + alpha)
}

/// `h_alpha'` by central differences.
pub fn transition_h_deriv<M: PlaneMap>(eng: &FatouEngine<M>, alpha: C64, zeta: C64, step: f64) -> Result<C64> {
    let hp = transition_h(eng, alpha, zeta + step)?;
    let hm = transition_h(eng, alpha, zeta - step)?;
    Ok((hp - hm) / (2.0 * step))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CylinderEnd {
    Upper,
    Lower,
}

/// Mean of `h_0(zeta) - zeta` over one period on `Im zeta = +-height`.
pub fn c0_estimate<M: PlaneMap>(eng: &FatouEngine<M>, end: CylinderEnd, height: f64) -> Result<C64> {
    let im = match end {
        CylinderEnd::Upper => height,
        CylinderEnd::Lower => -height,
    };
    let k = 8;
    let mut acc = ZERO;
    for i in 0..k {
        let z = C64::new(i as f64 / k as f64, im);
        acc += transition_h(eng, ZERO, z)? - z;
    }
    Ok(acc / k as f64)
}

/// `T_alpha(p) = (phi_out)^{-1}(phi_in(p) + alpha)`, normalized coordinates.
pub fn lavaurs_t<M: PlaneMap>(eng: &FatouEngine<M>, alpha: C64, p: Point2) -> Result<Point2> {
    let z = eng.phi_in(p, 1e-8)?.value + alpha;
    eng.phi_out_inverse(z)
}

/// The phase `alpha = zeta0 - h_0(zeta0)` making `zeta0` fixed by `h_alpha`.
pub fn choose_alpha_for<M: PlaneMap>(eng: &FatouEngine<M>, zeta0: C64) -> Result<C64> {
    Ok(zeta0 - transition_h(eng, ZERO, zeta0)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedKind {
    Repelling,
    Attracting,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HFixedPoint {
    pub zeta: C64,
    /// Integer m with `h_alpha(zeta) = zeta + m`.
    pub shift: i64,
    pub multiplier: C64,
    pub kind: FixedKind,
}

fn kind_of(m: C64) -> FixedKind {
    let r = m.norm();
    if r > 1.0 + 1e-6 {
        FixedKind::Repelling
    } else if r < 1.0 - 1e-6 {
        FixedKind::Attracting
    } else {
        FixedKind::Neutral
    }
}

/// Rectangle in the zeta-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl ZetaBox {
    pub fn point(&self, i: usize, j: usize, w: usize, h: usize) -> C64 {
        C64::new(
            self.re_min + (j as f64 + 0.5) * (self.re_max - self.re_min) / w as f64,
            self.im_max - (i as f64 + 0.5) * (self.im_max - self.im_min) / h as f64,
        )
    }
}

/// Cylinder fixed points of `h_alpha` found by Newton from a seed grid.
pub fn find_h_fixed_points<M: PlaneMap>(
    eng: &FatouEngine<M>,
    alpha: C64,
    bx: &ZetaBox,
    seeds: usize,
    tol: f64,
) -> Vec<HFixedPoint> {
    let mut found: Vec<HFixedPoint> = Vec::new();
    for i in 0..seeds {
        for j in 0..seeds {
            let mut z = bx.point(i, j, seeds, seeds);
            let Ok(h) = transition_h(eng, alpha, z) else { continue };
            let m = (h - z).re.round();
            let mut ok = false;
            for _ in 0..30 {
                let Ok(g) = transition_h(eng, alpha, z).map(|h| h - z - m) else { break };
                if g.norm() < tol {
                    ok = true;
                    break;
                }
                let Ok(d) = transition_h_deriv(eng, alpha, z, 1e-5) else { break };
                let dz = g / (d - ONE);
                if !dz.is_finite() || dz.norm() > 2.0 {
                    break;
                }
                z -= dz;
            }
            if !ok {
                continue;
            }
            let cp = CylinderPoint::new(z);
            if found.iter().any(|f| CylinderPoint::new(f.zeta).dist(&cp) < 1e-6) {
                continue;
            }
            if let Ok(mult) = transition_h_deriv(eng, alpha, z, 1e-5) {
                found.push(HFixedPoint { zeta: z, shift: m as i64, multiplier: mult, kind: kind_of(mult) });
            }
        }
    }
    found
}

/// Itinerary verdict for `K+(F, T_alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HopResult {
    /// `T^n p` left K+.
    EscapedAtHop(usize),
    /// `T^n p` lies in `K+ - B`.
    ExitToBoundedOther(usize),
    /// Still in the basin after the hop budget.
    SaturatedInB(usize),
    /// The cylinder itinerary closed up: `h_alpha^period` fixes the current
    /// phase (to 1e-9) after `hops` hops, so every later hop stays in B.
    PeriodicInB { hops: usize, period: usize },
    /// A Fatou limit could not be resolved within budget.
    Indeterminate(usize),
}

impl HopResult {
    /// Membership in `K+(F, T_alpha)`; `Indeterminate` counts as inside.
    pub fn inside(&self) -> bool {
        !matches!(self, HopResult::EscapedAtHop(_))
    }

    pub fn certified_inside(&self) -> bool {
        matches!(self, HopResult::ExitToBoundedOther(_) | HopResult::PeriodicInB { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopBudget {
    pub max_hops: usize,
    /// Forward steps allowed to decide basin membership at each hop.
    pub n_max: usize,
    /// Cylinder distance below which the itinerary counts as closed.
    pub cycle_tol: f64,
    /// Longest cycle searched for.
    pub max_period: usize,
}

impl Default for HopBudget {
    fn default() -> Self {
        HopBudget { max_hops: 64, n_max: 10_000, cycle_tol: 1e-9, max_period: 8 }
    }
}

/// Classify a normalized-frame point for `K+(F, T_alpha)`.
pub fn classify_kplus_lavaurs<M: PlaneMap>(
    eng: &FatouEngine<M>,
    alpha: C64,
    start: Point2,
    budget: &HopBudget,
) -> HopResult {
    let mut p = start;
    let mut history: Vec<CylinderPoint> = Vec::new();
    for hop in 0..=budget.max_hops {
        match eng.classify(p, budget.n_max) {
            PointClass::Escaped(_) => return HopResult::EscapedAtHop(hop),
            PointClass::BoundedOther => return HopResult::ExitToBoundedOther(hop),
            PointClass::AttractedToO(_) => {}
        }
        if hop == budget.max_hops {
            return HopResult::SaturatedInB(hop);
        }
        let z = match eng.phi_in(p, 1e-8) {
            Ok(v) => v.value + alpha,
            Err(Error::NotInBasin(BasinMiss::Escaped(_))) => return HopResult::EscapedAtHop(hop),
            Err(_) => return HopResult::Indeterminate(hop),
        };
        let cp = CylinderPoint::new(z);
        for period in 1..=budget.max_period.min(history.len()) {
            if history[history.len() - period].dist(&cp) < budget.cycle_tol {
                return HopResult::PeriodicInB { hops: hop + 1, period };
            }
        }
        history.push(cp);
        p = match eng.phi_out_inverse(z) {
            Ok(q) => q,
            Err(Error::NotInBasin(BasinMiss::Escaped(_))) => return HopResult::EscapedAtHop(hop + 1),
            Err(_) => return HopResult::Indeterminate(hop + 1),
        };
    }
    HopResult::SaturatedInB(budget.max_hops)
}

/// Start from a cylinder coordinate on Sigma.
pub fn classify_kplus_lavaurs_zeta<M: PlaneMap>(
    eng: &FatouEngine<M>,
    alpha: C64,
    zeta: C64,
    budget: &HopBudget,
) -> HopResult {
    match eng.phi_out_inverse(zeta) {
        Ok(p) => classify_kplus_lavaurs(eng, alpha, p, budget),
        Err(Error::NotInBasin(BasinMiss::Escaped(_))) => HopResult::EscapedAtHop(0),
        Err(_) => HopResult::Indeterminate(0),
    }
}

/// Pixel classes of a Sigma slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LavaursPixel {
    /// Not in K+ at all.
    Gray,
    /// In `K+(F, T_alpha)`.
    Black,
    /// In K+ but not in `K+(F, T_alpha)`.
    White,
    Indeterminate,
}

impl LavaursPixel {
    pub fn from_hop(h: HopResult) -> Self {
        match h {
            HopResult::EscapedAtHop(0) => LavaursPixel::Gray,
            HopResult::EscapedAtHop(_) => LavaursPixel::White,
            HopResult::Indeterminate(_) => LavaursPixel::Indeterminate,
            _ => LavaursPixel::Black,
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            LavaursPixel::Gray => 0,
            LavaursPixel::Black => 1,
            LavaursPixel::White => 2,
            LavaursPixel::Indeterminate => 3,
        }
    }
}

/// Per-pixel hop verdicts over a zeta window on Sigma.
pub fn lavaurs_hop_grid<M: PlaneMap>(
    eng: &FatouEngine<M>,
    alpha: C64,
    window: &ZetaBox,
    width: usize,
    height: usize,
    budget: &HopBudget,
) -> Result<Grid<HopResult>> {
    if width == 0 || height == 0 || !(window.re_max > window.re_min && window.im_max > window.im_min) {
        return Err(Error::InvalidParams("empty window or resolution".into()));
    }
    Ok(par_grid(width, height, |i, j| {
        classify_kplus_lavaurs_zeta(eng, alpha, window.point(i, j, width, height), budget)
    }))
}

pub fn lavaurs_slice_grid<M: PlaneMap>(
    eng: &FatouEngine<M>,
    alpha: C64,
    window: &ZetaBox,
    width: usize,
    height: usize,
    budget: &HopBudget,
) -> Result<Grid<LavaursPixel>> {
    let g = lavaurs_hop_grid(eng, alpha, window, width, height, budget)?;
    Ok(Grid { width, height, data: g.data.into_iter().map(LavaursPixel::from_hop).collect() })
}

/// Integer band of a verdict: the escape hop, or a code past any hop count.
pub fn hop_band(h: &HopResult) -> u32 {
    match h {
        HopResult::EscapedAtHop(n) => *n as u32,
        HopResult::ExitToBoundedOther(_) => 1 << 20,
        HopResult::SaturatedInB(_) | HopResult::PeriodicInB { .. } => 1 << 21,
        HopResult::Indeterminate(_) => 1 << 22,
    }
}

/// Fraction of each row whose band differs from the row's most common band.
/// Chains show up as rows with mixed escape hops.
pub fn row_heterogeneity(g: &Grid<HopResult>) -> Vec<f64> {
    (0..g.height)
        .map(|i| {
            let mut counts = std::collections::BTreeMap::new();
            for h in g.row(i) {
                *counts.entry(hop_band(h)).or_insert(0usize) += 1;
            }
            let mode = counts.values().copied().max().unwrap_or(0);
            1.0 - mode as f64 / g.width as f64
        })
        .collect()
}

/// Number of maximal runs of chain rows, bridging gaps shorter than `min_gap` rows.
pub fn count_chain_rows(profile: &[f64], threshold: f64, min_gap: usize) -> usize {
    let mut runs = 0;
    let mut gap = usize::MAX;
    for &v in profile {
        if v > threshold {
            if gap >= min_gap {
                runs += 1;
            }
            gap = 0;
        } else if gap != usize::MAX {
            gap += 1;
        }
    }
    runs
}

/// Dominant period (in rows) of a profile by autocorrelation, refined to
/// sub-row accuracy with a parabola through the peak.
pub fn profile_period(profile: &[f64], min_lag: usize) -> Option<f64> {
    let n = profile.len();
    if n < 2 * min_lag + 3 {
        return None;
    }
    let mean = profile.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = profile.iter().map(|v| v - mean).collect();
    let ac: Vec<f64> =
        (0..n / 2 + 2).map(|l| (0..n - l).map(|k| d[k] * d[k + l]).sum::<f64>() / (n - l) as f64).collect();
    // Local maxima past the first zero crossing; multiples of the period
    // score nearly as high, so take the first one close to the best.
    let start = (1..ac.len()).find(|&l| ac[l] <= 0.0)?.max(min_lag);
    let peaks: Vec<usize> =
        (start..ac.len() - 1).filter(|&l| ac[l] >= ac[l - 1] && ac[l] >= ac[l + 1] && ac[l] > 0.0).collect();
    let best = peaks.iter().map(|&l| ac[l]).fold(0.0, f64::max);
    let peak = *peaks.iter().find(|&&l| ac[l] >= 0.6 * best)?;
    let (y0, y1, y2) = (ac[peak - 1], ac[peak], ac[peak + 1]);
    let den = y0 - 2.0 * y1 + y2;
    let off = if den.abs() > 0.0 { 0.5 * (y0 - y2) / den } else { 0.0 };
    Some(peak as f64 + off)
}

/// Vertical drift of `h_alpha` read off the chain spacing of a hop grid in
/// the rows with `im_lo <= Im zeta <= im_hi`. The sign comes from the
/// direction in which escape hops grow.
pub fn measured_drift(g: &Grid<HopResult>, window: &ZetaBox, im_lo: f64, im_hi: f64) -> Option<f64> {
    let dy = (window.im_max - window.im_min) / g.height as f64;
    let rows: Vec<usize> = (0..g.height)
        .filter(|&i| {
            let im = window.im_max - (i as f64 + 0.5) * dy;
            im >= im_lo && im <= im_hi
        })
        .collect();
    let prof = row_heterogeneity(g);
    let sub: Vec<f64> = rows.iter().map(|&i| prof[i]).collect();
    let period = profile_period(&sub, 3)? * dy;
    // Mean escape hop against height decides the direction of travel.
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &i in &rows {
        let im = window.im_max - (i as f64 + 0.5) * dy;
        let hops: Vec<f64> = g
            .row(i)
            .iter()
            .filter_map(|h| if let HopResult::EscapedAtHop(n) = h { Some(*n as f64) } else { None })
            .collect();
        if hops.is_empty() {
            continue;
        }
        let y = hops.iter().sum::<f64>() / hops.len() as f64;
        sx += im;
        sy += y;
        sxx += im * im;
        sxy += im * y;
        m += 1.0;
    }
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    Some(if slope > 0.0 { -period } else { period })
}

/// Row of the `F^{n_j m} -> T^m_alpha` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergeRow {
    pub j: usize,
    pub n: usize,
    pub eps: C64,
    pub eps_prime: C64,
    /// Distance in original coordinates; `None` if the orbit escaped.
    pub dist: Option<f64>,
    pub escaped_at: Option<usize>,
}

/// `dist(F^{n_j m}_{eps_j}(p), T^m_alpha(p))` for each j.
///
/// `family_at(eps')` returns the perturbed map in the same normalized frame
/// as `eng`; p is a normalized-frame point.
pub fn converge_t<M: PlaneMap, N: PlaneMap, Fam: Fn(C64) -> N + Sync>(
    eng: &FatouEngine<M>,
    seq: &AlphaSequence,
    p: Point2,
    j_list: &[usize],
    hops: usize,
    family_at: Fam,
) -> Result<Vec<ConvergeRow>> {
    let mut target = p;
    for _ in 0..hops {
        target = lavaurs_t(eng, seq.alpha, target)?;
    }
    let rows: Vec<Result<ConvergeRow>> = j_list
        .iter()
        .map(|&j| {
            let t = alpha_sequence_eps(seq, j)?;
            let map = family_at(t.eps_prime);
            let steps = t.n * hops;
            let mut cur = p;
            let mut escaped_at = None;
            for k in 0..steps {
                cur = map.apply(cur);
                if eng.escaped(cur) {
                    escaped_at = Some(k + 1);
                    break;
                }
            }
            let dist = if escaped_at.is_none() {
                Some(eng.frame.from_normalized(cur).dist(&eng.frame.from_normalized(target)))
            } else {
                None
            };
            Ok(ConvergeRow { j, n: t.n, eps: t.eps, eps_prime: t.eps_prime, dist, escaped_at })
        })
        .collect();
    rows.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fatou::FatouConfig;
    use crate::scalar::c;
    use std::f64::consts::PI;

    fn eng() -> FatouEngine<crate::dynamics::NormalizedHenon> {
        FatouEngine::henon(c(0.3, 0.0), FatouConfig::default()).unwrap()
    }

    #[test]
    fn cylinder_reduction() {
        let p = CylinderPoint::new(c(-2.25, 1.0));
        assert!((p.reduced - c(0.75, 1.0)).norm() < 1e-15);
        assert!(CylinderPoint::new(c(0.999_999_999_9, 0.0)).dist(&CylinderPoint::new(c(0.0, 0.0))) < 1e-9);
    }

    #[test]
    fn h_periodicity_and_shift() {
        let e = eng();
        for z in [c(0.2, 3.0), c(0.7, -4.0)] {
            let h0 = transition_h(&e, ZERO, z).unwrap();
            let h1 = transition_h(&e, ZERO, z + ONE).unwrap();
            assert!((h1 - h0 - ONE).norm() < 1e-8);
            let ha = transition_h(&e, c(0.3, 0.4), z).unwrap();
            assert!((ha - h0 - c(0.3, 0.4)).norm() < 1e-12);
        }
    }

    #[test]
    fn c0_matches_closed_form() {
        let e = eng();
        let up = c0_estimate(&e, CylinderEnd::Upper, 10.0).unwrap();
        let lo = c0_estimate(&e, CylinderEnd::Lower, 10.0).unwrap();
        let target = c(0.0, PI * (1.3 / -0.7));
        assert!((up - target).norm() < 1e-6, "{up}");
        assert!((up + lo).norm() < 2e-6);
    }

    #[test]
    fn t_alpha_equivariance() {
        let e = eng();
        let p = Point2::real(-0.1, 0.02);
        let alpha = c(0.25, 8.0);
        let t = lavaurs_t(&e, alpha, p).unwrap();
        let t_fp = lavaurs_t(&e, alpha, e.map.apply(p)).unwrap();
        let t_plus = lavaurs_t(&e, alpha + ONE, p).unwrap();
        assert!(e.map.apply(t).dist(&t_fp) < 1e-8);
        assert!(t_plus.dist(&t_fp) < 1e-8);
    }

    #[test]
    fn two_cycle_start_exits_bounded() {
        let e = eng();
        let q = crate::periodic::two_cycle(c(0.3, 0.0), ZERO).unwrap().points[0];
        let budget = HopBudget { n_max: 20, ..Default::default() };
        assert_eq!(
            classify_kplus_lavaurs(&e, ZERO, e.frame.to_normalized(q), &budget),
            HopResult::ExitToBoundedOther(0)
        );
        let far = e.frame.to_normalized(Point2::real(20.0, 0.0));
        assert_eq!(classify_kplus_lavaurs(&e, ZERO, far, &budget), HopResult::EscapedAtHop(0));
    }

    #[test]
    fn chosen_alpha_fixes_zeta() {
        let e = eng();
        let z0 = c(0.3, 4.5);
        let a = choose_alpha_for(&e, z0).unwrap();
        assert!((transition_h(&e, a, z0).unwrap() - z0).norm() < 1e-8);
    }
}
