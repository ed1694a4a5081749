use implosion_core::dynamics::HenonParams;
use implosion_core::escape::{slice_grid, EscapeConfig, SliceGrid, SliceQuantity, SliceSpec};
use implosion_core::fatou::{EigenFrame, FatouConfig, FatouEngine};
use implosion_core::geometry::Point2;
use implosion_core::lavaurs::{lavaurs_slice_grid, transition_h, transition_h_deriv, HopBudget, ZetaBox};
use implosion_core::periodic::{two_cycle, unstable_param, unstable_slice_grid, UnstableGrid, UnstableWindow};
use implosion_core::scalar::{c, ONE, ZERO};

#[test]
fn unstable_slice_is_self_similar() {
    let f = HenonParams::real(0.3, 0.0).unwrap();
    let frame = EigenFrame::henon(f.a).unwrap();
    let orbit = two_cycle(f.a, ZERO).unwrap();
    let param = unstable_param(&f, &orbit, 20).unwrap();
    let w = UnstableWindow { center: ZERO, scale: c(0.6, 0.0), width: 80, height: 80 };
    let cfg = EscapeConfig { n_max: 2000, ..Default::default() };
    let g1 = unstable_slice_grid(&f, Some(&frame), &param, &w, &cfg, false).unwrap();
    let g2 = unstable_slice_grid(&f, Some(&frame), &param, &w.scaled(param.lambda), &cfg, false).unwrap();
    let (UnstableGrid::Class(a), UnstableGrid::Class(b)) = (g1, g2) else { panic!("class grids expected") };
    let diff = a.data.iter().zip(&b.data).filter(|(x, y)| x.in_kplus() != y.in_kplus()).count();
    let inside = a.data.iter().filter(|x| x.in_kplus()).count();
    assert!(inside > 0 && inside < a.data.len(), "slice has both classes");
    assert!(diff as f64 <= 0.01 * a.data.len() as f64, "{diff} mismatched pixels");
}

#[test]
fn lavaurs_slice_symmetric_for_real_phase() {
    let eng = FatouEngine::henon(c(0.3, 0.0), FatouConfig::default()).unwrap();
    let w = ZetaBox { re_min: -1.0, re_max: 1.0, im_min: -6.0, im_max: 6.0 };
    let n = 48;
    let g = lavaurs_slice_grid(&eng, ZERO, &w, n, n, &HopBudget::default()).unwrap();
    let mut diff = 0;
    for i in 0..n {
        for j in 0..n {
            if g.get(i, j) != g.get(n - 1 - i, j) {
                diff += 1;
            }
        }
    }
    assert!(diff as f64 <= 0.01 * (n * n) as f64, "{diff}");
}

#[test]
fn h_has_expanding_and_contracting_points() {
    let eng = FatouEngine::henon(c(0.3, 0.0), FatouConfig::default()).unwrap();
    let (mut big, mut small) = (false, false);
    for k in 0..60 {
        let z = c((k % 6) as f64 / 6.0, 3.0 + 0.5 * (k / 6) as f64);
        if let Ok(d) = transition_h_deriv(&eng, ZERO, z, 1e-5) {
            big |= d.norm() > 1.0;
            small |= d.norm() < 1.0;
            let d4 = transition_h_deriv(&eng, ZERO, z, 1e-4).unwrap();
            assert!((d4 - d).norm() < 1e-3 * d.norm());
        }
    }
    assert!(big && small);
    // Far up the cylinder h_0 is close to a translation.
    let z = c(0.2, 15.0);
    let d = transition_h(&eng, ZERO, z).unwrap() - z;
    assert!((d - transition_h(&eng, ZERO, z + ONE).unwrap() + z + ONE).norm() < 1e-8);
}

#[test]
fn eigenline_inside_implodes_under_perturbation() {
    let spec = SliceSpec {
        origin: Point2::real(0.0, 0.0),
        direction: Point2::real(1.0, 1.0),
        re_min: -1.6,
        re_max: 0.6,
        im_min: -1.1,
        im_max: 1.1,
        width: 64,
        height: 64,
    };
    let cfg = EscapeConfig::default();
    let f0 = HenonParams::real(0.3, 0.0).unwrap();
    let frame = EigenFrame::henon(f0.a).unwrap();
    let class = |g| match g {
        SliceGrid::Class(g) => g,
        _ => unreachable!(),
    };
    let g0 = class(slice_grid(&f0, Some(&frame), &spec, &cfg, SliceQuantity::Class).unwrap());
    let g1 = class(slice_grid(&f0.with_eps(c(0.05, 0.0)), None, &spec, &cfg, SliceQuantity::Class).unwrap());
    let flips = g0.data.iter().zip(&g1.data).filter(|(a, b)| a.in_kplus() != b.in_kplus()).count();
    let frac = flips as f64 / g0.data.len() as f64;
    println!("flipped fraction {frac:.3}");
    assert!(frac >= 0.01);
}
