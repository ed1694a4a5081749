use implosion_core::dynamics::{HenonParams, NormalizedHenon, PlaneMap};
use implosion_core::escape::{classify_forward, green_plus, EscapeConfig, GreenDirection, PointClass};
use implosion_core::fatou::{EigenFrame, FatouConfig, FatouEngine};
use implosion_core::lavaurs::{classify_kplus_lavaurs, HopBudget};
use implosion_core::scalar::{c, C64};
use implosion_core::verify::determinism_payloads;
use implosion_core::Point2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cplx(r: f64) -> impl Strategy<Value = C64> {
    (-r..r, -r..r).prop_map(|(a, b)| C64::new(a, b))
}

fn params() -> impl Strategy<Value = HenonParams> {
    (cplx(0.7), cplx(0.3))
        .prop_filter("|a| in (0.05, 0.95)", |(a, _)| a.norm() > 0.05 && a.norm() < 0.95)
        .prop_map(|(a, e)| HenonParams::new(a, e).unwrap())
}

proptest! {
    #[test]
    fn inverse_undoes_forward(f in params(), x in cplx(3.0), y in cplx(3.0)) {
        let p = Point2::new(x, y);
        let back = f.inverse(f.apply(p)).unwrap();
        prop_assert!(back.dist(&p) < 1e-11 * (1.0 + p.norm()) / f.a.norm());
        let fwd = f.apply(f.inverse(p).unwrap());
        prop_assert!(fwd.dist(&p) < 1e-11 * (1.0 + p.norm()) / f.a.norm());
    }

    #[test]
    fn jacobian_determinant_is_a(f in params(), x in cplx(5.0), y in cplx(5.0)) {
        let d = f.jacobian(Point2::new(x, y)).det();
        prop_assert!((d - f.a).norm() < 1e-13);
    }

    #[test]
    fn jet_matches_finite_differences(f in params(), x in cplx(2.0), y in cplx(2.0)) {
        let p = Point2::new(x, y);
        let j = f.jacobian(p);
        let h = 1e-6;
        for (k, dir) in [Point2::real(1.0, 0.0), Point2::real(0.0, 1.0)].into_iter().enumerate() {
            let fp = f.apply(p + dir * c(h, 0.0));
            let fm = f.apply(p - dir * c(h, 0.0));
            let fd = (fp - fm) * c(0.5 / h, 0.0);
            prop_assert!((fd - j.column(k)).norm() < 1e-6 * (1.0 + p.norm()));
        }
    }

    #[test]
    fn normalized_map_conjugates(x in cplx(1.0), y in cplx(1.0), e in cplx(0.1)) {
        let a = c(0.3, 0.0);
        let f = HenonParams::new(a, e).unwrap();
        let frame = EigenFrame::henon(a).unwrap();
        let n = NormalizedHenon::from_params(&f);
        let p = Point2::new(x, y);
        let lhs = frame.from_normalized(n.apply(p));
        let rhs = f.apply(frame.from_normalized(p));
        prop_assert!(lhs.dist(&rhs) < 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn green_nonnegative(x in cplx(4.0), y in cplx(4.0)) {
        let f = HenonParams::real(0.3, 0.0).unwrap();
        let g = green_plus(&f, Point2::new(x, y), &EscapeConfig::default(), GreenDirection::Forward);
        prop_assert!(g >= 0.0);
    }
}

#[test]
fn green_doubling_on_sampled_escaping_points() {
    let f = HenonParams::real(0.3, 0.0).unwrap();
    let cfg = EscapeConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut n = 0;
    while n < 100 {
        let p = Point2::new(c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)), c(rng.gen_range(-4.0..4.0), 0.0));
        let g = green_plus(&f, p, &cfg, GreenDirection::Forward);
        if g == 0.0 {
            assert!(!matches!(
                classify_forward(&f, Some(&EigenFrame::henon(f.a).unwrap()), p, &cfg),
                PointClass::Escaped(_)
            ));
            continue;
        }
        let g1 = green_plus(&f, f.apply(p), &cfg, GreenDirection::Forward);
        assert!((g1 - 2.0 * g).abs() < 1e-9 * (1.0 + g1), "{g} {g1}");
        n += 1;
    }
}

#[test]
fn escaping_point_stays_escaping_under_small_eps() {
    let f0 = HenonParams::real(0.3, 0.0).unwrap();
    let frame = EigenFrame::henon(f0.a).unwrap();
    let cfg = EscapeConfig::default();
    let p = Point2::real(1.5, -0.5);
    assert!(matches!(classify_forward(&f0, Some(&frame), p, &cfg), PointClass::Escaped(_)));
    for e in [1e-3, 1e-4, 1e-5] {
        let f = f0.with_eps(c(e, 0.0));
        assert!(matches!(classify_forward(&f, None, p, &cfg), PointClass::Escaped(_)), "eps {e}");
    }
}

#[test]
fn payloads_do_not_depend_on_worker_count() {
    let (g1, l1) = determinism_payloads(1).unwrap();
    let (g3, l3) = determinism_payloads(3).unwrap();
    assert_eq!(g1.bytes, g3.bytes);
    assert_eq!(l1.bytes, l3.bytes);
}

#[test]
fn verdict_is_shift_and_forward_invariant() {
    let eng = FatouEngine::henon(c(0.3, 0.0), FatouConfig::default()).unwrap();
    let budget = HopBudget::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..12 {
        let p =
            Point2::new(c(rng.gen_range(-0.3..-0.05), rng.gen_range(-0.1..0.1)), c(rng.gen_range(-0.02..0.02), 0.0));
        let alpha = c(rng.gen_range(0.0..1.0), rng.gen_range(-4.0..4.0));
        let v = classify_kplus_lavaurs(&eng, alpha, p, &budget).inside();
        assert_eq!(v, classify_kplus_lavaurs(&eng, alpha, eng.map.apply(p), &budget).inside());
        assert_eq!(v, classify_kplus_lavaurs(&eng, alpha + 1.0, p, &budget).inside());
    }
}
