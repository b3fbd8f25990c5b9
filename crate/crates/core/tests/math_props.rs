mod common;

use common::*;
use gurukit_core::math::*;
use proptest::prelude::*;

#[test]
fn cdf_matches_quadrature() {
    let v = gauss_cdf(1.959964);
    assert!((v - 0.975).abs() < 1e-6);
    for i in -80..=80 {
        let t = i as f64 * 0.1;
        let q = cdf_by_quadrature(t);
        assert!((gauss_cdf(t) - q).abs() <= 1e-12, "t={t}: {} vs {q}", gauss_cdf(t));
    }
    assert_eq!(gauss_cdf(0.0), 0.5);
    let far = gauss_cdf(8.0);
    assert!(far > 1.0 - 1e-14 && far <= 1.0);
}

#[test]
fn quantile_matches_bisection() {
    let b = bisect(cdf_by_quadrature, 0.975, -10.0, 10.0);
    assert!((b - 1.959964).abs() < 1e-5);
    assert!((gauss_cdf_inv(0.975).unwrap() - b).abs() < 1e-9);
    for p in [1e-10, 1e-6, 0.001, 0.02, 0.1, 0.3, 0.5, 0.7, 0.9, 0.98, 0.999, 1.0 - 1e-6] {
        let x = gauss_cdf_inv(p).unwrap();
        let oracle = bisect(gauss_cdf, p, -40.0, 40.0);
        assert!((x - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()), "p={p}: {x} vs {oracle}");
    }
    for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
        assert!(gauss_cdf_inv(p).is_err());
    }
}

#[test]
fn f_tails_match_continued_fraction() {
    let hi = f_value(10.0);
    assert!((hi - 10.0).abs() < 1e-12);
    let lo = f_value(-10.0);
    assert!(lo > 0.0 && lo < 1e-12);
    let oracle = f_far_tail(10.0);
    assert!((lo - oracle).abs() <= 1e-6 * oracle, "{lo} vs {oracle}");
    for z in [5.0, 7.5, 20.0] {
        let o = f_far_tail(z);
        assert!((f_value(-z) - o).abs() <= 1e-6 * o, "z={z}");
    }
}

#[test]
fn f_anchors_and_derivatives() {
    assert!((f_value(0.0) - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-16);
    assert_eq!(f_derivative(0.0), 0.5);
    assert!((f_second(0.0) - pdf(0.0)).abs() < 1e-16);
    let fd = central_diff(f_value, 0.7, 1e-5);
    assert!((fd - f_derivative(0.7)).abs() < 1e-8);
    for i in -100..=100 {
        let z = i as f64 * 0.1;
        assert_eq!(f_derivative(z), gauss_cdf(z));
        assert!((f_second(z) - pdf(z)).abs() <= 1e-15);
    }
}

#[test]
fn upper_bound_on_dense_grid() {
    let cap = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    for i in -50_000..=50_000 {
        let z = i as f64 * 1e-3;
        let gap = f_value(z) - z.max(0.0);
        assert!((0.0..=cap).contains(&gap), "z={z}: gap {gap}");
    }
}

#[test]
fn plug_in_anchors() {
    assert_eq!(loss_value(ScalarLoss::Log, 0.0), 1.0);
    assert_eq!(loss_value(ScalarLoss::Quad, -4.0), 0.0);
    assert_eq!(loss_value(ScalarLoss::Quad, 4.0), 4.0);
    assert_eq!(loss_derivative(ScalarLoss::Quad, 0.0), 0.5);
    // pieces of the quadratic loss meet smoothly
    for b in [-4.0, 4.0] {
        let l = loss_derivative(ScalarLoss::Quad, b - 1e-12);
        let r = loss_derivative(ScalarLoss::Quad, b + 1e-12);
        assert!((l - r).abs() < 1e-9);
    }
}

#[test]
fn conjugates_match_numerical_minimization() {
    let inv = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    assert_eq!(conjugate_value(ScalarLoss::Erf, 0.5).unwrap(), inv);
    assert_eq!(conjugate_value(ScalarLoss::Log, 0.5).unwrap(), 1.0);
    assert_eq!(conjugate_value(ScalarLoss::Quad, 0.25).unwrap(), 0.75);
    for loss in ScalarLoss::ALL {
        for k in 1..=20 {
            let a = k as f64 / 21.0;
            let oracle = grid_golden_min(|z| loss.value(z) - a * z, -40.0, 40.0);
            let c = loss.conjugate(a).unwrap();
            assert!((c - oracle).abs() <= 1e-8, "{loss:?} α={a}: {c} vs {oracle}");
        }
    }
    assert!(conjugate_value(ScalarLoss::Erf, 0.0).is_err());
    assert!(conjugate_value(ScalarLoss::Log, 1.0).is_err());
    assert!(conjugate_value(ScalarLoss::Quad, 1.1).is_err());
    assert_eq!(conjugate_value(ScalarLoss::Quad, 0.0).unwrap(), 0.0);
}

#[test]
fn perspective_anchors() {
    let inv = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    assert_eq!(perspective(ScalarLoss::Erf, 1.0, 0.0).unwrap(), inv);
    assert!((perspective(ScalarLoss::Erf, 1e-8, 1.0).unwrap() - 1.0).abs() < 1e-7);
    assert_eq!(perspective(ScalarLoss::Erf, 2.0, 3.0).unwrap(), 2.0 * f_value(1.5));
    assert!(perspective(ScalarLoss::Erf, 0.0, 1.0).is_err());
    assert!(perspective(ScalarLoss::Log, -1.0, 1.0).is_err());
}

fn loss_strategy() -> impl Strategy<Value = ScalarLoss> {
    prop_oneof![Just(ScalarLoss::Erf), Just(ScalarLoss::Log), Just(ScalarLoss::Quad)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn cdf_symmetric_and_monotone(t in -30.0f64..30.0, dt in 1e-6f64..1.0) {
        prop_assert!((gauss_cdf(-t) - (1.0 - gauss_cdf(t))).abs() <= 1e-14);
        prop_assert!(gauss_cdf(t + dt) >= gauss_cdf(t));
        let v = gauss_cdf(t);
        prop_assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn quantile_round_trip(t in -6.0f64..6.0) {
        // above t = 5 one ulp of Φ(t) near 1 already moves t by more than
        // 1e-9, so the bound there is what the double can resolve
        let resolution = if t > 5.0 { 2.0 * f64::EPSILON / pdf(t) } else { 0.0 };
        let back = gauss_cdf_inv(gauss_cdf(t)).unwrap();
        prop_assert!((back - t).abs() <= 1e-9 + resolution, "{} vs {}", back, t);
    }

    #[test]
    fn quantile_inverts_cdf(p in 1e-12f64..(1.0 - 1e-12)) {
        let x = gauss_cdf_inv(p).unwrap();
        prop_assert!((gauss_cdf(x) - p).abs() <= 1e-10 * p.max(1e-3));
        prop_assert_eq!(gauss_cdf_inv(1.0 - p).unwrap(), -gauss_cdf_inv(1.0 - (1.0 - p)).unwrap());
    }

    #[test]
    fn f_gradient_consistency(z in -10.0f64..10.0) {
        let h = 1e-5 * (1.0 + z.abs());
        let fd = central_diff(f_value, z, h);
        let d = f_derivative(z);
        prop_assert!((fd - d).abs() <= 1e-7 * d.abs().max(1e-3), "{} vs {}", fd, d);
    }

    #[test]
    fn losses_finite_and_convex(loss in loss_strategy(), a in -60.0f64..60.0, b in -60.0f64..60.0, t in 0.0f64..1.0) {
        let (va, vb) = (loss.value(a), loss.value(b));
        prop_assert!(va.is_finite() && vb.is_finite());
        let mid = loss.value(t * a + (1.0 - t) * b);
        prop_assert!(mid <= t * va + (1.0 - t) * vb + 1e-12 * (1.0 + va.abs() + vb.abs()));
    }

    #[test]
    fn perspective_condition(loss in loss_strategy(), z in -50.0f64..50.0) {
        prop_assert!(loss.value(z) - z * loss.derivative(z) >= -1e-12);
    }

    #[test]
    fn erf_condition_is_density(z in -8.0f64..8.0) {
        let v = f_value(z) - z * f_derivative(z);
        prop_assert!((v - pdf(z)).abs() <= 1e-14 * (1.0 + z.abs()));
    }

    #[test]
    fn conjugate_concave_nonnegative(loss in loss_strategy(), a in 1e-6f64..(1.0 - 1e-6), b in 1e-6f64..(1.0 - 1e-6), t in 0.0f64..1.0) {
        let (ca, cb) = (loss.conjugate(a).unwrap(), loss.conjugate(b).unwrap());
        prop_assert!(ca >= 0.0 && cb >= 0.0);
        let mid = loss.conjugate(t * a + (1.0 - t) * b).unwrap();
        prop_assert!(mid >= t * ca + (1.0 - t) * cb - 1e-12);
    }

    #[test]
    fn perspective_jointly_convex(
        loss in loss_strategy(),
        s1 in 0.01f64..5.0, u1 in -10.0f64..10.0,
        s2 in 0.01f64..5.0, u2 in -10.0f64..10.0,
        t in 0.0f64..1.0,
    ) {
        let p1 = loss.perspective(s1, u1).unwrap();
        let p2 = loss.perspective(s2, u2).unwrap();
        let mid = loss.perspective(t * s1 + (1.0 - t) * s2, t * u1 + (1.0 - t) * u2).unwrap();
        prop_assert!(mid <= t * p1 + (1.0 - t) * p2 + 1e-10);
    }
}
