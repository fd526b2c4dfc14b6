use std::f64::consts::PI;

use fockspec::friedrichs::{band_bounds, fredholm_delta, integral_i, Side};
use fockspec::spectral::SpectralIntegrator;
use fockspec::torus::{
    build_grid, epsilon, pair_sheets, w1, w2, w2_sheets, wrap_angle, ModelParams, TorusPoint,
};
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = f64> {
    -PI..=PI
}

fn point() -> impl Strategy<Value = TorusPoint> {
    (angle(), angle(), angle()).prop_map(|(a, b, c)| TorusPoint::new(a, b, c))
}

fn sorted_pair((a, b): (f64, f64)) -> [f64; 2] {
    if a <= b {
        [a, b]
    } else {
        [b, a]
    }
}

proptest! {
    #[test]
    fn wrap_lands_in_half_open_interval(x in -100.0..100.0_f64, m in -5i32..5) {
        let w = wrap_angle(x);
        prop_assert!(w > -PI && w <= PI);
        let shifted = wrap_angle(x + 2.0 * PI * f64::from(m));
        prop_assert!((shifted - w).abs() < 1e-9 || (shifted - w).abs() > 2.0 * PI - 1e-9);
        prop_assert_eq!(wrap_angle(w), w);
    }

    #[test]
    fn dispersion_ranges(k in point(), gamma in -20.0..20.0_f64) {
        let e = epsilon(&k);
        prop_assert!((0.0..=6.0).contains(&e));
        prop_assert!((w1(&k, gamma) - e - gamma).abs() < 1e-12);
    }

    #[test]
    fn pair_energy_is_symmetric_and_bounded(k in point(), p in point()) {
        prop_assert!((w2(&k, &p) - w2(&p, &k)).abs() < 1e-12);
        let a = w2_sheets(&k, &p);
        let b = w2_sheets(&p, &k);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!(*x >= -1e-12 && *x <= 18.0 + 1e-12);
        }
        // The principal lift picks one branch per coordinate.
        let lift = w2(&k, &p);
        prop_assert!(a.iter().any(|s| (s - lift).abs() < 1e-12));
    }

    #[test]
    fn branch_pair_is_continuous_across_the_seam(a in angle(), b in angle()) {
        let here = sorted_pair(pair_sheets(a, b));
        for shift in [2.0 * PI, -2.0 * PI] {
            let there = sorted_pair(pair_sheets(a + shift, b));
            prop_assert!((here[0] - there[0]).abs() < 1e-12);
            prop_assert!((here[1] - there[1]).abs() < 1e-12);
        }
        // Approaching the seam from both sides gives the same branch pair.
        let left = sorted_pair(pair_sheets(PI - 1e-9, b));
        let right = sorted_pair(pair_sheets(-PI + 1e-9, b));
        prop_assert!((left[0] - right[0]).abs() < 1e-7 && (left[1] - right[1]).abs() < 1e-7);
    }

    #[test]
    fn band_envelopes_all_branches(k in point(), p in point()) {
        let band = band_bounds(&k);
        prop_assert!(band.lower <= band.upper);
        prop_assert!(band.lower >= -1e-12 && band.upper <= 18.0 + 1e-12);
        for s in w2_sheets(&k, &p) {
            prop_assert!(s >= band.lower - 1e-9 && s <= band.upper + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn determinant_decreases_off_the_band(
        k in point(),
        mu in 0.05..3.0_f64,
        gamma in -5.0..15.0_f64,
        d1 in 0.01..5.0_f64,
        d2 in 0.01..5.0_f64,
    ) {
        let grid = build_grid(8).unwrap();
        let params = ModelParams::new(mu, gamma).unwrap();
        let band = band_bounds(&k);
        let (near, far) = (d1.min(d2), d1.max(d2) + 0.01);
        let left = |d: f64| fredholm_delta(&params, &k, band.lower - d, &grid).unwrap();
        let right = |d: f64| fredholm_delta(&params, &k, band.upper + d, &grid).unwrap();
        prop_assert!(left(far) > left(near));
        prop_assert!(right(near) > right(far));
    }

    #[test]
    fn resolvent_integral_sign_and_reflection(k in point(), d in 0.05..4.0_f64) {
        let grid = build_grid(8).unwrap();
        let band = band_bounds(&k);
        let below = integral_i(&k, band.lower - d, &grid).unwrap();
        let above = integral_i(&k, band.upper + d, &grid).unwrap();
        prop_assert!(below > 0.0 && above < 0.0);
        // p ↦ π̄ − p maps the energy w to 18 − w and even grids onto themselves.
        let mirror = TorusPoint::corner().sub(&k);
        let reflected = integral_i(&mirror, 18.0 - (band.lower - d), &grid).unwrap();
        prop_assert!((reflected + below).abs() < 1e-9 * below.abs());
    }

    #[test]
    fn spectral_integral_respects_reflection(k in point(), d in 0.05..4.0_f64) {
        let sp = SpectralIntegrator::new();
        let band = band_bounds(&k);
        let z = band.lower - d;
        let mirror = TorusPoint::corner().sub(&k);
        let a = integral_i(&k, z, &build_grid(64).unwrap()).unwrap();
        let b = fockspec::friedrichs::FiberQuadrature::fiber(&sp, &k)
            .and_then(|f| fockspec::friedrichs::Fiber::integral(&f, z))
            .unwrap();
        let c = fockspec::friedrichs::FiberQuadrature::fiber(&sp, &mirror)
            .and_then(|f| fockspec::friedrichs::Fiber::integral(&f, 18.0 - z))
            .unwrap();
        prop_assert!((b + c).abs() < 1e-8 * b.abs());
        // Away from the band edge the midpoint rule is already accurate.
        if d > 0.5 {
            prop_assert!((a - b).abs() < 1e-4 * b.abs(), "{a} vs {b}");
        }
    }
}

#[test]
fn side_thresholds() {
    assert_eq!(Side::Left.threshold(), 0.0);
    assert_eq!(Side::Right.threshold(), 18.0);
    assert_eq!("right".parse::<Side>().unwrap(), Side::Right);
}
