use std::f64::consts::PI;

use fockspec::essential::critical_couplings;
use fockspec::friedrichs::{
    band_bounds, fredholm_delta, integral_i, richardson_integral_i, Fiber, FiberQuadrature,
};
use fockspec::spectral::SpectralIntegrator;
use fockspec::torus::{build_grid, ModelParams, TorusPoint};

/// Midpoint sum of I(0̄; 0) written out from scratch: at k = 0̄ each
/// coordinate contributes 2 − cos p ∓ |cos(p/2)|.
fn brute_force_origin_integral(n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    let branches: Vec<[f64; 2]> = (0..n)
        .map(|j| {
            let p = -PI + (j as f64 + 0.5) * h;
            let base = 2.0 - p.cos();
            let half = (0.5 * p).cos().abs();
            [base - half, base + half]
        })
        .collect();
    let mut total = 0.0;
    for a in &branches {
        for b in &branches {
            for c in &branches {
                for s in 0..8 {
                    total += 1.0 / (a[s & 1] + b[s >> 1 & 1] + c[s >> 2 & 1]);
                }
            }
        }
    }
    total * h.powi(3) / 8.0
}

const MIDPOINT_48: f64 = 49.16495002705057;
const SPECTRAL: f64 = 49.308726622365;

#[test]
fn origin_integral_matches_brute_force() {
    let lib = integral_i(&TorusPoint::origin(), 0.0, &build_grid(48).unwrap()).unwrap();
    let brute = brute_force_origin_integral(48);
    assert!((lib - brute).abs() < 1e-10 * brute, "{lib} vs {brute}");
    assert!((lib - MIDPOINT_48).abs() < 1e-10, "{lib}");
}

#[test]
fn spectral_origin_integral_is_frozen_and_extrapolates_the_midpoint_rule() {
    let sp = SpectralIntegrator::new();
    let i0 = sp
        .fiber(&TorusPoint::origin())
        .unwrap()
        .integral(0.0)
        .unwrap();
    assert!((i0 - SPECTRAL).abs() < 1e-9, "{i0}");
    // The midpoint rule converges at first order at the band edge.
    let rich = richardson_integral_i(&TorusPoint::origin(), 0.0, 48).unwrap();
    assert!(
        (rich.value - i0).abs() < 2e-3 * i0,
        "{} vs {i0}",
        rich.value
    );
    let brute = 2.0 * brute_force_origin_integral(96) - brute_force_origin_integral(48);
    assert!((rich.value - brute).abs() < 1e-9 * brute);
}

#[test]
fn corner_integral_mirrors_origin_integral() {
    for n in [16, 48] {
        let g = build_grid(n).unwrap();
        let a = integral_i(&TorusPoint::origin(), 0.0, &g).unwrap();
        let b = integral_i(&TorusPoint::corner(), 18.0, &g).unwrap();
        assert!((a + b).abs() < 1e-9 * a, "{a} {b}");
    }
}

#[test]
fn critical_couplings_make_the_edge_determinant_vanish() {
    let sp = SpectralIntegrator::new();
    for gamma in [3.0, 6.0, 9.0] {
        let cc = critical_couplings(gamma, &sp).unwrap();
        let l = ModelParams::new(cc.mu_left.unwrap(), gamma).unwrap();
        let r = ModelParams::new(cc.mu_right.unwrap(), gamma).unwrap();
        assert!(
            fredholm_delta(&l, &TorusPoint::origin(), 0.0, &sp)
                .unwrap()
                .abs()
                < 1e-9
        );
        assert!(
            fredholm_delta(&r, &TorusPoint::corner(), 18.0, &sp)
                .unwrap()
                .abs()
                < 1e-6
        );
    }
    let none = critical_couplings(0.0, &sp).unwrap();
    assert!(none.mu_left.is_none() && none.mu_right.is_some());
    let none = critical_couplings(12.0, &sp).unwrap();
    assert!(none.mu_right.is_none());
}

#[test]
fn inside_band_is_rejected() {
    let k = TorusPoint::new(0.3, -1.0, 2.0);
    let band = band_bounds(&k);
    let mid = 0.5 * (band.lower + band.upper);
    assert!(integral_i(&k, mid, &build_grid(8).unwrap()).is_err());
    let sp = SpectralIntegrator::new();
    assert!(sp.fiber(&k).unwrap().integral(mid).is_err());
}
