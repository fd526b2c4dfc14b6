use std::f64::consts::PI;

use faer::Mat;
use fockspec::efimov::{
    adaptive_sobolev_count, count_ladder, efimov_count_ladder, estimate_u, gauss_legendre,
    legendre_all, sobolev_kernel, sobolev_operator, t1_operator, threshold_expansion_residual,
};
use fockspec::essential::critical_couplings;
use fockspec::friedrichs::Side;
use fockspec::linalg::{asymmetry, symmetric_eigenvalues};
use fockspec::spectral::SpectralIntegrator;
use fockspec::torus::{build_grid, ModelParams, TorusPoint};
use fockspec::Error;

fn kernel_scale() -> f64 {
    25.0 / (8.0 * PI * PI * 6.0_f64.sqrt())
}

/// Closed forms of 2π∫ S(t; y) P_ℓ(t) dt for ℓ = 0, 1.
fn a0(y: f64) -> f64 {
    let c = 5.0 * y.cosh();
    2.0 * PI * kernel_scale() * (2.0 / (c - 1.0)).ln_1p()
}

fn a1(y: f64) -> f64 {
    let c = 5.0 * y.cosh();
    2.0 * PI * kernel_scale() * (2.0 - c * (2.0 / (c - 1.0)).ln_1p())
}

/// Fourier symbol ∫ a(y) cos(ξy) dy of an even radial kernel.
fn symbol(a: fn(f64) -> f64, xi: f64) -> f64 {
    let (h, m) = (1e-3, 60_000);
    let mut s = 0.5 * a(0.0);
    for j in 1..m {
        let y = j as f64 * h;
        s += a(y) * (xi * y).cos();
    }
    2.0 * h * s
}

#[test]
fn limiting_constant_from_the_symbol() {
    // Weyl asymptotics for a convolution operator on (0, r):
    // n(1, S_r) ≈ (r/2π)·|{ξ : â₀(ξ) > 1}| once higher sectors stay below 1.
    assert!(symbol(a0, 0.0) > 1.0);
    assert!(symbol(a1, 0.0) < 1.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if symbol(a0, mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let xi0 = 0.5 * (lo + hi);
    assert!((xi0 - 0.149514).abs() < 1e-5, "{xi0}");
    let u = xi0 / (2.0 * PI);
    assert!((u - 0.023796).abs() < 1e-5, "{u}");
}

#[test]
fn sector_kernels_match_closed_forms() {
    let op = sobolev_operator(10.0, 64, 3).unwrap();
    let h = 10.0 / 64.0;
    for d in [0usize, 1, 5, 30] {
        let y = d as f64 * h;
        assert!((op.sectors[0].matrix[(d, 0)] / h - a0(y)).abs() < 1e-12 * a0(y));
        assert!((op.sectors[1].matrix[(d, 0)] / h - a1(y)).abs() < 1e-10 * a0(y));
    }
    for s in &op.sectors {
        assert_eq!(s.multiplicity, 2 * s.ell + 1);
        assert!(asymmetry(&s.matrix) < 1e-15);
    }
    assert!((sobolev_kernel(1.0, 0.0) - 25.0 / (48.0 * PI * PI * 6.0_f64.sqrt())).abs() < 1e-16);
}

#[test]
fn sector_sum_equals_full_product_discretization() {
    let (r, radial_n) = (6.0, 64);
    let ops = sobolev_operator(r, radial_n, 7).unwrap();
    // Product rule on the sphere: Gauss in cos θ, uniform in φ.
    let (ct, wt) = gauss_legendre(4);
    let nphi = 8;
    let mut dirs = Vec::new();
    for (c, w) in ct.iter().zip(&wt) {
        let s = (1.0 - c * c).sqrt();
        for j in 0..nphi {
            let phi = 2.0 * PI * j as f64 / nphi as f64;
            dirs.push((
                [s * phi.cos(), s * phi.sin(), *c],
                w * 2.0 * PI / nphi as f64,
            ));
        }
    }
    let h = r / radial_n as f64;
    let m = dirs.len();
    let full = Mat::<f64>::from_fn(radial_n * m, radial_n * m, |p, q| {
        let (i, a) = (p / m, p % m);
        let (j, b) = (q / m, q % m);
        let t: f64 = (0..3).map(|l| dirs[a].0[l] * dirs[b].0[l]).sum();
        let y = (i as f64 - j as f64) * h;
        h * (dirs[a].1 * dirs[b].1).sqrt() * sobolev_kernel(t.clamp(-1.0, 1.0), y)
    });
    let ev = symmetric_eigenvalues(&full).unwrap();
    for lambda in [0.5, 0.2] {
        let full_count = ev.iter().filter(|&&x| x > lambda).count();
        assert_eq!(
            full_count,
            ops.count_above(lambda).unwrap(),
            "lambda = {lambda}"
        );
    }
}

#[test]
fn legendre_values() {
    let p = legendre_all(3, 0.5);
    assert!((p[2] - (-0.125)).abs() < 1e-15);
    assert!((p[3] - (-0.4375)).abs() < 1e-15);
}

#[test]
fn u_ladder_behaviour() {
    let est = estimate_u(1.0, &[10.0, 20.0], 64, 2).unwrap();
    assert_eq!(est.ladder[1].radial_n, 128);
    assert!(est.ladder.iter().all(|p| p.u >= 0.0));
    let big = estimate_u(1e3, &[10.0, 20.0], 64, 2).unwrap();
    assert_eq!(big.estimate, 0.0);
    assert!(big.ladder.iter().all(|p| p.count == 0));
    let (count, cutoff) = adaptive_sobolev_count(0.3, 20.0, 128).unwrap();
    assert!(count > 0 && cutoff < 32);
    assert!(estimate_u(-1.0, &[10.0], 64, 2).is_err());
    assert!(sobolev_operator(10.0, 32, 2).is_err());
}

#[test]
fn ball_operator_is_half_the_limiting_operator_at_large_radii() {
    // In logarithmic radius the kernel tends to S/2, whose top eigenvalue is
    // half the symbol maximum.
    let op = t1_operator(1e8, 192, 2).unwrap();
    for s in &op.sectors {
        assert!(asymmetry(&s.matrix) < 1e-12 * s.matrix.norm_l2());
    }
    let top = op.top_eigenvalue().unwrap();
    let half_symbol = 0.5 * symbol(a0, 0.0);
    assert!(
        top < half_symbol && top > 0.9 * half_symbol,
        "{top} vs {half_symbol}"
    );
}

#[test]
fn threshold_expansion_at_the_threshold_point() {
    let sp = SpectralIntegrator::new();
    let e = threshold_expansion_residual(6.0, &TorusPoint::origin(), 0.0, Side::Left, &sp).unwrap();
    assert_eq!(e.leading, 0.0);
    assert!(e.delta.abs() < 1e-9 && e.residual.abs() < 1e-9);
    let e =
        threshold_expansion_residual(6.0, &TorusPoint::corner(), 18.0, Side::Right, &sp).unwrap();
    assert!(e.residual.abs() < 1e-6);
    assert!(
        threshold_expansion_residual(6.0, &TorusPoint::origin(), 0.1, Side::Left, &sp).is_err()
    );
    assert!(
        threshold_expansion_residual(0.0, &TorusPoint::origin(), -0.1, Side::Left, &sp).is_err()
    );
    // Both vanish like a square root, so the ratio settles.
    let ratios: Vec<f64> = (3..=8)
        .map(|j| {
            let z = -(4.0_f64).powi(-j);
            threshold_expansion_residual(6.0, &TorusPoint::origin(), z, Side::Left, &sp)
                .unwrap()
                .ratio()
        })
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]));
    let steps: Vec<f64> = ratios.windows(2).map(|w| w[0] - w[1]).collect();
    assert!(steps.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn ladder_rejects_off_critical_coupling() {
    let grid = build_grid(8).unwrap();
    let cc = critical_couplings(6.0, &grid).unwrap();
    let params = ModelParams::new(0.8 * cc.mu_right.unwrap(), 6.0).unwrap();
    let err = efimov_count_ladder(&params, Side::Right, &[18.1], &grid, None).unwrap_err();
    assert!(matches!(err, Error::NotCritical { .. }));
}

#[test]
fn two_sided_ladders_agree_at_the_symmetric_shift() {
    let grid = build_grid(12).unwrap();
    let cc = critical_couplings(6.0, &grid).unwrap();
    assert_eq!(cc.mu_left, cc.mu_right);
    let params = ModelParams::new(cc.mu_right.unwrap(), 6.0).unwrap();
    let deltas = [1e-1, 1e-2, 1e-3, 1e-4];
    let right: Vec<f64> = deltas.iter().map(|d| 18.0 + d).collect();
    let left: Vec<f64> = deltas.iter().map(|d| -d).collect();
    let r = efimov_count_ladder(&params, Side::Right, &right, &grid, None).unwrap();
    let l = efimov_count_ladder(&params, Side::Left, &left, &grid, None).unwrap();
    assert_eq!(r.counts(), l.counts());
    assert!(r
        .rows
        .windows(2)
        .all(|w| w[0].log_distance < w[1].log_distance));
}

#[test]
fn subcritical_ladder_is_flat_and_grid_stable() {
    let fine = build_grid(12).unwrap();
    let coarse = build_grid(8).unwrap();
    let cc = critical_couplings(6.0, &fine).unwrap();
    let params = ModelParams::new(0.8 * cc.mu_right.unwrap(), 6.0).unwrap();
    let ladder = [18.1, 18.01, 18.001, 18.0001];
    let t = count_ladder(&params, Side::Right, &ladder, &fine, Some(&coarse)).unwrap();
    assert_eq!(t.strict_increases(), 0);
    assert!(t.rows.iter().all(|r| r.coarse_count == Some(r.count)));
    assert!(t.fit_slope.abs() < 1e-12 && t.fit_residual < 1e-12);
}
