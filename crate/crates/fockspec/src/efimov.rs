//! Behaviour at critical coupling: the square-root threshold expansion of the
//! determinant, eigenvalue count ladders approaching a threshold, and two
//! estimators of the constant governing logarithmic count growth.

use std::f64::consts::PI;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::birman_schwinger::eigenvalue_count;
use crate::error::{Error, Result};
use crate::essential::{critical_couplings, CRITICAL_RTOL};
use crate::friedrichs::{fredholm_delta, FiberQuadrature, Side};
use crate::linalg::{symmetric_eigenvalues, tally_above};
use crate::torus::{ModelParams, QuadratureGrid, TorusPoint};

/// Leading square-root term of the determinant next to a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdExpansion {
    pub leading: f64,
    pub delta: f64,
    pub residual: f64,
}

impl ThresholdExpansion {
    /// Determinant over its leading term; NaN when the leading term vanishes.
    #[must_use]
    pub fn ratio(&self) -> f64 {
        self.delta / self.leading
    }
}

/// Compare the determinant at critical coupling with its square-root
/// leading term. On the left, at μ = μ_l⁰(γ), the term is
/// c·√(6/5·|k|² − 2z); on the right, at μ = μ_r⁰(γ), it is
/// −c·√(6/5·|k − π̄|² + 2(z − 18)), with c = 32π²μ²/(5√5).
pub fn threshold_expansion_residual<Q: FiberQuadrature>(
    gamma: f64,
    k: &TorusPoint,
    z: f64,
    side: Side,
    quadrature: &Q,
) -> Result<ThresholdExpansion> {
    let cc = critical_couplings(gamma, quadrature)?;
    let mu = cc.critical(side).ok_or_else(|| {
        Error::InvalidInput(format!("no {side} critical coupling at gamma = {gamma}"))
    })?;
    let c = 32.0 * PI * PI * mu * mu / (5.0 * 5.0_f64.sqrt());
    let leading = match side {
        Side::Left => {
            if z > 0.0 {
                return Err(Error::InvalidInput(format!(
                    "left expansion needs z <= 0, got {z}"
                )));
            }
            let r = k.distance(&TorusPoint::origin());
            c * (1.2 * r * r - 2.0 * z).sqrt()
        }
        Side::Right => {
            if z < 18.0 {
                return Err(Error::InvalidInput(format!(
                    "right expansion needs z >= 18, got {z}"
                )));
            }
            let r = k.distance(&TorusPoint::corner());
            -c * (1.2 * r * r + 2.0 * (z - 18.0)).sqrt()
        }
    };
    let delta = fredholm_delta(&ModelParams::new(mu, gamma)?, k, z, quadrature)?;
    Ok(ThresholdExpansion {
        leading,
        delta,
        residual: delta - leading,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub z: f64,
    pub log_distance: f64,
    pub count: usize,
    /// Count on the comparison grid, when one was supplied.
    pub coarse_count: Option<usize>,
}

/// Eigenvalue counts approaching a threshold, with a straight-line fit of
/// count against |log distance|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    pub threshold: f64,
    pub side: Side,
    pub grid_n: usize,
    pub coarse_grid_n: Option<usize>,
    pub rows: Vec<CountRow>,
    pub fit_slope: f64,
    pub fit_intercept: f64,
    /// Root-mean-square residual of the fit.
    pub fit_residual: f64,
    /// Counts stop growing at the deep end of the ladder, or disagree with
    /// the comparison grid there: the staircase reflects grid resolution
    /// rather than the distance to the threshold.
    pub grid_limited: bool,
}

impl CountTable {
    #[must_use]
    pub fn counts(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.count).collect()
    }

    /// Number of places where the count strictly increases along the ladder.
    #[must_use]
    pub fn strict_increases(&self) -> usize {
        self.rows
            .windows(2)
            .filter(|w| w[1].count > w[0].count)
            .count()
    }
}

/// Ordinary least squares y = a·x + b; returns (a, b, rms residual).
#[must_use]
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    if x.len() < 2 {
        return (0.0, y.first().copied().unwrap_or(0.0), 0.0);
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Count ladder at critical coupling on one side.
///
/// The coupling must equal the critical value computed on `grid` itself,
/// within the classification tolerance.
pub fn efimov_count_ladder(
    params: &ModelParams,
    side: Side,
    z_ladder: &[f64],
    grid: &QuadratureGrid,
    coarse: Option<&QuadratureGrid>,
) -> Result<CountTable> {
    let cc = critical_couplings(params.gamma(), grid)?;
    let critical = cc.critical(side).ok_or_else(|| {
        Error::InvalidInput(format!(
            "no {side} critical coupling at gamma = {}",
            params.gamma()
        ))
    })?;
    if (params.mu() - critical).abs() > CRITICAL_RTOL * critical {
        return Err(Error::NotCritical {
            mu: params.mu(),
            critical,
        });
    }
    count_ladder(params, side, z_ladder, grid, coarse)
}

/// Count ladder without the criticality precondition; used for controls
/// away from critical coupling.
pub fn count_ladder(
    params: &ModelParams,
    side: Side,
    z_ladder: &[f64],
    grid: &QuadratureGrid,
    coarse: Option<&QuadratureGrid>,
) -> Result<CountTable> {
    let threshold = side.threshold();
    let coarse_params = match coarse {
        Some(g) => {
            // Rescale so the comparison grid sits at the same position
            // relative to its own critical coupling.
            let own = critical_couplings(params.gamma(), grid)?.critical(side);
            let theirs = critical_couplings(params.gamma(), g)?.critical(side);
            let mu = match (own, theirs) {
                (Some(a), Some(b)) => params.mu() * b / a,
                _ => params.mu(),
            };
            Some((g, ModelParams::new(mu, params.gamma())?))
        }
        None => None,
    };
    let mut rows = Vec::with_capacity(z_ladder.len());
    for &z in z_ladder {
        let d = (z - threshold).abs();
        if d == 0.0 {
            return Err(Error::InvalidInput("ladder point on the threshold".into()));
        }
        let count = eigenvalue_count(params, z, side, grid)?.count;
        let coarse_count = match &coarse_params {
            Some((g, p)) => Some(eigenvalue_count(p, z, side, g)?.count),
            None => None,
        };
        rows.push(CountRow {
            z,
            log_distance: d.ln().abs(),
            count,
            coarse_count,
        });
    }
    rows.sort_by(|a, b| a.log_distance.total_cmp(&b.log_distance));
    if rows.windows(2).any(|w| w[1].count < w[0].count) {
        return Err(Error::Invariant(format!(
            "counts decrease towards the threshold: {:?}",
            rows.iter().map(|r| r.count).collect::<Vec<_>>()
        )));
    }
    let x: Vec<f64> = rows.iter().map(|r| r.log_distance).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.count as f64).collect();
    let (fit_slope, fit_intercept, fit_residual) = least_squares(&x, &y);
    let plateau = rows.len() >= 2 && rows[rows.len() - 1].count == rows[rows.len() - 2].count;
    let disagree = rows
        .last()
        .is_some_and(|r| r.coarse_count.is_some_and(|c| c != r.count));
    Ok(CountTable {
        threshold,
        side,
        grid_n: grid.n(),
        coarse_grid_n: coarse.map(QuadratureGrid::n),
        rows,
        fit_slope,
        fit_intercept,
        fit_residual,
        grid_limited: plateau || disagree,
    })
}

/// Gauss–Legendre nodes and weights on [−1, 1].
#[must_use]
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, t);
            let step = p / dp;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, t);
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (t * p1 - p0) / (t * t - 1.0))
}

/// Legendre polynomials P_0..=P_L at t.
#[must_use]
pub fn legendre_all(l_max: usize, t: f64) -> Vec<f64> {
    let mut p = vec![1.0; l_max + 1];
    if l_max >= 1 {
        p[1] = t;
    }
    for k in 2..=l_max {
        p[k] = ((2 * k - 1) as f64 * t * p[k - 1] - (k - 1) as f64 * p[k - 2]) / k as f64;
    }
    p
}

const ANGULAR_NODES: usize = 64;
/// Cap on the adaptive angular cutoff.
pub const MAX_ANGULAR_CUTOFF: usize = 32;

/// Angular kernel of the limiting operator on (0, r) × sphere.
#[must_use]
pub fn sobolev_kernel(t: f64, y: f64) -> f64 {
    25.0 / (8.0 * PI * PI * 6.0_f64.sqrt()) / (5.0 * y.cosh() + t)
}

/// Legendre coefficients 2π∫ f(t) P_ℓ(t) dt for ℓ = 0..=L.
fn sector_coefficients(
    f: impl Fn(f64) -> f64,
    l_max: usize,
    gl: &(Vec<f64>, Vec<f64>),
) -> Vec<f64> {
    let mut out = vec![0.0; l_max + 1];
    for (t, w) in gl.0.iter().zip(&gl.1) {
        let v = f(*t) * w;
        for (l, p) in legendre_all(l_max, *t).into_iter().enumerate() {
            out[l] += v * p;
        }
    }
    out.iter_mut().for_each(|x| *x *= 2.0 * PI);
    out
}

/// One angular momentum sector of a rotation-invariant operator.
#[derive(Debug, Clone)]
pub struct SectorMatrix {
    pub ell: usize,
    pub multiplicity: usize,
    pub matrix: Mat<f64>,
}

impl SectorMatrix {
    pub fn count_above(&self, lambda: f64) -> Result<usize> {
        Ok(tally_above(&symmetric_eigenvalues(&self.matrix)?, lambda).0)
    }
}

/// Sum over sectors of multiplicity times the sector count.
pub fn sector_count(sectors: &[SectorMatrix], lambda: f64) -> Result<usize> {
    sectors
        .par_iter()
        .map(|s| Ok(s.multiplicity * s.count_above(lambda)?))
        .sum()
}

/// Midpoint Nyström discretization of the limiting operator on (0, r).
#[derive(Debug, Clone)]
pub struct SobolevOperator {
    pub r: f64,
    pub radial_n: usize,
    pub angular_cutoff: usize,
    pub sectors: Vec<SectorMatrix>,
}

pub fn sobolev_operator(r: f64, radial_n: usize, angular_cutoff: usize) -> Result<SobolevOperator> {
    if !(r > 0.0 && r.is_finite()) || radial_n < 64 {
        return Err(Error::InvalidInput(format!(
            "need r > 0 and radial_n >= 64, got r = {r}, n = {radial_n}"
        )));
    }
    let h = r / radial_n as f64;
    let gl = gauss_legendre(ANGULAR_NODES);
    // The radial kernel depends on the node offset only.
    let by_offset: Vec<Vec<f64>> = (0..radial_n)
        .map(|d| sector_coefficients(|t| sobolev_kernel(t, d as f64 * h), angular_cutoff, &gl))
        .collect();
    let sectors = (0..=angular_cutoff)
        .map(|ell| SectorMatrix {
            ell,
            multiplicity: 2 * ell + 1,
            matrix: Mat::from_fn(radial_n, radial_n, |i, j| h * by_offset[i.abs_diff(j)][ell]),
        })
        .collect();
    Ok(SobolevOperator {
        r,
        radial_n,
        angular_cutoff,
        sectors,
    })
}

impl SobolevOperator {
    pub fn count_above(&self, lambda: f64) -> Result<usize> {
        sector_count(&self.sectors, lambda)
    }
}

/// Count with the angular cutoff raised until two consecutive sectors add
/// nothing, capped at [`MAX_ANGULAR_CUTOFF`]. Returns (count, cutoff used).
pub fn adaptive_sobolev_count(lambda: f64, r: f64, radial_n: usize) -> Result<(usize, usize)> {
    let op = sobolev_operator(r, radial_n, MAX_ANGULAR_CUTOFF)?;
    let mut total = 0;
    let mut empty_run = 0;
    for s in &op.sectors {
        let c = s.count_above(lambda)?;
        total += s.multiplicity * c;
        empty_run = if c == 0 { empty_run + 1 } else { 0 };
        if empty_run == 2 {
            return Ok((total, s.ell));
        }
    }
    Ok((total, MAX_ANGULAR_CUTOFF))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub r: f64,
    pub radial_n: usize,
    pub count: usize,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UEstimate {
    pub lambda: f64,
    pub ladder: Vec<LadderPoint>,
    pub estimate: f64,
    /// Relative change of u(r) over the last ladder step.
    pub last_relative_change: f64,
    pub converged: bool,
}

/// u(r) = n(λ, S_r)/(2r) along the ladder, with a Richardson step assuming
/// an error proportional to 1/r. The radial spacing is fixed by the first
/// ladder point and `radial_n`, so longer intervals get more nodes.
pub fn estimate_u(
    lambda: f64,
    r_ladder: &[f64],
    radial_n: usize,
    angular_cutoff: usize,
) -> Result<UEstimate> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if r_ladder.is_empty() {
        return Err(Error::InvalidInput("empty r ladder".into()));
    }
    let spacing = r_ladder[0] / radial_n as f64;
    let ladder = r_ladder
        .iter()
        .map(|&r| {
            let n = ((r / spacing).round() as usize).max(radial_n);
            let count = sobolev_operator(r, n, angular_cutoff)?.count_above(lambda)?;
            Ok(LadderPoint {
                r,
                radial_n: n,
                count,
                u: count as f64 / (2.0 * r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let last = ladder[ladder.len() - 1];
    let (estimate, change) = if ladder.len() >= 2 {
        let prev = ladder[ladder.len() - 2];
        let est = (last.r * last.u - prev.r * prev.u) / (last.r - prev.r);
        let change = if last.u != 0.0 {
            (last.u - prev.u).abs() / last.u.abs()
        } else if prev.u == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        (est, change)
    } else {
        (last.u, f64::INFINITY)
    };
    Ok(UEstimate {
        lambda,
        ladder,
        estimate,
        last_relative_change: change,
        converged: change <= 0.1,
    })
}

/// Kernel of the ball-restricted operator at radii p, q and cosine t of the
/// angle between them.
#[must_use]
pub fn t1_kernel(p: f64, q: f64, t: f64) -> f64 {
    let c = 5.0 * 5.0_f64.sqrt() / (8.0 * PI * PI);
    c * (1.2 * p * p + 2.0).powf(-0.25) * (1.2 * q * q + 2.0).powf(-0.25)
        / (5.0 * p * p + 2.0 * p * q * t + 5.0 * q * q + 8.0)
}

/// Sector decomposition of the operator restricted to the ball of radius r.
#[derive(Debug, Clone)]
pub struct T1Operator {
    pub r: f64,
    pub radial_n: usize,
    pub angular_cutoff: usize,
    pub sectors: Vec<SectorMatrix>,
}

/// Radial nodes are midpoints in u = ln(1 + ρ) on (0, ln(1 + r)), so the
/// scale-invariant large-ρ region is resolved evenly; the measure ρ² dρ is
/// folded into the symmetric weights.
pub fn t1_operator(r: f64, radial_n: usize, angular_cutoff: usize) -> Result<T1Operator> {
    if !(r > 0.0 && r.is_finite()) || radial_n == 0 {
        return Err(Error::InvalidInput(format!(
            "need r > 0 and radial_n > 0, got r = {r}, n = {radial_n}"
        )));
    }
    let umax = r.ln_1p();
    let h = umax / radial_n as f64;
    let rho: Vec<f64> = (0..radial_n)
        .map(|i| ((i as f64 + 0.5) * h).exp_m1())
        .collect();
    let sw: Vec<f64> = rho
        .iter()
        .map(|&p| (p * p * (1.0 + p) * h).sqrt())
        .collect();
    let gl = gauss_legendre(ANGULAR_NODES);
    let coeffs: Vec<Vec<Vec<f64>>> = (0..radial_n)
        .into_par_iter()
        .map(|i| {
            (0..=i)
                .map(|j| sector_coefficients(|t| t1_kernel(rho[i], rho[j], t), angular_cutoff, &gl))
                .collect()
        })
        .collect();
    let sectors = (0..=angular_cutoff)
        .map(|ell| SectorMatrix {
            ell,
            multiplicity: 2 * ell + 1,
            matrix: Mat::from_fn(radial_n, radial_n, |i, j| {
                let (a, b) = if j <= i { (i, j) } else { (j, i) };
                sw[i] * sw[j] * coeffs[a][b][ell]
            }),
        })
        .collect();
    Ok(T1Operator {
        r,
        radial_n,
        angular_cutoff,
        sectors,
    })
}

impl T1Operator {
    pub fn count_above(&self, lambda: f64) -> Result<usize> {
        sector_count(&self.sectors, lambda)
    }

    /// Largest eigenvalue over all sectors.
    pub fn top_eigenvalue(&self) -> Result<f64> {
        let mut top = f64::NEG_INFINITY;
        for s in &self.sectors {
            if let Some(&v) = symmetric_eigenvalues(&s.matrix)?.last() {
                top = top.max(v);
            }
        }
        Ok(top)
    }
}
