//! The fiber operators: band edges, the resolvent integral over the
//! two-particle channel, the Fredholm determinant and its zeros.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{build_grid, pair_sheets, w1, ModelParams, QuadratureGrid, TorusPoint, TWO_PI};

/// Which side of the continuous band a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// Lower (left) or upper (right) edge of the three-particle band.
    #[must_use]
    pub const fn threshold(self) -> f64 {
        match self {
            Self::Left => 0.0,
            Self::Right => 18.0,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Left => "left",
            Self::Right => "right",
        })
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Self::Left),
            "right" => Ok(Self::Right),
            other => Err(Error::InvalidInput(format!("unknown side {other:?}"))),
        }
    }
}

/// Range of the two-particle energy over the second momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandBounds {
    pub lower: f64,
    pub upper: f64,
}

impl BandBounds {
    #[must_use]
    pub fn contains_strictly(&self, z: f64) -> bool {
        z > self.lower && z < self.upper
    }
}

const SCAN_POINTS: usize = 2048;
const GOLDEN_TOL: f64 = 1e-12;

fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    f(0.5 * (a + b)).min(fc).min(fd)
}

/// Minimum and maximum over p of one coordinate's share of the
/// two-particle energy, `(1 − cos a) + (1 − cos((a+p)/2)) + (1 − cos p)`.
///
/// The half-angle term has period 4π in p, so scanning one such period covers
/// both branches.
#[must_use]
pub fn coordinate_band(a: f64) -> (f64, f64) {
    let g = |p: f64| 3.0 - a.cos() - (0.5 * (a + p)).cos() - p.cos();
    let h = 2.0 * TWO_PI / SCAN_POINTS as f64;
    let sample = |j: isize| g(-TWO_PI + j as f64 * h);
    let (mut jmin, mut jmax) = (0_isize, 0_isize);
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..SCAN_POINTS as isize {
        let v = sample(j);
        if v < vmin {
            vmin = v;
            jmin = j;
        }
        if v > vmax {
            vmax = v;
            jmax = j;
        }
    }
    let lo = |j: isize| -TWO_PI + (j - 1) as f64 * h;
    let hi = |j: isize| -TWO_PI + (j + 1) as f64 * h;
    let min = golden(g, lo(jmin), hi(jmin)).min(vmin);
    let max = -golden(|p| -g(p), lo(jmax), hi(jmax)).min(-vmax);
    (min, max)
}

/// Band edges m(k), M(k) of the fiber at `k`.
#[must_use]
pub fn band_bounds(k: &TorusPoint) -> BandBounds {
    let (mut lower, mut upper) = (0.0, 0.0);
    for a in k.coords() {
        let (lo, hi) = coordinate_band(a);
        lower += lo;
        upper += hi;
    }
    BandBounds { lower, upper }
}

/// The resolvent integral restricted to one fiber momentum.
pub trait Fiber {
    fn point(&self) -> TorusPoint;
    fn band(&self) -> BandBounds;
    /// ∫ dt / (w₂(k,t) − z) for z outside the open band.
    fn integral(&self, z: f64) -> Result<f64>;
}

/// A rule for integrating over the second momentum.
pub trait FiberQuadrature: Sync {
    type Fiber<'a>: Fiber
    where
        Self: 'a;

    fn fiber(&self, k: &TorusPoint) -> Result<Self::Fiber<'_>>;

    /// Short human-readable name, used in reports.
    fn label(&self) -> String;
}

pub(crate) fn check_outside(band: &BandBounds, z: f64) -> Result<()> {
    if band.contains_strictly(z) {
        Err(Error::InsideBand {
            z,
            lower: band.lower,
            upper: band.upper,
        })
    } else if z.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("non-finite energy {z}")))
    }
}

/// Branch values of every node along each axis, stored as (lower, upper)
/// pairs, for a fixed fiber momentum.
#[derive(Debug, Clone)]
pub struct MidpointFiber {
    k: TorusPoint,
    band: BandBounds,
    weight: f64,
    /// Per axis, `2n` entries: lower and upper branch at each node.
    axis_sheets: [Vec<f64>; 3],
}

impl MidpointFiber {
    #[must_use]
    pub fn new(grid: &QuadratureGrid, k: &TorusPoint) -> Self {
        let c = k.coords();
        let axis_sheets = [0, 1, 2].map(|l| {
            grid.axis()
                .iter()
                .flat_map(|&t| {
                    let (lo, hi) = pair_sheets(c[l], t);
                    [lo, hi]
                })
                .collect::<Vec<_>>()
        });
        Self {
            k: *k,
            band: band_bounds(k),
            weight: grid.weight(),
            axis_sheets,
        }
    }

    /// Raw midpoint sum with no band check. Nodes never sit on a band edge
    /// unless the edge happens to be attained at a node, in which case the
    /// sum is infinite.
    #[must_use]
    pub fn sum(&self, z: f64) -> f64 {
        let [x, y, t] = &self.axis_sheets;
        let mut pair = Vec::with_capacity(x.len() * y.len());
        for a in x {
            for b in y {
                pair.push(a + b - z);
            }
        }
        let mut acc = 0.0;
        for s in &pair {
            let mut inner = 0.0;
            for c in t {
                inner += 1.0 / (s + c);
            }
            acc += inner;
        }
        acc * self.weight / 8.0
    }

    /// Lowest and highest branch value attained on the grid.
    #[must_use]
    pub fn discrete_band(&self) -> BandBounds {
        let mut lower = 0.0;
        let mut upper = 0.0;
        for v in &self.axis_sheets {
            lower += v.iter().copied().fold(f64::INFINITY, f64::min);
            upper += v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        BandBounds { lower, upper }
    }
}

impl Fiber for MidpointFiber {
    fn point(&self) -> TorusPoint {
        self.k
    }

    fn band(&self) -> BandBounds {
        self.band
    }

    fn integral(&self, z: f64) -> Result<f64> {
        check_outside(&self.band, z)?;
        Ok(self.sum(z))
    }
}

impl FiberQuadrature for QuadratureGrid {
    type Fiber<'a> = MidpointFiber;

    fn fiber(&self, k: &TorusPoint) -> Result<MidpointFiber> {
        Ok(MidpointFiber::new(self, k))
    }

    fn label(&self) -> String {
        format!("midpoint n={}", self.n())
    }
}

/// Midpoint approximation of ∫ dt / (w₂(k,t) − z).
pub fn integral_i(k: &TorusPoint, z: f64, grid: &QuadratureGrid) -> Result<f64> {
    MidpointFiber::new(grid, k).integral(z)
}

/// A value together with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Richardson step over the grids n and 2n, assuming a first-order error,
/// which is the rate at a band edge. Away from the edge the midpoint sums
/// converge much faster and the step is harmless.
pub fn richardson_integral_i(k: &TorusPoint, z: f64, n: usize) -> Result<Estimate> {
    let coarse = integral_i(k, z, &build_grid(n)?)?;
    let fine = integral_i(k, z, &build_grid(2 * n)?)?;
    Ok(Estimate {
        value: 2.0 * fine - coarse,
        error: (fine - coarse).abs(),
    })
}

/// Δ_μ(k; z) = w₁(k) − z − (μ²/2)·I(k; z) evaluated on a prepared fiber.
pub fn fiber_delta<F: Fiber>(params: &ModelParams, fiber: &F, z: f64) -> Result<f64> {
    let i = fiber.integral(z)?;
    Ok(w1(&fiber.point(), params.gamma()) - z - 0.5 * params.mu() * params.mu() * i)
}

/// Fredholm determinant of the fiber at `k`.
pub fn fredholm_delta<Q: FiberQuadrature>(
    params: &ModelParams,
    k: &TorusPoint,
    z: f64,
    quadrature: &Q,
) -> Result<f64> {
    fiber_delta(params, &quadrature.fiber(k)?, z)
}

const ROOT_WIDTH: f64 = 1e-12;
const ROOT_RESIDUAL: f64 = 1e-10;
const MAX_EXPANSIONS: usize = 64;

/// Zero of the determinant on one side of the fiber band, if any.
///
/// The determinant is strictly decreasing in z away from the band, so the
/// limit value at the band edge decides existence and bisection finds the
/// unique zero.
pub fn fiber_eigenvalue<F: Fiber>(
    params: &ModelParams,
    fiber: &F,
    side: Side,
) -> Result<Option<f64>> {
    let band = fiber.band();
    let delta = |z: f64| fiber_delta(params, fiber, z);
    let mu2 = params.mu() * params.mu();
    // Outside the band |I| <= (2π)³ / dist, which bounds how far the zero can be.
    let reach = (mu2 * TWO_PI.powi(3) / 2.0).sqrt() + 1.0;
    let energy = w1(&fiber.point(), params.gamma());

    let (mut lo, mut hi) = match side {
        Side::Left => {
            let edge = delta(band.lower)?;
            if edge.is_nan() {
                return Err(Error::Numerical(
                    "determinant is NaN at the lower band edge".into(),
                ));
            }
            if edge >= 0.0 {
                return Ok(None);
            }
            let mut step = reach;
            let mut lo = energy.min(band.lower) - step;
            let mut n = 0;
            while delta(lo)? <= 0.0 {
                step *= 2.0;
                lo = energy.min(band.lower) - step;
                n += 1;
                if n > MAX_EXPANSIONS {
                    return Err(Error::Numerical("cannot bracket lower eigenvalue".into()));
                }
            }
            (lo, band.lower)
        }
        Side::Right => {
            let edge = delta(band.upper)?;
            if edge.is_nan() {
                return Err(Error::Numerical(
                    "determinant is NaN at the upper band edge".into(),
                ));
            }
            if edge <= 0.0 {
                return Ok(None);
            }
            let mut step = reach;
            let mut hi = energy.max(band.upper) + step;
            let mut n = 0;
            while delta(hi)? >= 0.0 {
                step *= 2.0;
                hi = energy.max(band.upper) + step;
                n += 1;
                if n > MAX_EXPANSIONS {
                    return Err(Error::Numerical("cannot bracket upper eigenvalue".into()));
                }
            }
            (band.upper, hi)
        }
    };

    // Invariant: delta(lo) > 0 > delta(hi), with the band edge standing in
    // for whichever end touches it.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ROOT_WIDTH * mid.abs().max(1.0) || mid == lo || mid == hi {
            break;
        }
        let d = delta(mid)?;
        if d == 0.0 {
            return Ok(Some(mid));
        }
        if d > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let residual = delta(root)?;
    if residual.abs() > ROOT_RESIDUAL {
        // Steep cusp next to the band edge: the bracket is tight but the
        // determinant still moves quickly. Report rather than fail.
        log::debug!("fiber root at {root} has residual {residual:e}");
    }
    Ok(Some(root))
}

/// Discrete eigenvalue of the fiber operator at `k` on the given side.
pub fn discrete_eigenvalue<Q: FiberQuadrature>(
    params: &ModelParams,
    k: &TorusPoint,
    side: Side,
    quadrature: &Q,
) -> Result<Option<f64>> {
    fiber_eigenvalue(params, &quadrature.fiber(k)?, side)
}

/// Largest and smallest constants with C₁·(|p|² + |q|²) ≤ w₂ ≤ C₂·(|p|² + |q|²)
/// over the supplied pairs, measured from `center` (0̄ or π̄) and using the
/// lower and upper branches respectively.
#[must_use]
pub fn quadratic_bounds(center: &TorusPoint, pairs: &[(TorusPoint, TorusPoint)]) -> (f64, f64) {
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0_f64;
    let at_corner = center.coords()[0] == PI;
    for (p, q) in pairs {
        let r2 = p.distance(center).powi(2) + q.distance(center).powi(2);
        if r2 == 0.0 {
            continue;
        }
        let sheets = crate::torus::w2_sheets(p, q);
        let lo = sheets.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = sheets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if at_corner {
            (18.0 - hi, 18.0 - lo)
        } else {
            (lo, hi)
        };
        c1 = c1.min(lo / r2);
        c2 = c2.max(hi / r2);
    }
    (c1, c2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_point_band_edges() {
        let b = band_bounds(&TorusPoint::origin());
        assert!(b.lower.abs() < 1e-12);
        assert!((b.upper - 75.0 / 8.0).abs() < 1e-12);
        let b = band_bounds(&TorusPoint::corner());
        assert!((b.lower - 69.0 / 8.0).abs() < 1e-12);
        assert!((b.upper - 18.0).abs() < 1e-12);
    }

    #[test]
    fn uncoupled_determinant_is_linear() {
        let grid = build_grid(8).unwrap();
        let k = TorusPoint::new(0.3, -1.0, 2.0);
        let p = ModelParams::uncoupled(2.5);
        let d = fredholm_delta(&p, &k, -3.0, &grid).unwrap();
        assert!((d - (w1(&k, 2.5) + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn inside_band_is_rejected() {
        let grid = build_grid(8).unwrap();
        assert!(matches!(
            integral_i(&TorusPoint::origin(), 1.0, &grid),
            Err(Error::InsideBand { .. })
        ));
    }

    #[test]
    fn integral_sign_follows_side() {
        let grid = build_grid(12).unwrap();
        let k = TorusPoint::new(0.4, 1.1, -2.0);
        let b = band_bounds(&k);
        assert!(integral_i(&k, b.lower - 0.5, &grid).unwrap() > 0.0);
        assert!(integral_i(&k, b.upper + 0.5, &grid).unwrap() < 0.0);
    }
}
