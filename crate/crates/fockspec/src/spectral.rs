//! Continuum evaluation of the resolvent integral through its Laplace
//! representation.
//!
//! Outside the band, 1/(w − z) = ∫₀^∞ e^{−s(w−z)} ds, and the two-particle
//! energy splits into a sum over coordinates. The torus integral therefore
//! becomes a one-dimensional integral over s of a product of three periodic
//! one-dimensional integrals. Those are smooth and periodic in the angle, so
//! the trapezoid rule converges geometrically; the s-integral is done by the
//! trapezoid rule in log s, with analytic pieces below and above the grid.

use std::cell::OnceCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};
use crate::friedrichs::{check_outside, coordinate_band, BandBounds, Fiber, FiberQuadrature, Side};
use crate::torus::{TorusPoint, TWO_PI};

const LOG_S_MIN: f64 = -36.0;
const LOG_STEP: f64 = 0.2;
const LOG_S_MAX: f64 = 13.9;

/// Laplace-route integrator for the continuum resolvent integral.
///
/// One-dimensional factor tables are cached per coordinate value, so sweeps
/// over many fiber momenta sharing coordinates stay cheap.
#[derive(Debug)]
pub struct SpectralIntegrator {
    log_s: Vec<f64>,
    cache: Mutex<HashMap<(u64, Side), Arc<CoordTable>>>,
}

#[derive(Debug)]
struct CoordTable {
    /// Band edge of this coordinate on the relevant side.
    edge: f64,
    /// One-dimensional factor at every log-s node, edge shifted out.
    values: Vec<f64>,
}

impl Default for SpectralIntegrator {
    fn default() -> Self {
        Self::new()
    }
}

impl SpectralIntegrator {
    #[must_use]
    pub fn new() -> Self {
        let count = ((LOG_S_MAX - LOG_S_MIN) / LOG_STEP).round() as usize + 1;
        let log_s = (0..count)
            .map(|j| LOG_S_MIN + j as f64 * LOG_STEP)
            .collect();
        Self {
            log_s,
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn table(&self, a: f64, side: Side) -> Arc<CoordTable> {
        // The factor is even in the coordinate value.
        let a = a.abs();
        let key = (a.to_bits(), side);
        if let Some(t) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Arc::clone(t);
        }
        let t = Arc::new(self.build_table(a, side));
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(key, Arc::clone(&t));
        t
    }

    fn build_table(&self, a: f64, side: Side) -> CoordTable {
        let (min, max) = coordinate_band(a);
        let base_a = 3.0 - a.cos();
        let values = self
            .log_s
            .iter()
            .map(|&x| {
                let s = x.exp();
                let nt = nodes_for(s);
                let h = TWO_PI / nt as f64;
                let mut acc = 0.0;
                for j in 0..nt {
                    let t = -std::f64::consts::PI + (j as f64 + 0.5) * h;
                    let base = base_a - t.cos();
                    // Signed half-angle cosine: the two terms swap across the
                    // seam, so their sum is smooth and 2π-periodic.
                    let c = (0.5 * (a + t)).cos();
                    acc += match side {
                        Side::Left => (-s * (base - c - min)).exp() + (-s * (base + c - min)).exp(),
                        Side::Right => (s * (base - c - max)).exp() + (s * (base + c - max)).exp(),
                    };
                }
                0.5 * acc * h
            })
            .collect();
        let edge = match side {
            Side::Left => min,
            Side::Right => max,
        };
        CoordTable { edge, values }
    }
}

fn nodes_for(s: f64) -> usize {
    let n = (12.0 * s.sqrt()).ceil() as usize;
    (n.max(64) + 1) & !1
}

/// ∫_S^∞ C s^{−p} e^{−εs} ds.
fn power_tail(c: f64, p: f64, eps: f64, s: f64) -> f64 {
    if eps <= 0.0 {
        return if p > 1.0 {
            c * s.powf(1.0 - p) / (p - 1.0)
        } else {
            f64::INFINITY
        };
    }
    let x = eps * s;
    if x > 700.0 {
        return 0.0;
    }
    // Γ(1 − p, x) by upward recurrence from a positive order.
    let mut a = 1.0 - p;
    let mut shifts = 0;
    while a <= 0.0 {
        a += 1.0;
        shifts += 1;
    }
    if (a - 1.0).abs() < 1e-9 && shifts > 0 {
        a -= 1e-9;
    }
    let mut g = gamma_ur(a, x) * gamma(a);
    for _ in 0..shifts {
        a -= 1.0;
        g = (g - x.powf(a) * (-x).exp()) / a;
    }
    c * eps.powf(p - 1.0) * g
}

impl SpectralIntegrator {
    fn laplace(&self, tables: &[Arc<CoordTable>; 3], eps: f64) -> f64 {
        let n = self.log_s.len();
        let product = |j: usize| tables.iter().map(|t| t.values[j]).product::<f64>();
        // Below the grid the factor equals its s = 0 value (2π)³.
        let s0 = self.log_s[0].exp();
        let head = if eps > 0.0 {
            -(-eps * s0).exp_m1() / eps
        } else {
            s0
        };
        let mut total = TWO_PI.powi(3) * head;
        let mut trap = 0.0;
        for j in 0..n {
            let s = self.log_s[j].exp();
            let g = s * (-eps * s).exp() * product(j);
            trap += if j == 0 || j == n - 1 { 0.5 * g } else { g };
        }
        total += trap * LOG_STEP;

        // Large-s tail from a local power law fitted on the last two nodes.
        let (f1, f0) = (product(n - 1), product(n - 2));
        let s_max = self.log_s[n - 1].exp();
        if f1 > 0.0 && f0 > 0.0 {
            let p = (f0 / f1).ln() / LOG_STEP;
            let c = f1 * s_max.powf(p);
            total += power_tail(c, p, eps, s_max);
            // Euler–Maclaurin correction for the truncated trapezoid end,
            // using the same local model for the slope in log s.
            let g = s_max * (-eps * s_max).exp() * f1;
            let slope = g * (1.0 - p - eps * s_max);
            total -= LOG_STEP * LOG_STEP / 12.0 * slope;
        }
        total
    }
}

/// Fiber of the spectral integrator; factor tables are fetched per side on
/// first use.
#[derive(Debug)]
pub struct SpectralFiber<'a> {
    owner: &'a SpectralIntegrator,
    k: TorusPoint,
    band: BandBounds,
    left: OnceCell<[Arc<CoordTable>; 3]>,
    right: OnceCell<[Arc<CoordTable>; 3]>,
}

impl SpectralFiber<'_> {
    fn tables(&self, side: Side) -> &[Arc<CoordTable>; 3] {
        let cell = match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        };
        cell.get_or_init(|| self.k.coords().map(|a| self.owner.table(a, side)))
    }
}

impl Fiber for SpectralFiber<'_> {
    fn point(&self) -> TorusPoint {
        self.k
    }

    fn band(&self) -> BandBounds {
        self.band
    }

    fn integral(&self, z: f64) -> Result<f64> {
        check_outside(&self.band, z)?;
        let value = if z <= self.band.lower {
            let t = self.tables(Side::Left);
            let edge: f64 = t.iter().map(|c| c.edge).sum();
            self.owner.laplace(t, (edge - z).max(0.0))
        } else {
            let t = self.tables(Side::Right);
            let edge: f64 = t.iter().map(|c| c.edge).sum();
            -self.owner.laplace(t, (z - edge).max(0.0))
        };
        if value.is_nan() {
            return Err(Error::Numerical(format!(
                "resolvent integral is NaN at z = {z}"
            )));
        }
        Ok(value)
    }
}

impl FiberQuadrature for SpectralIntegrator {
    type Fiber<'a> = SpectralFiber<'a>;

    fn fiber(&self, k: &TorusPoint) -> Result<SpectralFiber<'_>> {
        let mut band = BandBounds {
            lower: 0.0,
            upper: 0.0,
        };
        for a in k.coords() {
            let (lo, hi) = coordinate_band(a.abs());
            band.lower += lo;
            band.upper += hi;
        }
        Ok(SpectralFiber {
            owner: self,
            k: *k,
            band,
            left: OnceCell::new(),
            right: OnceCell::new(),
        })
    }

    fn label(&self) -> String {
        "spectral".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_matches_closed_form_at_half_order() {
        // statrs' regularized incomplete gamma is good to roughly 1e-9.
        // ∫_S^∞ s^{-3/2} e^{-εs} ds = 2 S^{-1/2} e^{-εS} − 2√(πε) erfc(√(εS)).
        let (eps, s) = (1e-5_f64, 1e6_f64);
        let x = eps * s;
        let exact = 2.0 / s.sqrt() * (-x).exp()
            - 2.0 * (std::f64::consts::PI * eps).sqrt() * statrs::function::erf::erfc(x.sqrt());
        let got = power_tail(1.0, 1.5, eps, s);
        assert!((got - exact).abs() < 1e-8 * exact.abs(), "{got} vs {exact}");
        assert!((power_tail(1.0, 1.5, 0.0, s) - 2e-3).abs() < 1e-15);
    }
}
