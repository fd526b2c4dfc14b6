//! Torus arithmetic, dispersion relations and product midpoint grids.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Reduce an angle into the half-open interval (−π, π].
#[must_use]
pub fn wrap_angle(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TWO_PI) - PI;
    if r <= -PI {
        r + TWO_PI
    } else {
        r
    }
}

/// A point of the three-torus, stored by its canonical representative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint([f64; 3]);

impl TorusPoint {
    #[must_use]
    pub fn wrap(raw: [f64; 3]) -> Self {
        Self(raw.map(wrap_angle))
    }

    #[must_use]
    pub fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self::wrap([x1, x2, x3])
    }

    #[must_use]
    pub const fn origin() -> Self {
        Self([0.0; 3])
    }

    /// The corner (π, π, π).
    #[must_use]
    pub const fn corner() -> Self {
        Self([PI; 3])
    }

    #[must_use]
    pub const fn coords(&self) -> [f64; 3] {
        self.0
    }

    #[must_use]
    pub fn add(&self, other: &Self) -> Self {
        Self::wrap([0, 1, 2].map(|i| self.0[i] + other.0[i]))
    }

    #[must_use]
    pub fn sub(&self, other: &Self) -> Self {
        Self::wrap([0, 1, 2].map(|i| self.0[i] - other.0[i]))
    }

    /// Euclidean length of the canonical representative of `self − other`.
    #[must_use]
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Lattice dispersion Σ(1 − cos kᵢ).
#[must_use]
pub fn epsilon(k: &TorusPoint) -> f64 {
    k.0.iter().map(|x| 1.0 - x.cos()).sum()
}

/// One-particle channel energy.
#[must_use]
pub fn w1(k: &TorusPoint, gamma: f64) -> f64 {
    epsilon(k) + gamma
}

/// Two-particle channel energy on the principal lift, where the half-angle is
/// taken as half the sum of the two canonical representatives.
///
/// The half-angle is only defined up to a sign flip of its cosine, so this
/// lift jumps across the seam of the torus. Code that integrates over the
/// two-particle channel uses [`pair_sheets`] instead, which averages over both
/// branches coordinatewise and is continuous.
#[must_use]
pub fn w2(k: &TorusPoint, p: &TorusPoint) -> f64 {
    (0..3)
        .map(|i| {
            let (a, b) = (k.0[i], p.0[i]);
            3.0 - a.cos() - b.cos() - (0.5 * (a + b)).cos()
        })
        .sum()
}

/// Lower and upper branch of one coordinate's contribution to the
/// two-particle energy: `3 − cos a − cos b ∓ |cos((a+b)/2)|`.
#[must_use]
pub fn pair_sheets(a: f64, b: f64) -> (f64, f64) {
    let base = 3.0 - a.cos() - b.cos();
    let half = (0.5 * (a + b)).cos().abs();
    (base - half, base + half)
}

/// All eight branch values of the two-particle energy; bit `l` of the index
/// selects the upper branch in coordinate `l`.
#[must_use]
pub fn w2_sheets(k: &TorusPoint, p: &TorusPoint) -> [f64; 8] {
    let s = [0, 1, 2].map(|i| pair_sheets(k.0[i], p.0[i]));
    std::array::from_fn(|sigma| {
        (0..3)
            .map(|l| if sigma >> l & 1 == 0 { s[l].0 } else { s[l].1 })
            .sum()
    })
}

/// Coupling and spectral shift of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    mu: f64,
    gamma: f64,
}

impl ModelParams {
    pub fn new(mu: f64, gamma: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coupling must be positive, got {mu}"
            )));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "gamma must be finite, got {gamma}"
            )));
        }
        Ok(Self { mu, gamma })
    }

    /// Uncoupled limit; only meaningful for internal consistency checks.
    #[must_use]
    pub fn uncoupled(gamma: f64) -> Self {
        Self { mu: 0.0, gamma }
    }

    #[must_use]
    pub const fn mu(&self) -> f64 {
        self.mu
    }

    #[must_use]
    pub const fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Uniform product midpoint grid on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    n: usize,
    axis: Vec<f64>,
    weight: f64,
}

/// Midpoint grid with `n` nodes per axis.
pub fn build_grid(n: usize) -> Result<QuadratureGrid> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("grid needs n >= 2, got {n}")));
    }
    let h = TWO_PI / n as f64;
    let axis = (0..n).map(|j| -PI + (j as f64 + 0.5) * h).collect();
    Ok(QuadratureGrid {
        n,
        axis,
        weight: h * h * h,
    })
}

impl QuadratureGrid {
    #[must_use]
    pub const fn n(&self) -> usize {
        self.n
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Weight carried by every node, (2π/n)³.
    #[must_use]
    pub const fn weight(&self) -> f64 {
        self.weight
    }

    /// Node coordinates along one axis, increasing.
    #[must_use]
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    /// Node with flat index `(i0 * n + i1) * n + i2`.
    #[must_use]
    pub fn node(&self, idx: usize) -> TorusPoint {
        let [i0, i1, i2] = self.split(idx);
        TorusPoint([self.axis[i0], self.axis[i1], self.axis[i2]])
    }

    #[must_use]
    pub fn split(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    #[must_use]
    pub fn join(&self, i: [usize; 3]) -> usize {
        (i[0] * self.n + i[1]) * self.n + i[2]
    }

    pub fn nodes(&self) -> impl Iterator<Item = TorusPoint> + '_ {
        (0..self.len()).map(|i| self.node(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_examples() {
        assert_eq!(TorusPoint::wrap([0.0; 3]).coords(), [0.0; 3]);
        assert_eq!(TorusPoint::new(3.0 * PI, 0.0, 0.0).coords()[0], PI);
        assert_eq!(TorusPoint::new(-PI, 0.0, 0.0).coords()[0], PI);
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(epsilon(&TorusPoint::origin()), 0.0);
        assert!((epsilon(&TorusPoint::corner()) - 6.0).abs() < 1e-15);
        assert!((epsilon(&TorusPoint::new(PI / 2.0, 0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((w1(&TorusPoint::origin(), 6.0) - 6.0).abs() < 1e-15);
        assert!((w1(&TorusPoint::corner(), 0.0) - 6.0).abs() < 1e-15);
        assert!((w1(&TorusPoint::corner(), 12.0) - 18.0).abs() < 1e-15);
    }

    #[test]
    fn pair_energy_examples() {
        let (o, c) = (TorusPoint::origin(), TorusPoint::corner());
        assert!(w2(&o, &o).abs() < 1e-15);
        assert!((w2(&c, &c) - 18.0).abs() < 1e-14);
        assert!((w2(&o, &c) - 9.0).abs() < 1e-14);
    }

    #[test]
    fn grid_examples() {
        let g = build_grid(2).unwrap();
        assert_eq!(g.len(), 8);
        assert!((g.weight() - PI.powi(3)).abs() < 1e-12);
        for p in g.nodes() {
            assert!(p
                .coords()
                .iter()
                .all(|x| (x.abs() - PI / 2.0).abs() < 1e-15));
        }
        let g = build_grid(4).unwrap();
        assert!((g.weight() * g.len() as f64 - TWO_PI.powi(3)).abs() < 1e-9);
        assert!(build_grid(1).is_err());
    }

    #[test]
    fn grid_keeps_half_spacing_from_symmetry_points() {
        let g = build_grid(16).unwrap();
        let sup = |p: &TorusPoint, q: &TorusPoint| {
            p.sub(q)
                .coords()
                .iter()
                .fold(0.0_f64, |m, x| m.max(x.abs()))
        };
        let d0 = g
            .nodes()
            .map(|p| sup(&p, &TorusPoint::origin()))
            .fold(f64::MAX, f64::min);
        let d1 = g
            .nodes()
            .map(|p| sup(&p, &TorusPoint::corner()))
            .fold(f64::MAX, f64::min);
        assert!((d0 - PI / 16.0).abs() < 1e-14);
        assert!((d1 - PI / 16.0).abs() < 1e-14);
    }
}
