//! Essential spectrum: critical couplings, the two-particle branch swept over
//! fiber momenta, and regime classification on each side.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::friedrichs::{band_bounds, fiber_eigenvalue, BandBounds, Fiber, FiberQuadrature, Side};
use crate::torus::{build_grid, ModelParams, TorusPoint};

/// Relative tolerance for deciding that a coupling equals a critical value.
pub const CRITICAL_RTOL: f64 = 1e-9;

/// Critical couplings derived from a single evaluation of I(0̄; 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalCouplings {
    pub gamma: f64,
    pub origin_integral: f64,
    /// Present iff γ > 0.
    pub mu_left: Option<f64>,
    /// Present iff γ < 12.
    pub mu_right: Option<f64>,
}

impl CriticalCouplings {
    /// Order of left versus right critical coupling, when both exist.
    #[must_use]
    pub fn ordering(&self, rtol: f64) -> Option<Ordering> {
        let (l, r) = (self.mu_left?, self.mu_right?);
        if (l - r).abs() <= rtol * l.max(r) {
            Some(Ordering::Equal)
        } else {
            l.partial_cmp(&r)
        }
    }

    pub fn critical(&self, side: Side) -> Option<f64> {
        match side {
            Side::Left => self.mu_left,
            Side::Right => self.mu_right,
        }
    }
}

pub fn critical_couplings<Q: FiberQuadrature>(
    gamma: f64,
    quadrature: &Q,
) -> Result<CriticalCouplings> {
    let i0 = quadrature.fiber(&TorusPoint::origin())?.integral(0.0)?;
    if !(i0.is_finite() && i0 > 0.0) {
        return Err(Error::Numerical(format!("I(0;0) = {i0}")));
    }
    let scale = i0.powf(-0.5);
    Ok(CriticalCouplings {
        gamma,
        origin_integral: i0,
        mu_left: (gamma > 0.0).then(|| (2.0 * gamma).sqrt() * scale),
        mu_right: (gamma < 12.0).then(|| (24.0 - 2.0 * gamma).sqrt() * scale),
    })
}

/// Ordered list of disjoint closed intervals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntervalSet {
    pub intervals: Vec<[f64; 2]>,
}

impl IntervalSet {
    /// Normalize arbitrary closed intervals into a sorted disjoint union.
    #[must_use]
    pub fn normalized(mut raw: Vec<[f64; 2]>) -> Self {
        raw.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let mut out: Vec<[f64; 2]> = Vec::with_capacity(raw.len());
        for [a, b] in raw {
            match out.last_mut() {
                Some(last) if a <= last[1] => last[1] = last[1].max(b),
                _ => out.push([a, b]),
            }
        }
        Self { intervals: out }
    }

    /// Closed intervals covering sorted sample values, split wherever two
    /// neighbours are more than `gap` apart.
    #[must_use]
    pub fn from_samples(values: &[f64], gap: f64) -> Self {
        let mut v: Vec<f64> = values.to_vec();
        v.sort_by(f64::total_cmp);
        let mut raw = Vec::new();
        let mut iter = v.into_iter();
        if let Some(first) = iter.next() {
            let mut cur = [first, first];
            for x in iter {
                if x - cur[1] > gap {
                    raw.push(cur);
                    cur = [x, x];
                } else {
                    cur[1] = x;
                }
            }
            raw.push(cur);
        }
        Self { intervals: raw }
    }

    #[must_use]
    pub fn union(&self, other: &Self) -> Self {
        Self::normalized(
            self.intervals
                .iter()
                .chain(&other.intervals)
                .copied()
                .collect(),
        )
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    #[must_use]
    pub fn min(&self) -> Option<f64> {
        self.intervals.first().map(|i| i[0])
    }

    #[must_use]
    pub fn max(&self) -> Option<f64> {
        self.intervals.last().map(|i| i[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Subcritical,
    ThresholdCritical,
    Supercritical,
}

/// Position of μ relative to the critical coupling on one side. Without a
/// critical coupling (γ ≤ 0 on the left, γ ≥ 12 on the right) every μ > 0
/// pushes the branch past the threshold.
#[must_use]
pub fn classify(mu: f64, critical: Option<f64>, rtol: f64) -> Regime {
    match critical {
        None => Regime::Supercritical,
        Some(c) if (mu - c).abs() <= rtol * c => Regime::ThresholdCritical,
        Some(c) if mu < c => Regime::Subcritical,
        Some(_) => Regime::Supercritical,
    }
}

/// Fiber eigenvalues collected over a k-sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSweep {
    pub intervals: IntervalSet,
    /// Range of left-side eigenvalues found, if any.
    pub left: Option<[f64; 2]>,
    pub right: Option<[f64; 2]>,
    /// Largest jump of an eigenvalue between neighbouring sweep points.
    pub resolution: f64,
    /// Distinct fiber momenta evaluated, after symmetry reduction.
    pub evaluated: usize,
}

#[derive(Clone, Copy)]
struct Roots {
    left: Option<f64>,
    right: Option<f64>,
    band: BandBounds,
}

fn roots_at<Q: FiberQuadrature>(
    params: &ModelParams,
    quadrature: &Q,
    k: &TorusPoint,
) -> Result<Roots> {
    let fiber = quadrature.fiber(k)?;
    Ok(Roots {
        left: fiber_eigenvalue(params, &fiber, Side::Left)?,
        right: fiber_eigenvalue(params, &fiber, Side::Right)?,
        band: fiber.band(),
    })
}

/// Orbit representatives of a midpoint axis under sign flips and
/// permutations: nondecreasing triples of indices into the nonnegative half.
fn orbit_representatives(n: usize) -> Vec<[usize; 3]> {
    let half = n.div_ceil(2);
    let mut reps = Vec::new();
    for a in 0..half {
        for b in a..half {
            for c in b..half {
                reps.push([a, b, c]);
            }
        }
    }
    reps
}

fn sorted3(mut v: [usize; 3]) -> [usize; 3] {
    v.sort_unstable();
    v
}

fn extend(range: &mut Option<[f64; 2]>, x: f64) {
    *range = Some(match *range {
        None => [x, x],
        Some([a, b]) => [a.min(x), b.max(x)],
    });
}

/// Compass search improving an extremal fiber eigenvalue near `start`.
/// Returns the eigenvalues along the accepted path, starting value first.
fn refine<Q: FiberQuadrature>(
    params: &ModelParams,
    quadrature: &Q,
    side: Side,
    start: TorusPoint,
    start_value: f64,
    step: f64,
) -> Result<Vec<f64>> {
    let better = |a: f64, b: f64| match side {
        Side::Left => a < b,
        Side::Right => a > b,
    };
    let (mut best, mut value, mut h) = (start, start_value, step);
    let mut path = vec![start_value];
    while h > step / 64.0 {
        let mut moved = false;
        for axis in 0..3 {
            for dir in [-1.0, 1.0] {
                let mut c = best.coords();
                c[axis] += dir * h;
                let cand = TorusPoint::wrap(c);
                let root = roots_at(params, quadrature, &cand)?;
                let r = match side {
                    Side::Left => root.left,
                    Side::Right => root.right,
                };
                if let Some(r) = r {
                    if better(r, value) {
                        best = cand;
                        value = r;
                        path.push(r);
                        moved = true;
                    }
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    Ok(path)
}

/// Union over fiber momenta of the fiber eigenvalues, sampled on a midpoint
/// k-grid plus the two symmetry points, with local refinement near the
/// extremal momenta. Intervals are formed by merging samples closer than twice
/// the sweep resolution.
pub fn two_particle_branch<Q: FiberQuadrature>(
    params: &ModelParams,
    k_grid_n: usize,
    quadrature: &Q,
) -> Result<BranchSweep> {
    if k_grid_n < 8 {
        return Err(Error::InvalidInput(format!(
            "k-grid needs n >= 8, got {k_grid_n}"
        )));
    }
    let kgrid = build_grid(k_grid_n)?;
    let n = k_grid_n;
    let half = n.div_ceil(2);
    // Nonnegative half of the axis, in increasing order.
    let positive: Vec<f64> = kgrid.axis()[n - half..].to_vec();
    let reps = orbit_representatives(n);
    let table: Vec<Roots> = reps
        .par_iter()
        .map(|r| {
            roots_at(
                params,
                quadrature,
                &TorusPoint::wrap(r.map(|i| positive[i])),
            )
        })
        .collect::<Result<_>>()?;
    let lookup = |idx: [usize; 3]| -> Roots {
        let key = sorted3(idx.map(|j| fold_index(j, n)));
        let pos = reps.binary_search(&key).expect("representative present");
        table[pos]
    };

    let mut resolution = 0.0_f64;
    for i0 in 0..n {
        for i1 in 0..n {
            for i2 in 0..n {
                let here = lookup([i0, i1, i2]);
                for axis_shift in 0..3 {
                    let mut nb = [i0, i1, i2];
                    nb[axis_shift] = (nb[axis_shift] + 1) % n;
                    let there = lookup(nb);
                    // An eigenvalue that is lost between neighbours has merged
                    // into the band edge in between.
                    let jump = |a: Option<f64>, b: Option<f64>, ea: f64, eb: f64| match (a, b) {
                        (Some(a), Some(b)) => (a - b).abs(),
                        (Some(a), None) => (a - eb).abs(),
                        (None, Some(b)) => (b - ea).abs(),
                        (None, None) => 0.0,
                    };
                    resolution = resolution
                        .max(jump(
                            here.left,
                            there.left,
                            here.band.lower,
                            there.band.lower,
                        ))
                        .max(jump(
                            here.right,
                            there.right,
                            here.band.upper,
                            there.band.upper,
                        ));
                }
            }
        }
    }

    let mut left = None;
    let mut right = None;
    let mut values = Vec::new();
    let mut best_left: Option<(TorusPoint, f64)> = None;
    let mut best_right: Option<(TorusPoint, f64)> = None;
    let mut record = |k: TorusPoint, r: Roots, values: &mut Vec<f64>| {
        if let Some(x) = r.left {
            extend(&mut left, x);
            values.push(x);
            if best_left.map_or(true, |(_, v)| x < v) {
                best_left = Some((k, x));
            }
        }
        if let Some(x) = r.right {
            extend(&mut right, x);
            values.push(x);
            if best_right.map_or(true, |(_, v)| x > v) {
                best_right = Some((k, x));
            }
        }
    };
    for (r, roots) in reps.iter().zip(&table) {
        record(
            TorusPoint::wrap(r.map(|i| positive[i])),
            *roots,
            &mut values,
        );
    }
    for k in [TorusPoint::origin(), TorusPoint::corner()] {
        let roots = roots_at(params, quadrature, &k)?;
        record(k, roots, &mut values);
    }
    let spacing = std::f64::consts::TAU / n as f64;
    let mut paths = Vec::new();
    if let Some((k, v)) = best_left {
        paths.push((
            Side::Left,
            refine(params, quadrature, Side::Left, k, v, spacing / 2.0)?,
        ));
    }
    if let Some((k, v)) = best_right {
        paths.push((
            Side::Right,
            refine(params, quadrature, Side::Right, k, v, spacing / 2.0)?,
        ));
    }
    // Extrema can sit in pockets narrower than the grid spacing; the search
    // path then carries the only information on how the samples connect.
    for (side, path) in paths {
        for w in path.windows(2) {
            resolution = resolution.max((w[1] - w[0]).abs());
        }
        for v in path {
            values.push(v);
            match side {
                Side::Left => extend(&mut left, v),
                Side::Right => extend(&mut right, v),
            }
        }
    }

    let gap = (2.0 * resolution).max(1e-9);
    let intervals = IntervalSet::from_samples(&values, gap);
    if intervals.len() > 3 {
        return Err(Error::Invariant(format!(
            "two-particle branch split into {} intervals (k-grid too coarse?): {:?}, gap {}",
            intervals.len(),
            intervals.intervals,
            gap
        )));
    }
    Ok(BranchSweep {
        intervals,
        left,
        right,
        resolution,
        evaluated: reps.len() + 2,
    })
}

fn fold_index(j: usize, n: usize) -> usize {
    let half = n.div_ceil(2);
    // Axis is symmetric: node j and node n-1-j have opposite coordinates.
    let m = j.max(n - 1 - j);
    m - (n - half)
}

/// Essential spectrum with its extreme points and per-side regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub sigma_ess: IntervalSet,
    pub e1: f64,
    pub e2: f64,
    pub regime_left: Regime,
    pub regime_right: Regime,
    pub couplings: CriticalCouplings,
    pub branch: BranchSweep,
}

pub fn essential_spectrum<Q: FiberQuadrature>(
    params: &ModelParams,
    k_grid_n: usize,
    quadrature: &Q,
    rtol: f64,
) -> Result<SpectrumReport> {
    let couplings = critical_couplings(params.gamma(), quadrature)?;
    let branch = two_particle_branch(params, k_grid_n, quadrature)?;
    let sigma_ess = branch.intervals.union(&IntervalSet {
        intervals: vec![[0.0, 18.0]],
    });
    if sigma_ess.len() > 3 {
        return Err(Error::Invariant(format!(
            "essential spectrum has {} components",
            sigma_ess.len()
        )));
    }
    let e1 = sigma_ess.min().unwrap_or(0.0);
    let e2 = sigma_ess.max().unwrap_or(18.0);
    Ok(SpectrumReport {
        sigma_ess,
        e1,
        e2,
        regime_left: classify(params.mu(), couplings.mu_left, rtol),
        regime_right: classify(params.mu(), couplings.mu_right, rtol),
        couplings,
        branch,
    })
}

/// Smallest lower band edge and largest upper band edge over a k-sweep,
/// including the two symmetry points.
#[must_use]
pub fn band_extrema(k_grid_n: usize) -> (f64, f64) {
    let n = k_grid_n.max(2);
    let half = n.div_ceil(2);
    let grid = build_grid(n).expect("n >= 2");
    let positive = &grid.axis()[n - half..];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut points: Vec<TorusPoint> = orbit_representatives(n)
        .into_iter()
        .map(|r| TorusPoint::wrap(r.map(|i| positive[i])))
        .collect();
    points.push(TorusPoint::origin());
    points.push(TorusPoint::corner());
    for k in &points {
        let b = band_bounds(k);
        lo = lo.min(b.lower);
        hi = hi.max(b.upper);
    }
    (lo, hi)
}
