//! Eigenvalue counting through the Birman–Schwinger operator, and a direct
//! finite model of the block operator used as an oracle.
//!
//! Both live on the same midpoint grid. The two-particle channel carries the
//! eight coordinatewise branches of the half-angle term as an extra discrete
//! label, averaged with equal weight, which is what the resolvent integral
//! sums over as well. With that, eliminating the two-particle block from the
//! direct model reproduces the discrete determinant and kernel exactly, so the
//! two counts must agree as integers.

use std::collections::HashMap;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::friedrichs::{fiber_eigenvalue, BandBounds, Fiber, MidpointFiber, Side};
use crate::linalg::{symmetric_eigenvalues, tally_above};
use crate::torus::{pair_sheets, w1, w2_sheets, ModelParams, QuadratureGrid, TorusPoint};

/// Largest direct model that will be assembled.
pub const MAX_DIRECT_DIM: usize = 20_000;

/// Symmetry label of a reduced kernel block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLabel {
    /// Parity under reflection of each coordinate, +1 or −1.
    pub parity: [i8; 3],
    /// Parity under exchange of the first two coordinates.
    pub swap: i8,
    /// Number of equivalent blocks with identical spectrum.
    pub multiplicity: usize,
}

/// Nyström matrix of the Birman–Schwinger operator, or one symmetry block of it.
#[derive(Debug, Clone)]
pub struct BSMatrix {
    pub side: Side,
    pub z: f64,
    pub grid_n: usize,
    /// `None` for the unreduced matrix.
    pub block: Option<BlockLabel>,
    pub entries: Mat<f64>,
}

impl BSMatrix {
    #[must_use]
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Frobenius norm.
    #[must_use]
    pub fn frobenius(&self) -> f64 {
        self.entries.norm_l2()
    }
}

/// Discrete fiber determinant at every grid node, using that it is invariant
/// under coordinate reflections and permutations.
pub fn node_determinants(params: &ModelParams, z: f64, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    let n = grid.n();
    let key = |idx: [usize; 3]| {
        let mut f = idx.map(|j| j.max(n - 1 - j));
        f.sort_unstable();
        f
    };
    let mut orbits: HashMap<[usize; 3], usize> = HashMap::new();
    let mut reps = Vec::new();
    for idx in 0..grid.len() {
        let k = key(grid.split(idx));
        orbits.entry(k).or_insert_with(|| {
            reps.push(idx);
            reps.len() - 1
        });
    }
    let mu2 = params.mu() * params.mu();
    let values: Vec<f64> = reps
        .par_iter()
        .map(|&idx| {
            let p = grid.node(idx);
            let fiber = MidpointFiber::new(grid, &p);
            // The closed range: a node value equal to z is a pole of the sum.
            let band = fiber.discrete_band();
            if z >= band.lower && z <= band.upper {
                return Err(Error::InsideBand {
                    z,
                    lower: band.lower,
                    upper: band.upper,
                });
            }
            Ok(w1(&p, params.gamma()) - z - 0.5 * mu2 * fiber.sum(z))
        })
        .collect::<Result<_>>()?;
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite determinant {bad} at z = {z}"
        )));
    }
    Ok((0..grid.len())
        .map(|idx| values[orbits[&key(grid.split(idx))]])
        .collect())
}

/// A midpoint fiber seen as a finite model in its own right: its band is the
/// range of branch values on the grid, and its determinant has poles there.
struct DiscreteFiber {
    inner: MidpointFiber,
    band: BandBounds,
}

impl DiscreteFiber {
    fn new(inner: MidpointFiber) -> Self {
        let band = inner.discrete_band();
        Self { inner, band }
    }
}

impl Fiber for DiscreteFiber {
    fn point(&self) -> TorusPoint {
        self.inner.point()
    }

    fn band(&self) -> BandBounds {
        self.band
    }

    fn integral(&self, z: f64) -> Result<f64> {
        if self.band.contains_strictly(z) {
            return Err(Error::InsideBand {
                z,
                lower: self.band.lower,
                upper: self.band.upper,
            });
        }
        // The edge is a node value, so the sum has a pole there; its sign
        // must not depend on rounding in the node sums.
        if z == self.band.lower {
            return Ok(f64::INFINITY);
        }
        if z == self.band.upper {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.inner.sum(z))
    }
}

/// Edge of the discrete essential spectrum on one side: the outermost of the
/// discrete band edge and the fiber eigenvalues at the grid nodes. Counting
/// through the Birman–Schwinger operator needs z strictly beyond it.
pub fn discrete_threshold(params: &ModelParams, side: Side, grid: &QuadratureGrid) -> Result<f64> {
    let range = discrete_sheet_range(&axis_sheet_table(grid.axis()));
    let n = grid.n();
    let mut seen = std::collections::HashSet::new();
    let reps: Vec<usize> = (0..grid.len())
        .filter(|&idx| {
            let mut f = grid.split(idx).map(|j| j.max(n - 1 - j));
            f.sort_unstable();
            seen.insert(f)
        })
        .collect();
    let roots = reps
        .par_iter()
        .map(|&idx| {
            let fiber = DiscreteFiber::new(MidpointFiber::new(grid, &grid.node(idx)));
            fiber_eigenvalue(params, &fiber, side)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(match side {
        Side::Left => roots.into_iter().flatten().fold(range.0, f64::min),
        Side::Right => roots.into_iter().flatten().fold(range.1, f64::max),
    })
}

/// Pair branch values between axis nodes: `[lower, upper]` for (x_a, x_b).
fn axis_sheet_table(axis: &[f64]) -> Vec<[f64; 2]> {
    let n = axis.len();
    let mut t = Vec::with_capacity(n * n);
    for &a in axis {
        for &b in axis {
            let (lo, hi) = pair_sheets(a, b);
            t.push([lo, hi]);
        }
    }
    t
}

fn check_side(side: Side, z: f64, det: &[f64], sheet_range: (f64, f64)) -> Result<()> {
    match side {
        Side::Left => {
            if z >= sheet_range.0 {
                return Err(Error::WrongSign(format!(
                    "z = {z} is not below the discrete band {}",
                    sheet_range.0
                )));
            }
            if let Some(d) = det.iter().find(|&&d| d <= 0.0) {
                return Err(Error::WrongSign(format!("determinant {d} <= 0 at z = {z}")));
            }
        }
        Side::Right => {
            if z <= sheet_range.1 {
                return Err(Error::WrongSign(format!(
                    "z = {z} is not above the discrete band {}",
                    sheet_range.1
                )));
            }
            if let Some(d) = det.iter().find(|&&d| d >= 0.0) {
                return Err(Error::WrongSign(format!("determinant {d} >= 0 at z = {z}")));
            }
        }
    }
    Ok(())
}

fn discrete_sheet_range(table: &[[f64; 2]]) -> (f64, f64) {
    let lo = table.iter().map(|s| s[0]).fold(f64::INFINITY, f64::min);
    let hi = table.iter().map(|s| s[1]).fold(f64::NEG_INFINITY, f64::max);
    (3.0 * lo, 3.0 * hi)
}

/// Kernel prefactor, signed so the operator is nonnegative on either side.
fn prefactor(params: &ModelParams, side: Side) -> f64 {
    let mu2 = params.mu() * params.mu();
    match side {
        Side::Left => 0.5 * mu2,
        Side::Right => -0.5 * mu2,
    }
}

/// Full Nyström matrix of dimension n³.
pub fn build_bs_matrix(
    params: &ModelParams,
    z: f64,
    side: Side,
    grid: &QuadratureGrid,
) -> Result<BSMatrix> {
    let n = grid.n();
    let table = axis_sheet_table(grid.axis());
    let det = node_determinants(params, z, grid)?;
    check_side(side, z, &det, discrete_sheet_range(&table))?;
    let scale: Vec<f64> = det.iter().map(|d| d.abs().powf(-0.5)).collect();
    let pre = prefactor(params, side) * grid.weight() / 8.0;
    let dim = grid.len();
    let rows: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let pi = grid.split(i);
            (0..=i)
                .map(|j| {
                    let pj = grid.split(j);
                    let s = [0, 1, 2].map(|l| table[pi[l] * n + pj[l]]);
                    let mut k = 0.0;
                    for a in s[0] {
                        for b in s[1] {
                            let ab = a + b - z;
                            k += 1.0 / (ab + s[2][0]) + 1.0 / (ab + s[2][1]);
                        }
                    }
                    pre * scale[i] * scale[j] * k
                })
                .collect()
        })
        .collect();
    let entries = Mat::from_fn(
        dim,
        dim,
        |i, j| if j <= i { rows[i][j] } else { rows[j][i] },
    );
    Ok(BSMatrix {
        side,
        z,
        grid_n: n,
        block: None,
        entries,
    })
}

/// Parity classes that represent all eight reflection characters up to
/// permutation of coordinates, with their multiplicities. The first two
/// parities agree in each, so the coordinate exchange commutes with them.
const CLASSES: [([i8; 3], usize); 4] = [
    ([1, 1, 1], 1),
    ([1, 1, -1], 3),
    ([-1, -1, 1], 3),
    ([-1, -1, -1], 1),
];

/// Nyström matrix split into symmetry blocks under coordinate reflections
/// and the exchange of the first two coordinates. Requires even n.
pub fn build_bs_blocks(
    params: &ModelParams,
    z: f64,
    side: Side,
    grid: &QuadratureGrid,
) -> Result<Vec<BSMatrix>> {
    let n = grid.n();
    if n % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "symmetry blocks need an even grid, got n = {n}"
        )));
    }
    let h = n / 2;
    let positive = &grid.axis()[h..];
    let table = axis_sheet_table(grid.axis());
    let det = node_determinants(params, z, grid)?;
    check_side(side, z, &det, discrete_sheet_range(&table))?;

    // Branch values for (x_a, ±x_b) on the positive half axis.
    let mut signed = vec![[[0.0; 2]; 2]; h * h];
    for a in 0..h {
        for b in 0..h {
            let (p, m) = (
                pair_sheets(positive[a], positive[b]),
                pair_sheets(positive[a], -positive[b]),
            );
            signed[a * h + b] = [[p.0, p.1], [m.0, m.1]];
        }
    }
    let reduced: Vec<[usize; 3]> = (0..h)
        .flat_map(|a| (a..h).flat_map(move |b| (0..h).map(move |c| [a, b, c])))
        .collect();
    let scale: Vec<f64> = reduced
        .iter()
        .map(|r| det[grid.join(r.map(|i| i + h))].abs().powf(-0.5))
        .collect();
    let pre = prefactor(params, side) * grid.weight() / 8.0;

    // For a pair of reduced points, sums over branches for each of the eight
    // reflections of the second point, then the four class combinations.
    let class_entries = |p: [usize; 3], q: [usize; 3]| -> [f64; 4] {
        let s = [0, 1, 2].map(|l| signed[p[l] * h + q[l]]);
        let mut by_reflection = [0.0; 8];
        for (r, slot) in by_reflection.iter_mut().enumerate() {
            let v = [0, 1, 2].map(|l| s[l][r >> l & 1]);
            let mut k = 0.0;
            for a in v[0] {
                for b in v[1] {
                    let ab = a + b - z;
                    k += 1.0 / (ab + v[2][0]) + 1.0 / (ab + v[2][1]);
                }
            }
            *slot = k;
        }
        CLASSES.map(|(parity, _)| {
            by_reflection
                .iter()
                .enumerate()
                .map(|(r, k)| {
                    let chi: i8 = (0..3)
                        .map(|l| if r >> l & 1 == 1 { parity[l] } else { 1 })
                        .product();
                    f64::from(chi) * k
                })
                .sum()
        })
    };

    let m = reduced.len();
    // rows[i][j] for j <= i: class entries for (q) and (swapped q).
    let rows: Vec<Vec<([f64; 4], [f64; 4])>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let p = reduced[i];
            (0..=i)
                .map(|j| {
                    let q = reduced[j];
                    (class_entries(p, q), class_entries(p, [q[1], q[0], q[2]]))
                })
                .collect()
        })
        .collect();

    let mut blocks = Vec::with_capacity(8);
    for (ci, (parity, multiplicity)) in CLASSES.iter().enumerate() {
        for swap in [1_i8, -1] {
            // Points on the exchange diagonal vanish in the odd sector.
            let members: Vec<usize> = (0..m)
                .filter(|&i| swap == 1 || reduced[i][0] != reduced[i][1])
                .collect();
            let norm = |i: usize| {
                if reduced[i][0] == reduced[i][1] {
                    2.0
                } else {
                    std::f64::consts::SQRT_2
                }
            };
            let entries = Mat::from_fn(members.len(), members.len(), |a, b| {
                let (i, j) = (members[a], members[b]);
                let (hi, lo) = if j <= i { (i, j) } else { (j, i) };
                let (direct, exchanged) = rows[hi][lo];
                let t = direct[ci] + f64::from(swap) * exchanged[ci];
                2.0 * pre * scale[i] * scale[j] * t / (norm(i) * norm(j))
            });
            blocks.push(BSMatrix {
                side,
                z,
                grid_n: n,
                block: Some(BlockLabel {
                    parity: *parity,
                    swap,
                    multiplicity: *multiplicity,
                }),
                entries,
            });
        }
    }
    Ok(blocks)
}

/// Outcome of a count, with the number of eigenvalues that sat within
/// rounding distance of the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Count {
    pub count: usize,
    pub near_threshold: usize,
}

/// Eigenvalues of a symmetric matrix strictly above `lambda`.
pub fn count_above(matrix: &BSMatrix, lambda: f64) -> Result<Count> {
    let ev = symmetric_eigenvalues(&matrix.entries)?;
    let (count, near_threshold) = tally_above(&ev, lambda);
    if near_threshold > 0 {
        log::warn!(
            "{near_threshold} eigenvalue(s) within rounding of the count threshold {lambda}"
        );
    }
    Ok(Count {
        count,
        near_threshold,
    })
}

/// Number of eigenvalues of the block operator beyond z on the given side:
/// below z on the left, above z on the right.
pub fn eigenvalue_count(
    params: &ModelParams,
    z: f64,
    side: Side,
    grid: &QuadratureGrid,
) -> Result<Count> {
    let blocks = if grid.n() % 2 == 0 {
        build_bs_blocks(params, z, side, grid)?
    } else {
        vec![build_bs_matrix(params, z, side, grid)?]
    };
    let mut total = Count {
        count: 0,
        near_threshold: 0,
    };
    for b in &blocks {
        let mult = b.block.map_or(1, |l| l.multiplicity);
        let c = count_above(b, 1.0)?;
        total.count += mult * c.count;
        total.near_threshold += mult * c.near_threshold;
    }
    Ok(total)
}

/// The block operator restricted to a midpoint grid.
///
/// One-particle states are node values; two-particle states are unordered
/// node pairs carrying one of eight branch labels. Both bases are orthonormal
/// for the discretized inner products, so the matrix is symmetric.
#[derive(Debug, Clone)]
pub struct DirectModel {
    pub grid_n: usize,
    pub params: ModelParams,
    /// w₁ at every node.
    pub one_particle: Vec<f64>,
    /// Unordered node pairs (i ≤ j).
    pub pairs: Vec<(usize, usize)>,
    /// Branch energies, `pairs.len() × 8`.
    pub two_particle: Vec<[f64; 8]>,
    weight: f64,
}

impl DirectModel {
    #[must_use]
    pub fn h1_dim(&self) -> usize {
        self.one_particle.len()
    }

    #[must_use]
    pub fn h2_dim(&self) -> usize {
        8 * self.pairs.len()
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.h1_dim() + self.h2_dim()
    }

    /// Coupling amplitude between node `k` and a pair containing it.
    #[must_use]
    pub fn coupling(&self, diagonal_pair: bool) -> f64 {
        let s = self.weight.sqrt();
        self.params.mu()
            * if diagonal_pair {
                s / (2.0 * std::f64::consts::SQRT_2)
            } else {
                s / 4.0
            }
    }

    /// Dense matrix; only sensible for very small grids.
    #[must_use]
    pub fn dense(&self) -> Mat<f64> {
        let n1 = self.h1_dim();
        let mut m = Mat::<f64>::zeros(self.dim(), self.dim());
        for (i, v) in self.one_particle.iter().enumerate() {
            m[(i, i)] = *v;
        }
        for (p, &(a, b)) in self.pairs.iter().enumerate() {
            let c = self.coupling(a == b);
            for s in 0..8 {
                let col = n1 + 8 * p + s;
                m[(col, col)] = self.two_particle[p][s];
                for node in [a, b] {
                    m[(node, col)] += if a == b { c / 2.0 } else { c };
                    m[(col, node)] = m[(node, col)];
                }
            }
        }
        m
    }

    /// (A₁₂ f)(k) = (1/8) Σ_σ ∫ f(k, t, σ) dt on node values; `f` is indexed
    /// by ordered pairs, `[(k·N + t)·8 + σ]`, and must be symmetric in (k, t).
    #[must_use]
    pub fn annihilate(&self, f: &[f64]) -> Vec<f64> {
        let n = self.h1_dim();
        (0..n)
            .map(|k| self.weight / 8.0 * f[k * n * 8..(k + 1) * n * 8].iter().sum::<f64>())
            .collect()
    }

    /// (A₁₂* g)(k, p, σ) = ½ (g(k) + g(p)), in the ordered-pair layout.
    #[must_use]
    pub fn create(&self, g: &[f64]) -> Vec<f64> {
        let n = self.h1_dim();
        let mut out = vec![0.0; n * n * 8];
        for k in 0..n {
            for p in 0..n {
                let v = 0.5 * (g[k] + g[p]);
                out[(k * n + p) * 8..(k * n + p + 1) * 8].fill(v);
            }
        }
        out
    }

    /// Discrete inner product on one-particle node values.
    #[must_use]
    pub fn inner_one(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weight * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Discrete inner product on two-particle ordered-pair values, averaged
    /// over branches.
    #[must_use]
    pub fn inner_two(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weight * self.weight / 8.0 * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Dense matrices of the eight reflection-parity sectors. Their spectra
    /// together make up the spectrum of [`DirectModel::dense`].
    #[must_use]
    pub fn sector_blocks(&self) -> Vec<Mat<f64>> {
        (0..8).map(|s| self.sector_block(s)).collect()
    }

    /// Dense matrix of one reflection-parity sector; bit `l` of `parity` set
    /// means odd under reflection of coordinate `l`.
    #[must_use]
    pub fn sector_block(&self, parity: usize) -> Mat<f64> {
        let n = self.grid_n;
        let n1 = self.h1_dim();
        let reflect = |idx: usize, g: usize| {
            let mut i = [idx / (n * n), (idx / n) % n, idx % n];
            for (l, c) in i.iter_mut().enumerate() {
                if g >> l & 1 == 1 {
                    *c = n - 1 - *c;
                }
            }
            (i[0] * n + i[1]) * n + i[2]
        };
        let pair_index: HashMap<(usize, usize), usize> = self
            .pairs
            .iter()
            .enumerate()
            .map(|(p, &ab)| (ab, p))
            .collect();
        let reflect_pair = |p: usize, g: usize| {
            let (a, b) = self.pairs[p];
            let (x, y) = (reflect(a, g), reflect(b, g));
            pair_index[&(x.min(y), x.max(y))]
        };

        let s = parity;
        let chi = |g: usize| -> f64 {
            if (g & s).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            }
        };
        // Projected orbit vectors, as sparse (index, coefficient) lists.
        let project = |images: &dyn Fn(usize) -> usize| -> Option<Vec<(usize, f64)>> {
            let mut acc: Vec<(usize, f64)> = Vec::new();
            for g in 0..8 {
                let j = images(g);
                match acc.iter_mut().find(|e| e.0 == j) {
                    Some(e) => e.1 += chi(g),
                    None => acc.push((j, chi(g))),
                }
            }
            acc.retain(|e| e.1.abs() > 0.5);
            let norm = acc.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
            (!acc.is_empty()).then(|| acc.into_iter().map(|(j, c)| (j, c / norm)).collect())
        };
        let mut one: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
        for i in 0..n1 {
            if (0..8).all(|g| reflect(i, g) >= i) {
                if let Some(v) = project(&|g| reflect(i, g)) {
                    one.push((i, v));
                }
            }
        }
        let mut two: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
        for p in 0..self.pairs.len() {
            if (0..8).all(|g| reflect_pair(p, g) >= p) {
                if let Some(v) = project(&|g| reflect_pair(p, g)) {
                    two.push((p, v));
                }
            }
        }
        // Node → (sector vector, coefficient) for the coupling block.
        let mut node_coef: HashMap<usize, (usize, f64)> = HashMap::new();
        for (a, (_, v)) in one.iter().enumerate() {
            for &(node, c) in v {
                node_coef.insert(node, (a, c));
            }
        }
        let (m1, m2) = (one.len(), 8 * two.len());
        let mut m = Mat::<f64>::zeros(m1 + m2, m1 + m2);
        for (a, (rep, _)) in one.iter().enumerate() {
            m[(a, a)] = self.one_particle[*rep];
        }
        for (b, (rep, v)) in two.iter().enumerate() {
            for sigma in 0..8 {
                let col = m1 + 8 * b + sigma;
                m[(col, col)] = self.two_particle[*rep][sigma];
                for &(p, c) in v {
                    let (x, y) = self.pairs[p];
                    let amp = self.coupling(x == y);
                    let ends: &[usize] = if x == y { &[x] } else { &[x, y] };
                    for node in ends {
                        if let Some(&(a, cn)) = node_coef.get(node) {
                            m[(a, col)] += cn * c * amp;
                        }
                    }
                }
                for a in 0..m1 {
                    m[(col, a)] = m[(a, col)];
                }
            }
        }
        m
    }
}

/// Assemble the direct finite model on the grid.
pub fn direct_discretize(params: &ModelParams, grid: &QuadratureGrid) -> Result<DirectModel> {
    let n1 = grid.len();
    let dim = n1 + 8 * n1 * (n1 + 1) / 2;
    if dim > MAX_DIRECT_DIM {
        return Err(Error::InvalidInput(format!(
            "direct model dimension {dim} exceeds {MAX_DIRECT_DIM}"
        )));
    }
    let nodes: Vec<_> = grid.nodes().collect();
    let one_particle = nodes.iter().map(|k| w1(k, params.gamma())).collect();
    let mut pairs = Vec::with_capacity(n1 * (n1 + 1) / 2);
    let mut two_particle = Vec::with_capacity(pairs.capacity());
    for a in 0..n1 {
        for b in a..n1 {
            pairs.push((a, b));
            two_particle.push(w2_sheets(&nodes[a], &nodes[b]));
        }
    }
    Ok(DirectModel {
        grid_n: grid.n(),
        params: *params,
        one_particle,
        pairs,
        two_particle,
        weight: grid.weight(),
    })
}

/// Count of direct-model eigenvalues below z (left) or above z (right).
pub fn oracle_count(
    params: &ModelParams,
    z: f64,
    side: Side,
    grid: &QuadratureGrid,
) -> Result<usize> {
    let model = direct_discretize(params, grid)?;
    let mut total = 0;
    // Sectors related by a permutation of coordinates have equal spectra.
    for (parity, multiplicity) in [(0b000, 1), (0b100, 3), (0b011, 3), (0b111, 1)] {
        let ev = symmetric_eigenvalues(&model.sector_block(parity))?;
        total += multiplicity
            * match side {
                Side::Left => ev.iter().filter(|&&x| x < z).count(),
                Side::Right => ev.iter().filter(|&&x| x > z).count(),
            };
    }
    Ok(total)
}
