//! Dense symmetric eigenvalue counting.
//!
//! Production counts go through faer's symmetric eigensolver. A Householder
//! tridiagonalization with a Sturm sequence count is kept as an independent
//! second path for cross-checks.

use faer::Mat;

use crate::error::{Error, Result};

/// Eigenvalues closer than this to a counting threshold are flagged.
pub const NEAR_THRESHOLD: f64 = 1e-10;

/// Eigenvalues of a symmetric matrix, ascending. Only the lower triangle is read.
pub fn symmetric_eigenvalues(m: &Mat<f64>) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput(format!(
            "matrix is {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut ev = m
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    if ev.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(
            "eigensolver returned non-finite values".into(),
        ));
    }
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Number of entries strictly above `lambda`, and how many sit within
/// [`NEAR_THRESHOLD`] of it.
#[must_use]
pub fn tally_above(eigenvalues: &[f64], lambda: f64) -> (usize, usize) {
    let above = eigenvalues.iter().filter(|&&x| x > lambda).count();
    let near = eigenvalues
        .iter()
        .filter(|&&x| (x - lambda).abs() <= NEAR_THRESHOLD)
        .count();
    (above, near)
}

/// Largest deviation from symmetry.
#[must_use]
pub fn asymmetry(m: &Mat<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Householder reduction of a symmetric matrix to tridiagonal form.
/// Returns the diagonal and the subdiagonal.
#[must_use]
pub fn tridiagonalize(m: &Mat<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = m.nrows();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)]).collect())
        .collect();
    let mut off = vec![0.0; n.saturating_sub(1)];
    for k in 0..n.saturating_sub(2) {
        let norm = (k + 1..n).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            off[k] = 0.0;
            continue;
        }
        let alpha = if a[k + 1][k] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n];
        v[k + 1] = a[k + 1][k] - alpha;
        for i in k + 2..n {
            v[i] = a[i][k];
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            off[k] = a[k + 1][k];
            continue;
        }
        // A ← H A H with H = I − 2vvᵀ/|v|².
        let p: Vec<f64> = (0..n)
            .map(|i| (k + 1..n).map(|j| a[i][j] * v[j]).sum::<f64>() * 2.0 / vnorm2)
            .collect();
        let kappa: f64 = (k + 1..n).map(|i| v[i] * p[i]).sum::<f64>() / vnorm2;
        let q: Vec<f64> = (0..n).map(|i| p[i] - kappa * v[i]).collect();
        for i in 0..n {
            for j in 0..n {
                a[i][j] -= v[i] * q[j] + q[i] * v[j];
            }
        }
        off[k] = alpha;
    }
    if n >= 2 {
        off[n - 2] = a[n - 1][n - 2];
    }
    let diag = (0..n).map(|i| a[i][i]).collect();
    (diag, off)
}

/// Eigenvalues of a symmetric tridiagonal matrix below `lambda`, by the
/// inertia of the LDLᵀ factorization of T − λI.
#[must_use]
pub fn sturm_count_below(diag: &[f64], off: &[f64], lambda: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let e2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - lambda - if i == 0 { 0.0 } else { e2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + lambda.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalues strictly above `lambda` via tridiagonalization and Sturm count.
#[must_use]
pub fn sturm_count_above(m: &Mat<f64>, lambda: f64) -> usize {
    let (d, e) = tridiagonalize(m);
    // Count of eigenvalues ≤ λ equals count below the next float up.
    d.len() - sturm_count_below(&d, &e, lambda.next_up())
}
