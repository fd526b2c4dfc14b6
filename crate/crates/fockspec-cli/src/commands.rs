//! One function per subcommand. Each returns the resolved parameters, the
//! payload, diagnostics, and a flat table for CSV output.

use fockspec::birman_schwinger::{eigenvalue_count, oracle_count};
use fockspec::efimov::{adaptive_sobolev_count, efimov_count_ladder, estimate_u, t1_operator};
use fockspec::essential::{critical_couplings, essential_spectrum, CriticalCouplings};
use fockspec::friedrichs::{band_bounds, fiber_delta, fiber_eigenvalue, FiberQuadrature, Side};
use fockspec::spectral::SpectralIntegrator;
use fockspec::torus::{build_grid, ModelParams, QuadratureGrid, TorusPoint};
use fockspec::{Error, Result};
use serde_json::{json, Value};

use crate::config::{parse_tolerances, Command, Common, MuSpec, QuadratureKind};
use crate::output::{format_float, scalar, Table};

pub struct Output {
    pub resolved: Value,
    pub payload: Value,
    pub diagnostics: Value,
    pub table: Table,
    /// Set when the run completed but an expected identity failed.
    pub violation: Option<String>,
}

enum Quad {
    Spectral(SpectralIntegrator),
    Midpoint(QuadratureGrid),
}

macro_rules! with_quad {
    ($q:expr, |$v:ident| $body:expr) => {
        match $q {
            Quad::Spectral($v) => $body,
            Quad::Midpoint($v) => $body,
        }
    };
}

fn quadrature(c: &Common) -> Result<Quad> {
    Ok(match c.quadrature {
        QuadratureKind::Spectral => Quad::Spectral(SpectralIntegrator::new()),
        QuadratureKind::Midpoint => Quad::Midpoint(build_grid(c.grid_n)?),
    })
}

fn label(q: &Quad) -> String {
    with_quad!(q, |v| v.label())
}

fn required_mu(c: &Common) -> Result<MuSpec> {
    c.mu.ok_or_else(|| Error::InvalidInput("--mu is required".into()))
}

fn required_side(c: &Common) -> Result<Side> {
    c.side
        .ok_or_else(|| Error::InvalidInput("--side is required".into()))
}

fn couplings_json(cc: &CriticalCouplings) -> Value {
    json!({
        "origin_integral": cc.origin_integral,
        "mu_left": cc.mu_left,
        "mu_right": cc.mu_right,
    })
}

fn energies(c: &Common, side: Side) -> Result<Vec<f64>> {
    let mut z = c.z.clone();
    if let Some(l) = &c.z_ladder {
        z.extend(l.energies(side.threshold())?);
    }
    if z.is_empty() {
        return Err(Error::InvalidInput("give --z or --z-ladder".into()));
    }
    Ok(z)
}

pub fn run(cmd: Command, c: &Common) -> Result<Output> {
    match cmd {
        Command::EssSpectrum => ess_spectrum(c),
        Command::CriticalMu => critical_mu(c),
        Command::FriedrichsEig => friedrichs_eig(c),
        Command::Count => count(c),
        Command::Efimov => efimov(c),
        Command::UConstant => u_constant(c),
        Command::OracleCompare => oracle_compare(c),
    }
}

fn ess_spectrum(c: &Common) -> Result<Output> {
    let tol = parse_tolerances(&c.tol)?;
    let q = quadrature(c)?;
    let report = with_quad!(&q, |quad| {
        let cc = critical_couplings(c.gamma, quad)?;
        let mu = required_mu(c)?.resolve(&cc)?;
        essential_spectrum(
            &ModelParams::new(mu, c.gamma)?,
            c.k_grid_n,
            quad,
            tol.critical_rtol,
        )
        .map(|r| (mu, r))
    });
    let (mu, report) = report?;
    let payload = serde_json::to_value(&report).expect("serializable");
    Ok(Output {
        resolved: json!({
            "gamma": c.gamma,
            "mu": mu,
            "quadrature": label(&q),
            "couplings": couplings_json(&report.couplings),
        }),
        diagnostics: json!({
            "branch_resolution": report.branch.resolution,
            "fibers_evaluated": report.branch.evaluated,
            "critical_rtol": tol.critical_rtol,
        }),
        table: Table::from_object(&payload),
        payload,
        violation: None,
    })
}

fn critical_mu(c: &Common) -> Result<Output> {
    let tol = parse_tolerances(&c.tol)?;
    let q = quadrature(c)?;
    let cc = with_quad!(&q, |quad| critical_couplings(c.gamma, quad))?;
    let ordering = cc.ordering(tol.critical_rtol).map(|o| match o {
        std::cmp::Ordering::Less => "less",
        std::cmp::Ordering::Equal => "equal",
        std::cmp::Ordering::Greater => "greater",
    });
    let mut payload = couplings_json(&cc);
    payload["ordering"] = json!(ordering);
    Ok(Output {
        resolved: json!({ "gamma": c.gamma, "quadrature": label(&q) }),
        diagnostics: json!({ "critical_rtol": tol.critical_rtol }),
        table: Table::from_object(&payload),
        payload,
        violation: None,
    })
}

fn friedrichs_eig(c: &Common) -> Result<Output> {
    let k = match c.k.as_slice() {
        [] => TorusPoint::origin(),
        [a, b, d] => TorusPoint::new(*a, *b, *d),
        _ => return Err(Error::InvalidInput("--k needs three components".into())),
    };
    let q = quadrature(c)?;
    let result = with_quad!(&q, |quad| (|| -> Result<_> {
        let cc = critical_couplings(c.gamma, quad)?;
        let mu = required_mu(c)?.resolve(&cc)?;
        let params = ModelParams::new(mu, c.gamma)?;
        let fiber = quad.fiber(&k)?;
        let left = fiber_eigenvalue(&params, &fiber, Side::Left)?;
        let right = fiber_eigenvalue(&params, &fiber, Side::Right)?;
        let deltas =
            c.z.iter()
                .map(|&z| fiber_delta(&params, &fiber, z).map(|d| json!({ "z": z, "delta": d })))
                .collect::<Result<Vec<_>>>()?;
        Ok((mu, cc, left, right, deltas))
    })());
    let (mu, cc, left, right, deltas) = result?;
    let band = band_bounds(&k);
    let payload = json!({
        "k": k.coords(),
        "band": { "lower": band.lower, "upper": band.upper },
        "eigenvalue_left": left,
        "eigenvalue_right": right,
        "determinant": deltas,
    });
    Ok(Output {
        resolved: json!({
            "gamma": c.gamma,
            "mu": mu,
            "quadrature": label(&q),
            "couplings": couplings_json(&cc),
        }),
        diagnostics: json!({}),
        table: Table::from_object(&payload),
        payload,
        violation: None,
    })
}

fn count(c: &Common) -> Result<Output> {
    let side = required_side(c)?;
    let grid = build_grid(c.grid_n)?;
    let cc = critical_couplings(c.gamma, &grid)?;
    let mu = required_mu(c)?.resolve(&cc)?;
    let params = ModelParams::new(mu, c.gamma)?;
    let oracle = match c.oracle {
        Some(n) => {
            let g = build_grid(n)?;
            let occ = critical_couplings(c.gamma, &g)?;
            Some((
                g,
                ModelParams::new(required_mu(c)?.resolve(&occ)?, c.gamma)?,
            ))
        }
        None => None,
    };
    let mut rows = Vec::new();
    let mut table = Table::new(&["z", "count", "near_threshold", "oracle_count"]);
    let mut near = 0;
    for z in energies(c, side)? {
        let n = eigenvalue_count(&params, z, side, &grid)?;
        near += n.near_threshold;
        let o = match &oracle {
            Some((g, p)) => Some(oracle_count(p, z, side, g)?),
            None => None,
        };
        table.push(vec![
            format_float(z),
            n.count.to_string(),
            n.near_threshold.to_string(),
            o.map_or_else(String::new, |v| v.to_string()),
        ]);
        rows.push(json!({
            "z": z,
            "count": n.count,
            "near_threshold": n.near_threshold,
            "oracle_count": o,
        }));
    }
    Ok(Output {
        resolved: json!({
            "gamma": c.gamma,
            "mu": mu,
            "side": side,
            "grid_n": c.grid_n,
            "couplings": couplings_json(&cc),
        }),
        payload: json!({ "side": side, "rows": rows }),
        diagnostics: json!({ "near_threshold_total": near }),
        table,
        violation: None,
    })
}

fn efimov(c: &Common) -> Result<Output> {
    let side = c.side.unwrap_or(Side::Right);
    let grid = build_grid(c.grid_n)?;
    let cc = critical_couplings(c.gamma, &grid)?;
    let spec = c.mu.unwrap_or(MuSpec::Critical { scale: 1.0, side });
    let mu = spec.resolve(&cc)?;
    let params = ModelParams::new(mu, c.gamma)?;
    let theta = side.threshold();
    let z = if c.z.is_empty() && c.z_ladder.is_none() {
        let sign = if side == Side::Right { 1.0 } else { -1.0 };
        (1..=5).map(|j| theta + sign * 10f64.powi(-j)).collect()
    } else {
        energies(c, side)?
    };
    let coarse = c.coarse_grid_n.map(build_grid).transpose()?;
    let t = efimov_count_ladder(&params, side, &z, &grid, coarse.as_ref())?;
    if t.grid_limited {
        log::warn!("count ladder is grid-limited; refine --grid-n");
    }
    let mut table = Table::new(&["z", "log_distance", "count", "coarse_count"]);
    for r in &t.rows {
        table.push(vec![
            format_float(r.z),
            format_float(r.log_distance),
            r.count.to_string(),
            r.coarse_count.map_or_else(String::new, |v| v.to_string()),
        ]);
    }
    let payload = serde_json::to_value(&t).expect("serializable");
    Ok(Output {
        resolved: json!({
            "gamma": c.gamma,
            "mu": mu,
            "side": side,
            "grid_n": c.grid_n,
            "couplings": couplings_json(&cc),
        }),
        diagnostics: json!({
            "grid_limited": t.grid_limited,
            "strict_increases": t.strict_increases(),
        }),
        payload,
        table,
        violation: None,
    })
}

fn u_constant(c: &Common) -> Result<Output> {
    let lambda = 1.0;
    let r_ladder = if c.r.is_empty() {
        vec![10.0, 20.0, 40.0, 80.0]
    } else {
        c.r.clone()
    };
    let log_r = if c.log_r.is_empty() {
        vec![4.0, 6.0, 8.0]
    } else {
        c.log_r.clone()
    };
    let cutoff = match c.angular_cutoff {
        Some(l) => l,
        None => adaptive_sobolev_count(lambda, r_ladder[0], c.radial_n.max(64))?.1,
    };
    let est = estimate_u(lambda, &r_ladder, c.radial_n, cutoff)?;
    let mut table = Table::new(&["estimator", "extent", "radial_n", "count", "value"]);
    for p in &est.ladder {
        table.push(vec![
            "sobolev".into(),
            format_float(p.r),
            p.radial_n.to_string(),
            p.count.to_string(),
            format_float(p.u),
        ]);
    }
    let mut ball = Vec::new();
    for &lr in &log_r {
        // Fixed spacing in log radius, set by --radial-n per four units.
        let n = ((c.radial_n as f64 * lr / 4.0).round() as usize).max(c.radial_n);
        let op = t1_operator(lr.exp(), n, cutoff)?;
        let count = op.count_above(lambda)?;
        let top = op.top_eigenvalue()?;
        table.push(vec![
            "ball".into(),
            format_float(lr),
            n.to_string(),
            count.to_string(),
            format_float(count as f64 / lr),
        ]);
        ball.push(json!({
            "log_r": lr,
            "radial_n": n,
            "count": count,
            "ratio": count as f64 / lr,
            "top_eigenvalue": top,
        }));
    }
    let final_ratio = ball
        .last()
        .and_then(|b| b["ratio"].as_f64())
        .unwrap_or(f64::NAN);
    let rel = (final_ratio - est.estimate).abs() / est.estimate.abs();
    let payload = json!({
        "lambda": lambda,
        "sobolev": est,
        "ball": ball,
        "agreement": {
            "sobolev_estimate": est.estimate,
            "ball_ratio": final_ratio,
            "relative_difference": if rel.is_finite() { json!(rel) } else { Value::Null },
        },
    });
    Ok(Output {
        resolved: json!({
            "r": r_ladder,
            "log_r": log_r,
            "radial_n": c.radial_n,
            "angular_cutoff": cutoff,
        }),
        diagnostics: json!({
            "converged": est.converged,
            "last_relative_change": est.last_relative_change,
        }),
        payload,
        table,
        violation: None,
    })
}

fn oracle_compare(c: &Common) -> Result<Output> {
    let side = required_side(c)?;
    let n = c.oracle.unwrap_or(4);
    let grid = build_grid(n)?;
    let cc = critical_couplings(c.gamma, &grid)?;
    let mu = required_mu(c)?.resolve(&cc)?;
    let params = ModelParams::new(mu, c.gamma)?;
    let mut rows = Vec::new();
    let mut table = Table::new(&["z", "birman_schwinger", "oracle", "agree"]);
    let mut all = true;
    for z in energies(c, side)? {
        let bs = eigenvalue_count(&params, z, side, &grid)?.count;
        let or = oracle_count(&params, z, side, &grid)?;
        all &= bs == or;
        let row = json!({ "z": z, "birman_schwinger": bs, "oracle": or, "agree": bs == or });
        table.push(
            ["z", "birman_schwinger", "oracle", "agree"]
                .iter()
                .map(|k| scalar(&row[*k]))
                .collect(),
        );
        rows.push(row);
    }
    Ok(Output {
        resolved: json!({
            "gamma": c.gamma,
            "mu": mu,
            "side": side,
            "grid_n": n,
            "couplings": couplings_json(&cc),
        }),
        payload: json!({ "side": side, "rows": rows, "all_agree": all }),
        diagnostics: json!({}),
        table,
        violation: (!all).then(|| "Birman–Schwinger and direct counts differ".to_owned()),
    })
}
