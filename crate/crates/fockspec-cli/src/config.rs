//! Command-line options and their resolution to concrete numbers.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fockspec::essential::{CriticalCouplings, CRITICAL_RTOL};
use fockspec::friedrichs::Side;
use fockspec::{Error, Result};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "fockspec",
    version,
    about = "Spectra of a lattice block operator on the cut Fock space"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Essential spectrum, its extreme points and regimes.
    EssSpectrum,
    /// Critical couplings and their ordering.
    CriticalMu,
    /// Band and discrete eigenvalues of one fiber operator.
    FriedrichsEig,
    /// Eigenvalue counts beyond given energies.
    Count,
    /// Count ladder towards a threshold at critical coupling, with a log fit.
    Efimov,
    /// Estimates of the logarithmic growth constant.
    UConstant,
    /// Birman–Schwinger counts against the direct finite model.
    OracleCompare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::EssSpectrum => "ess-spectrum",
            Self::CriticalMu => "critical-mu",
            Self::FriedrichsEig => "friedrichs-eig",
            Self::Count => "count",
            Self::Efimov => "efimov",
            Self::UConstant => "u-constant",
            Self::OracleCompare => "oracle-compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureKind {
    /// Laplace-transform integrator, accurate up to the band edge.
    Spectral,
    /// Product midpoint rule on the --grid-n grid.
    Midpoint,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    #[arg(long, global = true, default_value_t = 6.0, allow_hyphen_values = true)]
    pub gamma: f64,
    /// Coupling: a number, `mu_l0`, `mu_r0`, or a multiple such as `1.2*mu_r0`.
    #[arg(long, global = true)]
    pub mu: Option<MuSpec>,
    /// Nodes per axis of the midpoint grid used for counting.
    #[arg(long, global = true, default_value_t = 24)]
    pub grid_n: usize,
    /// Nodes per axis of the fiber-momentum sweep.
    #[arg(long, global = true, default_value_t = 16)]
    pub k_grid_n: usize,
    /// Comma-separated energies.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub z: Vec<f64>,
    /// `lo:hi:count`, or `lo:hi:count:log` for geometric spacing of the
    /// distance to the threshold of --side.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub z_ladder: Option<LadderSpec>,
    #[arg(long, global = true)]
    pub side: Option<Side>,
    /// Grid size of the direct finite model for comparison counts.
    #[arg(long, global = true)]
    pub oracle: Option<usize>,
    /// Fiber momentum as `k1,k2,k3`.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub k: Vec<f64>,
    /// Radial extents of the limiting operator.
    #[arg(long, global = true, value_delimiter = ',')]
    pub r: Vec<f64>,
    /// Logarithms of the ball radii for the ball-restricted operator.
    #[arg(long, global = true, value_delimiter = ',')]
    pub log_r: Vec<f64>,
    #[arg(long, global = true, default_value_t = 64)]
    pub radial_n: usize,
    /// Highest angular momentum sector; chosen adaptively when omitted.
    #[arg(long, global = true)]
    pub angular_cutoff: Option<usize>,
    /// Second grid for detecting grid-limited count ladders.
    #[arg(long, global = true)]
    pub coarse_grid_n: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = QuadratureKind::Spectral)]
    pub quadrature: QuadratureKind,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Tolerance override, `KEY=VAL`; known keys: critical_rtol.
    #[arg(long, global = true)]
    pub tol: Vec<String>,
}

/// A coupling given directly or as a multiple of a critical value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuSpec {
    Value(f64),
    Critical { scale: f64, side: Side },
}

impl FromStr for MuSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (scale, rest) = match s.split_once('*') {
            Some((a, b)) => (
                a.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad factor in {s:?}: {e}"))?,
                b.trim(),
            ),
            None => (1.0, s),
        };
        match rest {
            "mu_l0" => Ok(Self::Critical {
                scale,
                side: Side::Left,
            }),
            "mu_r0" => Ok(Self::Critical {
                scale,
                side: Side::Right,
            }),
            _ if s.contains('*') => Err(format!("unknown coupling symbol in {s:?}")),
            _ => s
                .parse::<f64>()
                .map(Self::Value)
                .map_err(|e| format!("bad coupling {s:?}: {e}")),
        }
    }
}

impl MuSpec {
    pub fn resolve(&self, couplings: &CriticalCouplings) -> Result<f64> {
        match *self {
            Self::Value(v) => Ok(v),
            Self::Critical { scale, side } => {
                couplings.critical(side).map(|c| scale * c).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "no {side} critical coupling at gamma = {}",
                        couplings.gamma
                    ))
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub log: bool,
}

impl FromStr for LadderSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let log = match parts.get(3) {
            None => false,
            Some(&"log") => true,
            Some(other) => return Err(format!("unknown ladder spacing {other:?}")),
        };
        if !(3..=4).contains(&parts.len()) {
            return Err(format!("ladder must be lo:hi:count[:log], got {s:?}"));
        }
        let num = |x: &str| {
            x.parse::<f64>()
                .map_err(|e| format!("bad ladder bound {x:?}: {e}"))
        };
        let count = parts[2]
            .parse::<usize>()
            .map_err(|e| format!("bad ladder count {:?}: {e}", parts[2]))?;
        if count == 0 {
            return Err("ladder count must be positive".into());
        }
        Ok(Self {
            lo: num(parts[0])?,
            hi: num(parts[1])?,
            count,
            log,
        })
    }
}

impl LadderSpec {
    /// Ladder energies; with `log`, the distances to `threshold` are spaced
    /// geometrically.
    pub fn energies(&self, threshold: f64) -> Result<Vec<f64>> {
        let n = self.count;
        let frac = |i: usize| {
            if n == 1 {
                0.0
            } else {
                i as f64 / (n - 1) as f64
            }
        };
        if !self.log {
            return Ok((0..n)
                .map(|i| self.lo + (self.hi - self.lo) * frac(i))
                .collect());
        }
        let (a, b) = (self.lo - threshold, self.hi - threshold);
        if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
            return Err(Error::InvalidInput(format!(
                "log ladder needs both ends on one side of {threshold}"
            )));
        }
        let (la, lb) = (a.abs().ln(), b.abs().ln());
        Ok((0..n)
            .map(|i| threshold + a.signum() * (la + (lb - la) * frac(i)).exp())
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub critical_rtol: f64,
}

pub fn parse_tolerances(entries: &[String]) -> Result<Tolerances> {
    let mut tol = Tolerances {
        critical_rtol: CRITICAL_RTOL,
    };
    for e in entries {
        let (key, val) = e
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("tolerance must be KEY=VAL, got {e:?}")))?;
        let val: f64 = val
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad tolerance value in {e:?}")))?;
        if !(val > 0.0 && val.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be positive, got {e:?}"
            )));
        }
        match key {
            "critical_rtol" => tol.critical_rtol = val,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "unknown tolerance key {key:?}"
                )))
            }
        }
    }
    Ok(tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_specs() {
        assert_eq!("0.7".parse::<MuSpec>().unwrap(), MuSpec::Value(0.7));
        assert_eq!(
            "1.2*mu_r0".parse::<MuSpec>().unwrap(),
            MuSpec::Critical {
                scale: 1.2,
                side: Side::Right
            }
        );
        assert_eq!(
            "mu_l0".parse::<MuSpec>().unwrap(),
            MuSpec::Critical {
                scale: 1.0,
                side: Side::Left
            }
        );
        assert!("2*mu_x".parse::<MuSpec>().is_err());
        assert!("abc".parse::<MuSpec>().is_err());
    }

    #[test]
    fn ladders() {
        let l: LadderSpec = "18.1:18.00001:5:log".parse().unwrap();
        let z = l.energies(18.0).unwrap();
        assert_eq!(z.len(), 5);
        for (got, want) in z.iter().zip([1e-1, 1e-2, 1e-3, 1e-4, 1e-5]) {
            assert!(((got - 18.0) / want - 1.0).abs() < 1e-9);
        }
        let lin: LadderSpec = "0:1:3".parse().unwrap();
        assert_eq!(lin.energies(0.0).unwrap(), vec![0.0, 0.5, 1.0]);
        assert!("1:2".parse::<LadderSpec>().is_err());
        assert!("-1:1:3:log"
            .parse::<LadderSpec>()
            .unwrap()
            .energies(0.0)
            .is_err());
    }

    #[test]
    fn tolerances() {
        assert_eq!(parse_tolerances(&[]).unwrap().critical_rtol, CRITICAL_RTOL);
        let t = parse_tolerances(&["critical_rtol=1e-6".into()]).unwrap();
        assert_eq!(t.critical_rtol, 1e-6);
        assert!(parse_tolerances(&["nope=1".into()]).is_err());
    }
}
