use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use serde::Serialize;
use trimer_core::dynamics::{DEFAULT_BLOW_UP, DEFAULT_PERTURBATION};
use trimer_core::waveguide::GainConvention;

/// Bad input detected after parsing; exits with code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// A closed interval written `lo:hi` with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
        let lo: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
        let hi: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(format!("range {s:?} is not finite"));
        }
        if lo >= hi {
            return Err(format!("empty range {s:?}"));
        }
        Ok(Range { lo, hi })
    }
}

impl Range {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn grid(&self, steps: usize) -> Vec<f64> {
        (0..=steps)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / steps as f64)
            .collect()
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a positive number, got {s}"))
    }
}

fn nonneg_range(s: &str) -> Result<Range, String> {
    let r: Range = s.parse()?;
    if r.lo < 0.0 {
        return Err(format!("gamma must be nonnegative, got {s}"));
    }
    Ok(r)
}

fn convention(s: &str) -> Result<GainConvention, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Args, Debug, Serialize)]
pub struct BranchesArgs {
    /// Propagation constant E.
    #[arg(long = "E", value_parser = positive)]
    #[serde(rename = "E")]
    pub e: f64,
    /// Coupling k.
    #[arg(long, value_parser = positive)]
    pub k: f64,
    /// Gain/loss range `lo:hi`.
    #[arg(long, value_parser = nonneg_range)]
    pub gamma: Range,
    /// Grid points of the census table.
    #[arg(long, default_value_t = 200)]
    pub census_steps: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct GhostsArgs {
    /// Modulus of the complex propagation constant.
    #[arg(long = "Ehat", value_parser = positive)]
    #[serde(rename = "Ehat")]
    pub e_hat: f64,
    #[arg(long, value_parser = positive)]
    pub k: f64,
    /// Gain/loss range `lo:hi`; must reach past the symmetry-breaking point.
    #[arg(long, value_parser = nonneg_range)]
    pub gamma: Range,
}

#[derive(Args, Debug, Serialize)]
pub struct EvolveArgs {
    #[arg(long = "E", default_value_t = 1.0, value_parser = positive)]
    #[serde(rename = "E")]
    pub e: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub k: f64,
    /// Branch label (e.g. blue, red, black, branch-0, magenta, green).
    #[arg(long)]
    pub from_branch: String,
    /// Gain/loss of the evolution.
    #[arg(long)]
    pub at_gamma: f64,
    /// Start from the branch's terminal profile when it does not reach `--at-gamma`.
    #[arg(long)]
    pub terminal_profile: bool,
    #[arg(long, default_value_t = 60.0, value_parser = positive)]
    pub t_end: f64,
    /// Number of sampling intervals on `[0, t_end]`.
    #[arg(long, default_value_t = 600)]
    pub samples: usize,
    /// Relative size of the initial perturbation.
    #[arg(long, default_value_t = DEFAULT_PERTURBATION)]
    pub perturbation: f64,
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12, value_parser = positive)]
    pub atol: f64,
    /// Site modulus at which a run counts as blown up.
    #[arg(long, default_value_t = DEFAULT_BLOW_UP, value_parser = positive)]
    pub blow_up: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct WaveguideArgs {
    /// Gain convention: `half` = (g/2, -g/2, g/2), `full` = (g, -g, g).
    #[arg(long, default_value = "half", value_parser = convention)]
    #[serde(serialize_with = "convention_name")]
    pub convention: GainConvention,
    /// Coupling per unit length (1/mm).
    #[arg(long, default_value_t = 0.2, value_parser = positive)]
    pub k: f64,
    /// Propagation length (mm).
    #[arg(long = "L", default_value_t = 20.0, value_parser = positive)]
    #[serde(rename = "L")]
    pub length: f64,
    /// Range of gamma / k.
    #[arg(long, default_value = "0:4", value_parser = nonneg_range)]
    pub gamma_over_k: Range,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    /// Common loss subtracted from every channel (1/mm).
    #[arg(long, default_value_t = 0.0)]
    pub baseline_loss: f64,
    /// Points along z in the field-profile table.
    #[arg(long, default_value_t = 100)]
    pub z_samples: usize,
    /// Photorefractive time constant; enables the recording sweep.
    #[arg(long, value_parser = positive)]
    pub tau: Option<f64>,
    /// Saturated gain of the recording sweep, as gamma0 / k.
    #[arg(long, default_value_t = 1.5)]
    pub gamma0_over_k: f64,
    /// Recording-time range of the sweep.
    #[arg(long, default_value = "0:5")]
    pub t_rec: Range,
    #[arg(long, default_value_t = 100)]
    pub t_rec_steps: usize,
}

fn convention_name<S: serde::Serializer>(c: &GainConvention, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(c.as_str())
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Dataset files written by ptt.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}
