//! Linear gain-loss-gain three-channel coupler:
//! `du/dz = (i k L + diag(g)) u` over `z in [0, L]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TrimerError};
use crate::linalg::{eigenvalues, expm, ComplexMatrix};
use crate::ode::{self, Control, State, Tolerances};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Maps a scalar gain `gamma` to per-channel coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainConvention {
    /// `(gamma/2, -gamma/2, gamma/2)`.
    Half,
    /// `(gamma, -gamma, gamma)`.
    Full,
}

impl GainConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            GainConvention::Half => "half",
            GainConvention::Full => "full",
        }
    }

    /// Channel gains, each reduced by a common `baseline_loss`.
    pub fn gains(self, gamma: f64, baseline_loss: f64) -> [f64; 3] {
        let g = match self {
            GainConvention::Half => 0.5 * gamma,
            GainConvention::Full => gamma,
        };
        [g - baseline_loss, -g - baseline_loss, g - baseline_loss]
    }
}

impl std::str::FromStr for GainConvention {
    type Err = TrimerError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" => Ok(Self::Half),
            "full" => Ok(Self::Full),
            other => Err(TrimerError::InvalidParameter(format!(
                "unknown gain convention {other:?} (expected half or full)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplerConfig {
    /// Coupling per unit length.
    pub k: f64,
    pub length: f64,
    pub gains: [f64; 3],
    pub input: State,
}

/// Unit excitation of the central channel.
pub const CENTRAL_INPUT: State = [
    Complex64::new(0.0, 0.0),
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 0.0),
];

impl CouplerConfig {
    pub fn new(k: f64, length: f64, gains: [f64; 3], input: State) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(TrimerError::InvalidParameter(format!(
                "coupling k = {k} must be positive"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(TrimerError::InvalidParameter(format!(
                "length L = {length} must be positive"
            )));
        }
        if gains.iter().any(|g| !g.is_finite())
            || input.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(TrimerError::NonFinite);
        }
        Ok(Self {
            k,
            length,
            gains,
            input,
        })
    }

    pub fn with_gains(&self, gains: [f64; 3]) -> Self {
        Self { gains, ..*self }
    }

    pub fn input_power(&self) -> f64 {
        power(&self.input)
    }
}

pub fn power(u: &State) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum()
}

pub fn system_matrix(k: f64, gains: [f64; 3]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(3);
    for j in 0..3 {
        m[(j, j)] = Complex64::new(gains[j], 0.0);
    }
    for j in 0..2 {
        m[(j, j + 1)] = I * k;
        m[(j + 1, j)] = I * k;
    }
    m
}

fn field(k: f64, g: [f64; 3], u: &State) -> State {
    [
        I * k * u[1] + u[0] * g[0],
        I * k * (u[0] + u[2]) + u[1] * g[1],
        I * k * u[1] + u[2] * g[2],
    ]
}

/// Propagator over a fixed length. With `g_1 = g_3` it acts on the
/// symmetric part `(u_1 + u_3)/2, u_2` and the antisymmetric part
/// `(u_1 - u_3)/2` separately, so a symmetric input stays exactly symmetric.
enum Transfer {
    Split {
        block: ComplexMatrix,
        anti: Complex64,
    },
    Full(ComplexMatrix),
}

impl Transfer {
    fn new(k: f64, gains: [f64; 3], z: f64) -> Self {
        let zc = Complex64::new(z, 0.0);
        if gains[0] == gains[2] {
            let block = ComplexMatrix::from_rows(&[
                vec![Complex64::new(gains[0], 0.0), I * k],
                vec![I * (2.0 * k), Complex64::new(gains[1], 0.0)],
            ]);
            Transfer::Split {
                block: expm(&block.scale(zc)),
                anti: Complex64::new(gains[0] * z, 0.0).exp(),
            }
        } else {
            Transfer::Full(expm(&system_matrix(k, gains).scale(zc)))
        }
    }

    fn apply(&self, u: &State) -> State {
        match self {
            Transfer::Split { block, anti } => {
                let s = (u[0] + u[2]) * 0.5;
                let d = (u[0] - u[2]) * 0.5 * anti;
                let v = block.mul_vec(&[s, u[1]]);
                [v[0] + d, v[1], v[0] - d]
            }
            Transfer::Full(m) => {
                let v = m.mul_vec(u);
                [v[0], v[1], v[2]]
            }
        }
    }
}

/// Field at `z` by the matrix exponential.
pub fn propagate_expm(config: &CouplerConfig, z: f64) -> State {
    Transfer::new(config.k, config.gains, z).apply(&config.input)
}

/// Field at `z` by adaptive Runge-Kutta integration.
pub fn propagate_rk(config: &CouplerConfig, z: f64, tol: &Tolerances) -> Result<State> {
    let (k, g) = (config.k, config.gains);
    let (_, y, _) = ode::integrate(
        |_z, u| field(k, g, u),
        0.0,
        config.input,
        z,
        &[],
        tol,
        |_, _| {},
        |_, _| Control::Continue,
    )?;
    Ok(y)
}

/// Field at `n + 1` equally spaced points of `[0, L]`.
pub fn field_evolution(config: &CouplerConfig, n: usize) -> Vec<(f64, State)> {
    let step = Transfer::new(config.k, config.gains, config.length / n as f64);
    let mut u = config.input;
    let mut out = Vec::with_capacity(n + 1);
    out.push((0.0, u));
    for i in 1..=n {
        u = step.apply(&u);
        out.push((config.length * i as f64 / n as f64, u));
    }
    out
}

/// Growth rates of the symmetric subspace `u_1 = u_3`, governed by
/// `[[g_out, i k], [2 i k, g_center]]`:
/// `lambda = (g_out + g_center)/2 +- sqrt(((g_out - g_center)/2)^2 - 2 k^2)`.
/// The first entry has the larger real part.
pub fn symmetric_block_eigenvalues(g_out: f64, g_center: f64, k: f64) -> [Complex64; 2] {
    let mean = 0.5 * (g_out + g_center);
    let half_diff = 0.5 * (g_out - g_center);
    let root = Complex64::new(half_diff * half_diff - 2.0 * k * k, 0.0).sqrt();
    [mean + root, mean - root]
}

/// Growth rate `g_out` of the antisymmetric mode `(1, 0, -1)`.
pub fn antisymmetric_eigenvalue(g_out: f64) -> Complex64 {
    Complex64::new(g_out, 0.0)
}

/// Full 3x3 spectrum, for cross-checking the block reduction.
pub fn system_eigenvalues(k: f64, gains: [f64; 3]) -> Result<Vec<Complex64>> {
    eigenvalues(&system_matrix(k, gains))
}

/// Largest real part reached by central-channel excitation.
pub fn symmetric_growth_rate(
    convention: GainConvention,
    gamma: f64,
    k: f64,
    baseline_loss: f64,
) -> f64 {
    let g = convention.gains(gamma, baseline_loss);
    symmetric_block_eigenvalues(g[0], g[1], k)[0].re
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakEven {
    pub gamma: f64,
    pub gamma_over_k: f64,
    pub bracket: [f64; 2],
}

const BISECT_TOL: f64 = 1e-12;

/// Smallest `gamma` beyond which central excitation grows without bound:
/// the symmetric-block growth rate becomes positive. Searches `gamma` in
/// `(0, gamma_max]`.
pub fn break_even_asymptotic(
    convention: GainConvention,
    k: f64,
    baseline_loss: f64,
    gamma_max: f64,
) -> Result<BreakEven> {
    let grows = |g: f64| symmetric_growth_rate(convention, g, k, baseline_loss) > BISECT_TOL * k;
    if !grows(gamma_max) {
        return Err(TrimerError::NoBracket {
            what: "symmetric growth rate",
            lo: 0.0,
            hi: gamma_max,
        });
    }
    let (mut lo, mut hi) = (0.0, gamma_max);
    while hi - lo > BISECT_TOL * gamma_max.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if grows(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let gamma = 0.5 * (lo + hi);
    Ok(BreakEven {
        gamma,
        gamma_over_k: gamma / k,
        bracket: [lo, hi],
    })
}

/// `P(L) / P(0)` with gains set from `gamma` by the convention.
pub fn output_ratio(
    template: &CouplerConfig,
    convention: GainConvention,
    gamma: f64,
    baseline_loss: f64,
) -> f64 {
    let cfg = template.with_gains(convention.gains(gamma, baseline_loss));
    power(&propagate_expm(&cfg, cfg.length)) / cfg.input_power()
}

/// Every `gamma` in `(lo, hi]` at which the finite-length output ratio
/// crosses 1, located on a scan of `scan` intervals and bisected to `tol`.
///
/// At finite `L` the ratio is not monotone in `gamma`, so there can be
/// several crossings; the last upward one is the finite-length break-even.
pub fn break_even_finite(
    template: &CouplerConfig,
    convention: GainConvention,
    baseline_loss: f64,
    lo: f64,
    hi: f64,
    scan: usize,
    tol: f64,
) -> Result<Vec<BreakEven>> {
    if !(lo > 0.0 && hi > lo) {
        return Err(TrimerError::InvalidParameter(format!(
            "break-even search needs 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let f = |g: f64| output_ratio(template, convention, g, baseline_loss) - 1.0;
    let mut out = Vec::new();
    let mut prev = (lo, f(lo));
    for i in 1..=scan {
        let g = lo + (hi - lo) * i as f64 / scan as f64;
        let v = f(g);
        if (prev.1 < 0.0) != (v < 0.0) {
            let (mut a, mut b) = (prev.0, g);
            let fa_neg = prev.1 < 0.0;
            while b - a > tol {
                let m = 0.5 * (a + b);
                if (f(m) < 0.0) == fa_neg {
                    a = m;
                } else {
                    b = m;
                }
            }
            let gamma = 0.5 * (a + b);
            out.push(BreakEven {
                gamma,
                gamma_over_k: gamma / template.k,
                bracket: [a, b],
            });
        }
        prev = (g, v);
    }
    if out.is_empty() {
        return Err(TrimerError::NoBracket {
            what: "output power ratio - 1",
            lo,
            hi,
        });
    }
    Ok(out)
}

/// Photorefractive gain build-up `gamma(t) = gamma0 (1 - exp(-t / tau))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainSchedule {
    pub gamma0: f64,
    pub tau: f64,
}

impl GainSchedule {
    pub fn new(gamma0: f64, tau: f64) -> Result<Self> {
        if !(gamma0 >= 0.0 && gamma0.is_finite() && tau > 0.0 && tau.is_finite()) {
            return Err(TrimerError::InvalidParameter(format!(
                "gain schedule needs gamma0 >= 0 and tau > 0, got {gamma0}, {tau}"
            )));
        }
        Ok(Self { gamma0, tau })
    }

    pub fn gamma_at(&self, t_rec: f64) -> f64 {
        -self.gamma0 * (-t_rec / self.tau).exp_m1()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub t_rec: f64,
    pub gamma: f64,
    pub powers: [f64; 3],
    pub total: f64,
    /// `arg(u_1 / u_2)` and `arg(u_3 / u_2)` at the output.
    pub relative_phases: [f64; 2],
}

/// Output readout of the coupler at each recording time.
pub fn recording_sweep(
    schedule: &GainSchedule,
    template: &CouplerConfig,
    convention: GainConvention,
    baseline_loss: f64,
    times: &[f64],
) -> Vec<SweepRecord> {
    times
        .iter()
        .map(|&t_rec| {
            let gamma = schedule.gamma_at(t_rec);
            let cfg = template.with_gains(convention.gains(gamma, baseline_loss));
            let u = propagate_expm(&cfg, cfg.length);
            let powers = [u[0].norm_sqr(), u[1].norm_sqr(), u[2].norm_sqr()];
            SweepRecord {
                t_rec,
                gamma,
                powers,
                total: powers.iter().sum(),
                relative_phases: [(u[0] / u[1]).arg(), (u[2] / u[1]).arg()],
            }
        })
        .collect()
}
