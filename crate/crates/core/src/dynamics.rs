//! Time evolution of the trimer, growth-scenario classification and the
//! short-time behaviour of ghost initial data.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::continuation::{solution_at, Branch};
use crate::error::{Result, TrimerError};
use crate::ghost::GhostPoint;
use crate::model::{total_power, vector_field_raw, TrimerParams, TrimerState};
use crate::ode::{self, Control, IntegrationStats, Tolerances};

/// Default amplitude at which a run counts as blown up.
///
/// Self-phase rotation runs at frequency `|u|^2`, so the step count of an
/// accurate integration grows like `|u|^2`; this keeps runs short while
/// staying two orders of magnitude above the stationary amplitudes.
pub const DEFAULT_BLOW_UP: f64 = 1e2;
pub const DECAY_FLOOR: f64 = 1e-16;
/// Default relative size of the perturbation applied to unstable states.
pub const DEFAULT_PERTURBATION: f64 = 1e-6;
/// `|slope|` of `log |u_j|` below this is not a trend.
pub const SLOPE_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub tolerances: Tolerances,
    pub blow_up: f64,
    pub decay_floor: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            blow_up: DEFAULT_BLOW_UP,
            decay_floor: DECAY_FLOOR,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TimeReached,
    BlowUp,
    DecayFloor,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::TimeReached => "time_reached",
            Termination::BlowUp => "blow_up",
            Termination::DecayFloor => "decay_floor",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<TrimerState>,
    pub termination: Termination,
    /// Time of the last accepted step.
    pub final_time: f64,
    pub final_state: TrimerState,
    pub stats: IntegrationStats,
}

impl Trajectory {
    pub fn moduli(&self) -> Vec<[f64; 3]> {
        self.states.iter().map(|s| s.moduli()).collect()
    }

    pub fn power(&self) -> Vec<f64> {
        self.states.iter().map(total_power).collect()
    }
}

/// Uniform sample grid `0, dt, .., t_end` with `n` intervals.
pub fn uniform_grid(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

/// Integrates the trimer from `initial` over `[0, t_end]`, sampling at
/// `samples`. A run stops early when a site modulus exceeds the blow-up
/// amplitude or the total power drops below the decay floor; the stopping
/// state is appended as the last sample.
pub fn integrate(
    initial: &TrimerState,
    params: &TrimerParams,
    t_end: f64,
    samples: &[f64],
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    if !initial.is_finite() {
        return Err(TrimerError::NonFinite);
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(TrimerError::InvalidParameter(format!("t_end = {t_end}")));
    }
    let (k, g) = (params.k(), params.gamma());
    let mut times = Vec::with_capacity(samples.len() + 1);
    let mut states = Vec::with_capacity(samples.len() + 1);
    let mut termination = Termination::TimeReached;
    let (t_fin, y_fin, stats) = ode::integrate(
        |_t, u| vector_field_raw(u, k, g),
        0.0,
        initial.to_array(),
        t_end,
        samples,
        &opts.tolerances,
        |t, u| {
            times.push(t);
            states.push(TrimerState::from_array(*u));
        },
        |_t, u| {
            if u.iter().any(|z| z.norm() > opts.blow_up) {
                termination = Termination::BlowUp;
                Control::Stop
            } else if u.iter().map(|z| z.norm_sqr()).sum::<f64>() < opts.decay_floor {
                termination = Termination::DecayFloor;
                Control::Stop
            } else {
                Control::Continue
            }
        },
    )?;
    let final_state = TrimerState::from_array(y_fin);
    if termination != Termination::TimeReached && times.last().is_none_or(|t| *t < t_fin) {
        times.push(t_fin);
        states.push(final_state);
    }
    Ok(Trajectory {
        times,
        states,
        termination,
        final_time: t_fin,
        final_state,
        stats,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tendency {
    Grow,
    Decay,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// The neutral central site grows together with the gain site.
    CentralSidesWithGain,
    /// The central site decays together with the lossy site.
    CentralSidesWithLoss,
    Undetermined,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::CentralSidesWithGain => "central_sides_with_gain",
            Scenario::CentralSidesWithLoss => "central_sides_with_loss",
            Scenario::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthScenario {
    /// Least-squares slopes of `log |u_j|` over the final 20% of samples.
    pub slopes: [f64; 3],
    pub tendency: [Tendency; 3],
    pub scenario: Scenario,
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn classify_scenario(traj: &Trajectory) -> Result<GrowthScenario> {
    let n = traj.times.len();
    if n < 5 {
        return Err(TrimerError::InvalidParameter(format!(
            "{n} samples are too few to classify"
        )));
    }
    let start = n - (n / 5).max(3);
    let ts = &traj.times[start..];
    let mut slopes = [0.0; 3];
    let mut tendency = [Tendency::Undetermined; 3];
    for j in 0..3 {
        let ls: Vec<f64> = traj.states[start..]
            .iter()
            .map(|s| s.moduli()[j].max(f64::MIN_POSITIVE).ln())
            .collect();
        slopes[j] = fit_slope(ts, &ls);
        tendency[j] = if slopes[j] > SLOPE_TOL {
            Tendency::Grow
        } else if slopes[j] < -SLOPE_TOL {
            Tendency::Decay
        } else {
            Tendency::Undetermined
        };
    }
    let scenario = match tendency[1] {
        Tendency::Grow => Scenario::CentralSidesWithGain,
        Tendency::Decay => Scenario::CentralSidesWithLoss,
        Tendency::Undetermined => Scenario::Undetermined,
    };
    Ok(GrowthScenario {
        slopes,
        tendency,
        scenario,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhostSlope {
    pub measured: f64,
    /// `-2 E_hat sin(phi_e)`.
    pub predicted: f64,
    pub relative_deviation: f64,
    /// The fit window actually used.
    pub window: f64,
    /// The window had to be shrunk below the requested one.
    pub shrunk: bool,
}

/// Relative change of the fitted slope of `log P` across a window above
/// which the window counts as too long.
const CURVATURE_TOL: f64 = 0.02;
const MIN_WINDOW: f64 = 1e-3;
/// Slopes below this count as flat for the curvature test.
const FLAT_SLOPE: f64 = 1e-6;

/// Fits `d/dt log P` on `[0, window]` from the ghost state as initial data
/// and compares it with the ghost's predicted `-2 E_i`.
///
/// The window is halved while `log P` is visibly curved on it (a quadratic
/// fit changes the slope by more than 2% across the window), since then
/// the instability rather than the ghost dominates.
pub fn ghost_slope_check(
    ghost: &GhostPoint,
    window: f64,
    opts: &IntegrationOptions,
) -> Result<GhostSlope> {
    let predicted = ghost.predicted_power_slope();
    let initial = ghost.polar.to_state();
    let mut w = window;
    loop {
        let grid = uniform_grid(w, 40);
        let traj = integrate(&initial, &ghost.params, w, &grid, opts)?;
        let lp: Vec<f64> = traj.power().iter().map(|p| p.ln()).collect();
        let measured = fit_slope(&traj.times, &lp);
        let (_, b, c) = fit_quadratic(&traj.times, &lp);
        let curved = (2.0 * c * w).abs() > CURVATURE_TOL * b.abs().max(FLAT_SLOPE);
        if !curved || w / 2.0 < MIN_WINDOW {
            let relative_deviation = if predicted != 0.0 {
                (measured - predicted).abs() / predicted.abs()
            } else {
                (measured - predicted).abs()
            };
            return Ok(GhostSlope {
                measured,
                predicted,
                relative_deviation,
                window: w,
                shrunk: w < window,
            });
        }
        w /= 2.0;
    }
}

/// Least-squares `a + b t + c t^2`.
fn fit_quadratic(ts: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let mut m = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for (t, y) in ts.iter().zip(ys) {
        let basis = [1.0, *t, t * t];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            r[i] += basis[i] * y;
        }
    }
    let rows: Vec<Vec<f64>> = m.iter().map(|row| row.to_vec()).collect();
    match crate::linalg::solve_real(&rows, &r) {
        Some(x) => (x[0], x[1], x[2]),
        None => (0.0, 0.0, 0.0),
    }
}

/// First sample time at which some site modulus differs from
/// `|v_j| exp(-E_i t)` by more than `threshold` relatively; `None` if it
/// never does.
pub fn departure_from_ghost(
    traj: &Trajectory,
    ghost_amps: [f64; 3],
    e_imag: f64,
    threshold: f64,
) -> Option<f64> {
    traj.times.iter().zip(&traj.states).find_map(|(t, s)| {
        let m = s.moduli();
        let scale = (-e_imag * t).exp();
        (0..3)
            .any(|j| {
                let expected = ghost_amps[j] * scale;
                expected > 0.0 && ((m[j] - expected) / expected).abs() > threshold
            })
            .then_some(*t)
    })
}

/// A fixed generic perturbation direction (unit norm).
pub fn perturbation_direction() -> [Complex64; 3] {
    let d = [
        Complex64::new(0.3, 0.1),
        Complex64::new(-0.2, 0.4),
        Complex64::new(0.5, -0.3),
    ];
    let n = d.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    d.map(|z| z / n)
}

/// `state + eps |state| d` for the fixed direction `d`.
pub fn perturb(state: &TrimerState, eps: f64) -> TrimerState {
    let norm = total_power(state).sqrt();
    let d = perturbation_direction();
    let u = state.to_array();
    TrimerState::new(
        u[0] + d[0] * (eps * norm),
        u[1] + d[1] * (eps * norm),
        u[2] + d[2] * (eps * norm),
    )
}

/// Initial data from a branch at `gamma`.
///
/// Inside the branch's range the state is re-solved at `gamma`. Outside
/// it, the terminal profile (the endpoint nearest to `gamma`) is returned
/// only when `terminal_profile` is set; otherwise the error names the
/// branch's existence interval. Also returns the `gamma` of the profile.
pub fn initial_from_branch(
    branch: &Branch,
    gamma: f64,
    terminal_profile: bool,
) -> Result<(TrimerState, f64)> {
    let (lo, hi) = branch.gamma_range();
    if branch.contains_gamma(gamma) {
        return Ok((solution_at(branch, gamma)?.state(), gamma));
    }
    if !terminal_profile {
        return Err(TrimerError::InvalidParameter(format!(
            "branch {} exists on gamma in [{lo:.6}, {hi:.6}], not at {gamma}",
            branch.label
        )));
    }
    let p = if gamma > hi {
        branch.points.last()
    } else {
        branch.points.first()
    }
    .expect("nonempty branch");
    Ok((p.solution.state(), p.gamma))
}
