//! Dormand-Prince 5(4) with the standard fourth-order dense output, on
//! three complex components.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TrimerError};

pub type State = [Complex64; 3];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for j in 0..3 {
                out[j] += k[j] * (h * c);
            }
        }
    }
    out
}

/// Result of one step: the new state, its derivative, the error estimate
/// and the dense-output coefficients.
struct Step {
    y: State,
    f: State,
    err: f64,
    cont: [State; 5],
}

fn dopri_step<F: Fn(f64, &State) -> State>(
    f: &F,
    t: f64,
    y: &State,
    k1: &State,
    h: f64,
    tol: &Tolerances,
) -> Step {
    let k2 = f(t + C2 * h, &axpy(y, &[(A21, k1)], h));
    let k3 = f(t + C3 * h, &axpy(y, &[(A31, k1), (A32, &k2)], h));
    let k4 = f(
        t + C4 * h,
        &axpy(y, &[(A41, k1), (A42, &k2), (A43, &k3)], h),
    );
    let k5 = f(
        t + C5 * h,
        &axpy(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
    );
    let k6 = f(
        t + h,
        &axpy(
            y,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            h,
        ),
    );
    let y_new = axpy(
        y,
        &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        h,
    );
    let k7 = f(t + h, &y_new);

    let mut sum = 0.0;
    for j in 0..3 {
        let e = (k1[j] * E1 + k3[j] * E3 + k4[j] * E4 + k5[j] * E5 + k6[j] * E6 + k7[j] * E7) * h;
        // per-site modulus scale: the norm is invariant under a global phase
        let scale = tol.atol + tol.rtol * y[j].norm().max(y_new[j].norm());
        sum += e.norm_sqr() / (scale * scale);
    }
    let err = (sum / 3.0).sqrt();

    let mut cont = [[Complex64::new(0.0, 0.0); 3]; 5];
    for j in 0..3 {
        let dy = y_new[j] - y[j];
        let bspl = k1[j] * h - dy;
        cont[0][j] = y[j];
        cont[1][j] = dy;
        cont[2][j] = bspl;
        cont[3][j] = dy - k7[j] * h - bspl;
        cont[4][j] =
            (k1[j] * D1 + k3[j] * D3 + k4[j] * D4 + k5[j] * D5 + k6[j] * D6 + k7[j] * D7) * h;
    }
    Step {
        y: y_new,
        f: k7,
        err,
        cont,
    }
}

fn dense(cont: &[State; 5], theta: f64) -> State {
    let th1 = 1.0 - theta;
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for j in 0..3 {
        out[j] = cont[0][j]
            + (cont[1][j] + (cont[2][j] + (cont[3][j] + cont[4][j] * th1) * theta) * th1) * theta;
    }
    out
}

/// What the observer wants after an accepted step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

pub const MAX_STEPS: usize = 50_000_000;

/// Adaptive integration of `y' = f(t, y)` from `t0` to `t_end`.
///
/// `sample_times` (ascending, within `[t0, t_end]`) are filled by dense
/// output and passed to `on_sample`. After every accepted step
/// `on_step(t, y)` may stop the integration; samples beyond that step are
/// not produced. Returns the final time and state.
#[allow(clippy::too_many_arguments)]
pub fn integrate<F, S, O>(
    f: F,
    t0: f64,
    y0: State,
    t_end: f64,
    sample_times: &[f64],
    tol: &Tolerances,
    mut on_sample: S,
    mut on_step: O,
) -> Result<(f64, State, IntegrationStats)>
where
    F: Fn(f64, &State) -> State,
    S: FnMut(f64, &State),
    O: FnMut(f64, &State) -> Control,
{
    let mut stats = IntegrationStats {
        accepted: 0,
        rejected: 0,
        evaluations: 1,
    };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut next_sample = 0;
    while next_sample < sample_times.len() && sample_times[next_sample] <= t0 {
        on_sample(sample_times[next_sample], &y);
        next_sample += 1;
    }
    if t_end <= t0 {
        return Ok((t, y, stats));
    }

    let span = t_end - t0;
    let norm_y = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let norm_f = k1.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut h = if norm_f > 0.0 {
        (0.01 * (norm_y.max(tol.atol) / norm_f)).min(span)
    } else {
        1e-3 * span
    }
    .max(1e-12 * span);
    let h_min = 1e-14 * (1.0 + t_end.abs());

    while t < t_end {
        if stats.accepted + stats.rejected > MAX_STEPS {
            return Err(TrimerError::StepUnderflow { t });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let step = dopri_step(&f, t, &y, &k1, h, tol);
        stats.evaluations += 6;
        if !step.err.is_finite()
            || step
                .y
                .iter()
                .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            stats.rejected += 1;
            h *= 0.2;
            if h < h_min {
                return Err(TrimerError::StepUnderflow { t });
            }
            continue;
        }
        if step.err <= 1.0 {
            let t_new = if last { t_end } else { t + h };
            while next_sample < sample_times.len() && sample_times[next_sample] <= t_new {
                let theta = (sample_times[next_sample] - t) / h;
                on_sample(
                    sample_times[next_sample],
                    &dense(&step.cont, theta.clamp(0.0, 1.0)),
                );
                next_sample += 1;
            }
            t = t_new;
            y = step.y;
            k1 = step.f;
            stats.accepted += 1;
            if on_step(t, &y) == Control::Stop {
                break;
            }
            let fac = if step.err == 0.0 {
                5.0
            } else {
                (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= fac;
        } else {
            stats.rejected += 1;
            h *= (0.9 * step.err.powf(-0.2)).clamp(0.1, 0.9);
            if h < h_min {
                return Err(TrimerError::StepUnderflow { t });
            }
        }
    }
    Ok((t, y, stats))
}

/// `n` equal fifth-order steps without error control.
pub fn integrate_fixed<F>(f: F, t0: f64, y0: State, t_end: f64, n: usize) -> State
where
    F: Fn(f64, &State) -> State,
{
    let h = (t_end - t0) / n as f64;
    let tol = Tolerances::default();
    let mut y = y0;
    let mut t = t0;
    for _ in 0..n {
        let k1 = f(t, &y);
        y = dopri_step(&f, t, &y, &k1, h, &tol).y;
        t += h;
    }
    y
}
