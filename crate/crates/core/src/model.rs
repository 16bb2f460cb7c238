//! The trimer model: parameters, state types, the vector field, the
//! stationary residual and conserved-quantity diagnostics.
//!
//! Site 1 carries loss `-gamma`, site 2 is neutral and site 3 carries gain
//! `+gamma`:
//!
//! ```text
//! i du1/dt = -k u2        - |u1|^2 u1 - i gamma u1
//! i du2/dt = -k (u1 + u3) - |u2|^2 u2
//! i du3/dt = -k u2        - |u3|^2 u3 + i gamma u3
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Result, TrimerError};

/// Default absolute per-component tolerance of the stationary residual.
pub const RESIDUAL_TOL: f64 = 1e-12;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Problem instance `(E, k, gamma)`.
///
/// `gamma` is stored nonnegative; the mirror image of a solution answers
/// questions about negative gain/loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrimerParams {
    e: f64,
    k: f64,
    gamma: f64,
}

impl TrimerParams {
    pub fn new(e: f64, k: f64, gamma: f64) -> Result<Self> {
        if !e.is_finite() {
            return Err(TrimerError::InvalidParameter(format!(
                "E = {e} is not finite"
            )));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(TrimerError::InvalidParameter(format!(
                "k = {k} must be positive"
            )));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(TrimerError::InvalidParameter(format!(
                "gamma = {gamma} must be nonnegative"
            )));
        }
        Ok(Self { e, k, gamma })
    }

    pub fn e(&self) -> f64 {
        self.e
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.e, self.k, gamma)
    }

    pub fn with_e(&self, e: f64) -> Result<Self> {
        Self::new(e, self.k, self.gamma)
    }
}

/// Complex site amplitudes `(a, b, c)` (or `(u1, u2, u3)` in dynamics).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrimerState {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
}

impl TrimerState {
    pub const ZERO: Self = Self {
        a: Complex64::new(0.0, 0.0),
        b: Complex64::new(0.0, 0.0),
        c: Complex64::new(0.0, 0.0),
    };

    pub fn new(a: Complex64, b: Complex64, c: Complex64) -> Self {
        Self { a, b, c }
    }

    pub fn from_array(u: [Complex64; 3]) -> Self {
        Self::new(u[0], u[1], u[2])
    }

    pub fn to_array(self) -> [Complex64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(self, s: Complex64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s)
    }

    pub fn moduli(&self) -> [f64; 3] {
        [self.a.norm(), self.b.norm(), self.c.norm()]
    }

    /// Max-norm distance.
    pub fn distance(&self, other: &Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(phi: f64) -> f64 {
    let mut p = phi % (2.0 * PI);
    if p <= -PI {
        p += 2.0 * PI;
    } else if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Polar form with the gauge fixed to `phi_b = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    amp: [f64; 3],
    phase_a: f64,
    phase_c: f64,
    /// The central amplitude vanishes, so the phase relations cannot fix
    /// `phi_a`, `phi_c`; the reported values are one valid representative.
    pub phase_undetermined: bool,
}

impl PolarState {
    /// Builds a polar state; the global phase is removed so that `phi_b = 0`.
    pub fn new(amps: [f64; 3], phases: [f64; 3]) -> Result<Self> {
        if amps.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(TrimerError::InvalidParameter(format!(
                "amplitudes {amps:?} must be finite and nonnegative"
            )));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(TrimerError::NonFinite);
        }
        Ok(Self {
            amp: amps,
            phase_a: normalize_angle(phases[0] - phases[1]),
            phase_c: normalize_angle(phases[2] - phases[1]),
            phase_undetermined: amps[1] == 0.0,
        })
    }

    pub fn from_state(state: &TrimerState) -> Self {
        let [a, b, c] = state.to_array();
        let gauge = if b.norm() > 0.0 { b.arg() } else { 0.0 };
        Self {
            amp: [a.norm(), b.norm(), c.norm()],
            phase_a: normalize_angle(a.arg() - gauge),
            phase_c: normalize_angle(c.arg() - gauge),
            phase_undetermined: b.norm() == 0.0,
        }
    }

    pub fn amplitudes(&self) -> [f64; 3] {
        self.amp
    }

    /// `(phi_a, phi_b, phi_c)` with `phi_b = 0`.
    pub fn phases(&self) -> [f64; 3] {
        [self.phase_a, 0.0, self.phase_c]
    }

    pub fn to_state(&self) -> TrimerState {
        TrimerState::new(
            Complex64::from_polar(self.amp[0], self.phase_a),
            Complex64::new(self.amp[1], 0.0),
            Complex64::from_polar(self.amp[2], self.phase_c),
        )
    }

    pub fn total_power(&self) -> f64 {
        self.amp.iter().map(|a| a * a).sum()
    }
}

/// Propagation constant `E = E_hat exp(i phi_e)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationConstant {
    pub e_hat: f64,
    pub phi_e: f64,
}

impl PropagationConstant {
    /// A real propagation constant. Negative values are stored with `phi_e = pi`.
    pub fn real(e: f64) -> Self {
        if e >= 0.0 {
            Self {
                e_hat: e,
                phi_e: 0.0,
            }
        } else {
            Self {
                e_hat: -e,
                phi_e: PI,
            }
        }
    }

    pub fn from_polar(e_hat: f64, phi_e: f64) -> Self {
        Self {
            e_hat,
            phi_e: normalize_angle(phi_e),
        }
    }

    pub fn value(&self) -> Complex64 {
        if self.phi_e == 0.0 {
            Complex64::new(self.e_hat, 0.0)
        } else if self.phi_e == PI {
            Complex64::new(-self.e_hat, 0.0)
        } else {
            Complex64::from_polar(self.e_hat, self.phi_e)
        }
    }

    /// `E_i = E_hat sin(phi_e)`; `-2 E_i` is the power growth rate of the
    /// stationary ansatz.
    pub fn imag(&self) -> f64 {
        self.e_hat * self.phi_e.sin()
    }

    pub fn conj(&self) -> Self {
        Self::from_polar(self.e_hat, -self.phi_e)
    }

    pub fn is_real(&self) -> bool {
        self.phi_e == 0.0 || self.phi_e == PI
    }
}

/// Time derivative of the state under the trimer dynamics.
pub fn vector_field(state: &TrimerState, params: &TrimerParams) -> TrimerState {
    vector_field_raw(&state.to_array(), params.k, params.gamma).into()
}

pub(crate) fn vector_field_raw(u: &[Complex64; 3], k: f64, gamma: f64) -> [Complex64; 3] {
    let [a, b, c] = *u;
    [
        I * (k * b + a.norm_sqr() * a) - gamma * a,
        I * (k * (a + c) + b.norm_sqr() * b),
        I * (k * b + c.norm_sqr() * c) + gamma * c,
    ]
}

impl From<[Complex64; 3]> for TrimerState {
    fn from(u: [Complex64; 3]) -> Self {
        Self::from_array(u)
    }
}

/// Complex residuals of the stationary equations
/// `E a = k b + |a|^2 a + i gamma a`, `E b = k (a + c) + |b|^2 b`,
/// `E c = k b + |c|^2 c - i gamma c`.
pub fn stationary_residual_complex(
    state: &TrimerState,
    e: Complex64,
    params: &TrimerParams,
) -> [Complex64; 3] {
    let (k, g) = (params.k, params.gamma);
    let [a, b, c] = state.to_array();
    [
        e * a - k * b - a.norm_sqr() * a - I * g * a,
        e * b - k * (a + c) - b.norm_sqr() * b,
        e * c - k * b - c.norm_sqr() * c + I * g * c,
    ]
}

/// Real and imaginary parts of the three stationary residuals.
pub fn stationary_residual(
    polar: &PolarState,
    epc: &PropagationConstant,
    params: &TrimerParams,
) -> [f64; 6] {
    let r = stationary_residual_complex(&polar.to_state(), epc.value(), params);
    [r[0].re, r[1].re, r[2].re, r[0].im, r[1].im, r[2].im]
}

pub fn residual_norm(r: &[f64; 6]) -> f64 {
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `sum |u_j|^2`.
pub fn total_power(state: &TrimerState) -> f64 {
    state.to_array().iter().map(|z| z.norm_sqr()).sum()
}

/// `-k (conj(u1) u2 + u1 conj(u2) + conj(u2) u3 + u2 conj(u3)) - 1/2 sum |u_j|^4`.
pub fn hamiltonian(state: &TrimerState, k: f64) -> f64 {
    let [a, b, c] = state.to_array();
    let hop = (a.conj() * b + a * b.conj() + b.conj() * c + b * c.conj()).re;
    let quartic: f64 = [a, b, c].iter().map(|z| z.norm_sqr().powi(2)).sum();
    -k * hop - 0.5 * quartic
}

/// Parity-time mirror: `(a, b, c, E) -> (conj c, conj b, conj a, conj E)`,
/// which maps solutions at `gamma` to solutions at the same `gamma`.
pub fn mirror_map(
    polar: &PolarState,
    epc: &PropagationConstant,
) -> (PolarState, PropagationConstant) {
    let [a_amp, b_amp, c_amp] = polar.amplitudes();
    let [pa, _, pc] = polar.phases();
    let image = PolarState {
        amp: [c_amp, b_amp, a_amp],
        phase_a: normalize_angle(-pc),
        phase_c: normalize_angle(-pa),
        phase_undetermined: polar.phase_undetermined,
    };
    (image, epc.conj())
}
