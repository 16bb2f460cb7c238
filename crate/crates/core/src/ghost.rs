//! Ghost states: stationary solutions with a complex propagation constant
//! `E = E_hat exp(i phi_e)` and unequal side amplitudes.
//!
//! With `phi_b = 0`, eliminating `Re E` and `Im E` from the stationary
//! equations gives every phase as a ratio of polynomials in `(A, B, C)`.
//! The three identities `sin^2 + cos^2 = 1` then form a closed square
//! system in the amplitudes, solved here by Newton's method.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TrimerError};
use crate::linalg::{fd_jacobian, solve_real};
use crate::model::{
    residual_norm, stationary_residual, PolarState, PropagationConstant, TrimerParams,
};

/// Denominators below this make the trigonometric relations singular.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Newton stops once every consistency component is below this.
pub const GHOST_NEWTON_TOL: f64 = 1e-12;
pub const GHOST_MAX_ITER: usize = 50;
/// `|A - C|` below this is a regular (symmetric) point.
pub const SYMMETRY_TOL: f64 = 1e-8;

const FD_STEP: f64 = 1e-7;

/// `(sin, cos)` of `phi_a`, `phi_c` and `phi_e`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhostTrig {
    pub sin_a: f64,
    pub cos_a: f64,
    pub sin_c: f64,
    pub cos_c: f64,
    pub sin_e: f64,
    pub cos_e: f64,
}

impl GhostTrig {
    pub fn phi_a(&self) -> f64 {
        self.sin_a.atan2(self.cos_a)
    }

    pub fn phi_c(&self) -> f64 {
        self.sin_c.atan2(self.cos_c)
    }

    pub fn phi_e(&self) -> f64 {
        self.sin_e.atan2(self.cos_e)
    }
}

fn checked(which: &'static str, value: f64) -> Result<f64> {
    if value.abs() < SINGULAR_TOL {
        Err(TrimerError::SingularConfiguration { which, value })
    } else {
        Ok(value)
    }
}

/// The phase relations of a stationary state with complex propagation
/// constant of modulus `e_hat`. Only `k` and `gamma` of `params` are used.
pub fn ghost_trig(amps: [f64; 3], params: &TrimerParams, e_hat: f64) -> Result<GhostTrig> {
    let [a, b, c] = amps;
    let (k, g) = (params.k(), params.gamma());
    let (a2, b2, c2) = (a * a, b * b, c * c);
    let total = a2 + b2 + c2;
    let d_plus = checked("B (A^2 + B^2 + C^2) k", b * total * k)?;
    let d_minus = checked("B (-A^2 + B^2 - C^2) k", b * (-a2 + b2 - c2) * k)?;
    let d_sin_e = checked("(A^2 + B^2 + C^2) E_hat", total * e_hat)?;
    let d_cos_e = checked("(A^2 - B^2 + C^2) E_hat", (a2 - b2 + c2) * e_hat)?;
    Ok(GhostTrig {
        sin_a: a * (b2 + 2.0 * c2) * g / d_plus,
        cos_a: a * (b - c) * (b + c) * (-a2 + b2 + c2) / d_minus,
        sin_c: -(2.0 * a2 + b2) * c * g / d_plus,
        cos_c: (-a2 + b2) * c * (a2 + b2 - c2) / d_minus,
        sin_e: (a - c) * (a + c) * g / d_sin_e,
        cos_e: (a2 * a2 - b2 * b2 + c2 * c2) / d_cos_e,
    })
}

/// `sin^2 + cos^2 - 1` for `phi_a`, `phi_c`, `phi_e`.
pub fn consistency_residual(amps: [f64; 3], params: &TrimerParams, e_hat: f64) -> Result<[f64; 3]> {
    let t = ghost_trig(amps, params, e_hat)?;
    Ok([
        t.sin_a * t.sin_a + t.cos_a * t.cos_a - 1.0,
        t.sin_c * t.sin_c + t.cos_c * t.cos_c - 1.0,
        t.sin_e * t.sin_e + t.cos_e * t.cos_e - 1.0,
    ])
}

/// A converged ghost (or, if `A = C`, regular) stationary state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhostPoint {
    pub polar: PolarState,
    pub propagation: PropagationConstant,
    pub params: TrimerParams,
    /// Largest `|sin^2 + cos^2 - 1|`.
    pub consistency: f64,
    /// Largest component of the full complex stationary residual.
    pub residual: f64,
}

impl GhostPoint {
    /// Assembles the point from amplitudes that satisfy the consistency
    /// system; phases come from two-argument arctangents.
    pub fn from_amplitudes(amps: [f64; 3], params: &TrimerParams, e_hat: f64) -> Result<Self> {
        let trig = ghost_trig(amps, params, e_hat)?;
        let consistency = consistency_residual(amps, params, e_hat)?
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let polar = PolarState::new(amps, [trig.phi_a(), 0.0, trig.phi_c()])?;
        let propagation = PropagationConstant::from_polar(e_hat, trig.phi_e());
        let residual = residual_norm(&stationary_residual(&polar, &propagation, params));
        Ok(Self {
            polar,
            propagation,
            params: *params,
            consistency,
            residual,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma()
    }

    pub fn amplitudes(&self) -> [f64; 3] {
        self.polar.amplitudes()
    }

    pub fn asymmetry(&self) -> f64 {
        let [a, _, c] = self.amplitudes();
        a - c
    }

    /// `E_i = E_hat sin(phi_e)`.
    pub fn e_imag(&self) -> f64 {
        self.propagation.imag()
    }

    /// Power growth rate `-2 E_i` of the stationary ansatz.
    pub fn predicted_power_slope(&self) -> f64 {
        -2.0 * self.e_imag()
    }

    /// The parity-time image, rebuilt from swapped amplitudes.
    pub fn mirror(&self) -> Result<Self> {
        let [a, b, c] = self.amplitudes();
        Self::from_amplitudes([c, b, a], &self.params, self.propagation.e_hat)
    }
}

/// Newton iteration on the consistency system in `(A, B, C)`, with a
/// central-difference Jacobian.
///
/// Fails with [`TrimerError::NoConvergence`] after [`GHOST_MAX_ITER`]
/// iterations and with [`TrimerError::SymmetricCollapse`] when the result
/// has `A = C`.
pub fn solve_ghost(params: &TrimerParams, e_hat: f64, seed: [f64; 3]) -> Result<GhostPoint> {
    let amps = newton_amplitudes(params, e_hat, seed)?;
    let asym = (amps[0] - amps[2]).abs();
    if asym < SYMMETRY_TOL {
        return Err(TrimerError::SymmetricCollapse { asymmetry: asym });
    }
    GhostPoint::from_amplitudes(amps, params, e_hat)
}

/// Converged amplitudes of the consistency system, symmetric or not.
pub fn newton_amplitudes(params: &TrimerParams, e_hat: f64, seed: [f64; 3]) -> Result<[f64; 3]> {
    let f = |x: &[f64]| -> Result<Vec<f64>> {
        Ok(consistency_residual([x[0], x[1], x[2]], params, e_hat)?.to_vec())
    };
    let mut x = seed.to_vec();
    let mut res = max_abs(&f(&x)?);
    for _ in 0..GHOST_MAX_ITER {
        if res <= GHOST_NEWTON_TOL {
            break;
        }
        let jac = fd_jacobian(f, &x, FD_STEP)?;
        let r = f(&x)?;
        let dx = solve_real(&jac, &r).ok_or(TrimerError::NoConvergence {
            iterations: GHOST_MAX_ITER,
            residual: res,
        })?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi -= d;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(TrimerError::NonFinite);
        }
        res = max_abs(&f(&x)?);
    }
    if res > GHOST_NEWTON_TOL {
        return Err(TrimerError::NoConvergence {
            iterations: GHOST_MAX_ITER,
            residual: res,
        });
    }
    // amplitudes enter squared up to overall signs; report moduli
    Ok([x[0].abs(), x[1].abs(), x[2].abs()])
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
