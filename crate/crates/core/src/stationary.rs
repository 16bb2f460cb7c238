//! Regular (real propagation constant) stationary states.
//!
//! With `phi_b = 0` every regular state has equal side amplitudes `A = C`
//! and `phi_c = -phi_a`. The squared side amplitude `x = A^2` is a root of
//!
//! ```text
//! x [g^2 + (E - x)^2]^2 - k^2 E [g^2 + (E - x)^2] - 2 k^4 x + 2 k^4 E = 0,
//! ```
//!
//! the central amplitude follows from `B^2 = (E +- sqrt(E^2 - 8 x (E - x))) / 2`
//! and the phases from `sin(phi_a) = g A / (k B)`, `cos(phi_a) = (E A - A^3) / (k B)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Result, TrimerError};
use crate::linalg::{fd_jacobian, solve_real};
use crate::model::{
    residual_norm, stationary_residual, PolarState, PropagationConstant, TrimerParams, RESIDUAL_TOL,
};
use crate::poly::{Polynomial, RealRoot};

/// Phase relations must satisfy `sin^2 + cos^2 = 1` to this tolerance.
pub const PHASE_CONSISTENCY_TOL: f64 = 1e-8;
/// Every returned stationary point has a residual below this.
pub const STATIONARY_TOL: f64 = 1e-10;
/// Below this `B^2` the state is within rounding of a decoupled `b = 0`
/// state and is checked by its residual alone.
const NEAR_DECOUPLED_B2: f64 = 1e-10;
/// Roots in `[-NEG_ROOT_TOL, 0)` are clamped to zero.
const NEG_ROOT_TOL: f64 = 1e-12;

/// Monic quintic in `x = A^2`, ascending coefficients `c0..c5`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuinticCoefficients {
    pub c: [f64; 6],
}

impl QuinticCoefficients {
    pub fn polynomial(&self) -> Polynomial {
        Polynomial::new(self.c.to_vec())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.polynomial().eval(x)
    }
}

/// Exact expansion of the amplitude polynomial.
pub fn quintic_coefficients(params: &TrimerParams) -> QuinticCoefficients {
    let (e, k, g) = (params.e(), params.k(), params.gamma());
    let k2 = k * k;
    let k4 = k2 * k2;
    // S(x) = x^2 - 2 E x + E^2 + g^2
    let s = Polynomial::new(vec![e * e + g * g, -2.0 * e, 1.0]);
    let x = Polynomial::monomial(1);
    let p = x
        .mul(&s)
        .mul(&s)
        .add(&s.scale(-k2 * e))
        .add(&x.scale(-2.0 * k4))
        .add(&Polynomial::constant(2.0 * k4 * e));
    let mut c = [0.0; 6];
    c.copy_from_slice(p.coeffs());
    QuinticCoefficients { c }
}

/// Direct evaluation of the unexpanded amplitude polynomial.
pub fn quintic_unexpanded(x: f64, params: &TrimerParams) -> f64 {
    let (e, k, g) = (params.e(), params.k(), params.gamma());
    let s = g * g + (e - x) * (e - x);
    x * s * s - k * k * e * s - 2.0 * k.powi(4) * x + 2.0 * k.powi(4) * e
}

/// A nonnegative root of the quintic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuinticRoot {
    pub x: f64,
    /// `p'(x)`, the local conditioning of the root.
    pub derivative: f64,
    /// Another root within `1e-6`: the parameters sit next to a fold.
    pub fold_proximity: bool,
}

/// All real roots with `x >= 0` (roots within `1e-12` below zero are
/// clamped), ascending.
pub fn real_nonneg_roots(q: &QuinticCoefficients) -> Vec<QuinticRoot> {
    let p = q.polynomial();
    let bound = p.cauchy_bound();
    p.real_roots_in(-NEG_ROOT_TOL, bound)
        .into_iter()
        .map(
            |RealRoot {
                 x,
                 derivative,
                 near_double,
             }| QuinticRoot {
                x: x.max(0.0),
                derivative,
                fold_proximity: near_double,
            },
        )
        .collect()
}

/// The nonnegative real candidates for `B^2`; empty when the discriminant
/// is negative.
pub fn central_amplitude(x: f64, params: &TrimerParams) -> Vec<f64> {
    let e = params.e();
    let disc = e * e - 8.0 * x * (e - x);
    if disc < 0.0 {
        return Vec::new();
    }
    let r = disc.sqrt();
    let mut out: Vec<f64> = [(e + r) / 2.0, (e - r) / 2.0]
        .into_iter()
        .filter(|y| *y >= 0.0)
        .collect();
    out.dedup();
    out
}

/// `(phi_a, phi_c)` for side amplitude `a` and central amplitude `b`, with
/// `phi_b = 0` and `phi_c = -phi_a`.
pub fn reconstruct_phases(a: f64, b: f64, params: &TrimerParams) -> Result<(f64, f64)> {
    if b == 0.0 {
        return Err(TrimerError::PhaseUndetermined);
    }
    let (e, k, g) = (params.e(), params.k(), params.gamma());
    let sin_a = g * a / (k * b);
    let cos_a = (e * a - a * a * a) / (k * b);
    let norm = sin_a * sin_a + cos_a * cos_a;
    if (norm - 1.0).abs() > PHASE_CONSISTENCY_TOL {
        return Err(TrimerError::InconsistentPhases { norm });
    }
    let phi_a = sin_a.atan2(cos_a);
    Ok((phi_a, -phi_a))
}

/// A regular stationary state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryPoint {
    pub polar: PolarState,
    pub propagation: PropagationConstant,
    pub params: TrimerParams,
    /// `x = A^2`.
    pub x: f64,
    pub residual: f64,
    pub fold_proximity: bool,
}

impl StationaryPoint {
    pub fn gamma(&self) -> f64 {
        self.params.gamma()
    }

    pub fn amplitudes(&self) -> [f64; 3] {
        self.polar.amplitudes()
    }
}

/// Builds the stationary state belonging to the quintic root `x`.
///
/// Both signs of the central-amplitude relation are tried; the one whose
/// phase relations satisfy `sin^2 + cos^2 = 1` is kept. The modulus is then
/// taken from the equivalent identity `k^2 B^2 = x (g^2 + (E - x)^2)`, which
/// is well conditioned where the discriminant is small.
pub fn stationary_from_root(x: f64, params: &TrimerParams) -> Result<StationaryPoint> {
    let (e, k, g) = (params.e(), params.k(), params.gamma());
    let epc = PropagationConstant::real(e);
    let a = x.max(0.0).sqrt();
    let finish = |polar: PolarState| {
        let polar = polish_symmetric(polar, &epc, params);
        let residual = residual_norm(&stationary_residual(&polar, &epc, params));
        Ok(StationaryPoint {
            polar,
            propagation: epc,
            params: *params,
            x,
            residual,
            fold_proximity: false,
        })
    };
    if a == 0.0 {
        return finish(PolarState::new([0.0; 3], [0.0; 3])?);
    }
    let modulus_b2 = x * (g * g + (e - x) * (e - x)) / (k * k);
    if modulus_b2 == 0.0 || (g == 0.0 && modulus_b2 < NEAR_DECOUPLED_B2) {
        // b = 0 forces g = 0, E = A^2 and c = -a
        return finish(PolarState::new([a, 0.0, a], [0.0, 0.0, PI])?);
    }
    let from_modulus = |b: f64| {
        let phi_a = (g * a / (k * b)).atan2((e * a - a * a * a) / (k * b));
        PolarState::new([a, b, a], [phi_a, 0.0, -phi_a])
    };
    let mut last_err = TrimerError::InconsistentPhases { norm: f64::NAN };
    for b2 in central_amplitude(x, params) {
        if b2 <= 0.0 {
            continue;
        }
        match reconstruct_phases(a, b2.sqrt(), params) {
            Ok(_) => return finish(from_modulus(modulus_b2.sqrt())?),
            Err(err) => last_err = err,
        }
    }
    // Every positive root satisfies the central-amplitude relation with
    // B^2 = x S / k^2 exactly, so a failed check here is loss of precision
    // (a near-double discriminant, or tiny B and E - x); the residual decides.
    let point = finish(from_modulus(modulus_b2.sqrt())?)?;
    if point.residual <= STATIONARY_TOL {
        Ok(point)
    } else {
        Err(last_err)
    }
}

/// Newton on `(A, B, phi_a)` against the stationary equations of the
/// symmetric ansatz `(A e^{i phi_a}, B, A e^{-i phi_a})`, for states whose
/// reconstruction from `x` lost precision (small `B`). Keeps the input
/// unless the residual drops.
fn polish_symmetric(
    polar: PolarState,
    epc: &PropagationConstant,
    params: &TrimerParams,
) -> PolarState {
    let norm = |p: &PolarState| residual_norm(&stationary_residual(p, epc, params));
    let mut best = (norm(&polar), polar);
    if best.0 <= RESIDUAL_TOL || polar.phase_undetermined {
        return polar;
    }
    let build = |v: &[f64]| PolarState::new([v[0], v[1], v[0]], [v[2], 0.0, -v[2]]);
    let f = |v: &[f64]| -> Result<Vec<f64>> {
        // r_c = conj(r_a) and r_b is real on this ansatz
        let r = stationary_residual(&build(v)?, epc, params);
        Ok(vec![r[0], r[3], r[1]])
    };
    let [a, b, _] = polar.amplitudes();
    let mut v = vec![a, b, polar.phases()[0]];
    for _ in 0..4 {
        let Ok(jac) = fd_jacobian(f, &v, 1e-8) else {
            break;
        };
        let Ok(r) = f(&v) else { break };
        let Some(dv) = solve_real(&jac, &r) else {
            break;
        };
        for (vi, d) in v.iter_mut().zip(&dv) {
            *vi -= d;
        }
        let Ok(candidate) = build(&v) else { break };
        let n = norm(&candidate);
        if n < best.0 {
            best = (n, candidate);
        }
        if best.0 <= RESIDUAL_TOL {
            break;
        }
    }
    best.1
}

/// Every regular stationary state at `params`, ordered by `x`.
pub fn solve_all_stationary(params: &TrimerParams) -> Vec<StationaryPoint> {
    let roots = real_nonneg_roots(&quintic_coefficients(params));
    let mut out: Vec<StationaryPoint> = Vec::with_capacity(roots.len());
    for root in roots {
        let Ok(mut point) = stationary_from_root(root.x, params) else {
            continue;
        };
        if point.residual > STATIONARY_TOL {
            continue;
        }
        point.fold_proximity = root.fold_proximity;
        let duplicate = out.iter().any(|p| {
            let (pa, qa) = (p.polar.amplitudes(), point.polar.amplitudes());
            (pa[0] - qa[0]).abs() < 1e-8
                && (pa[1] - qa[1]).abs() < 1e-8
                && (p.polar.phases()[0] - point.polar.phases()[0]).abs() < 1e-8
        });
        if !duplicate {
            out.push(point);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn params(e: f64, k: f64, g: f64) -> TrimerParams {
        TrimerParams::new(e, k, g).unwrap()
    }

    #[test]
    fn quintic_is_monic() {
        let q = quintic_coefficients(&params(0.7, 0.3, 0.2));
        assert_eq!(q.c[5], 1.0);
    }

    #[test]
    fn x_equals_e_at_zero_gain() {
        for &(e, k) in &[(0.5, 0.1), (1.0, 1.0), (2.0, 0.3)] {
            let q = quintic_coefficients(&params(e, k, 0.0));
            assert!(q.eval(e).abs() < 1e-12);
            assert!(real_nonneg_roots(&q).iter().any(|r| (r.x - e).abs() < 1e-9));
        }
    }

    #[test]
    fn x_equals_e_when_gain_matches_coupling() {
        // value is E g^2 (g^2 - k^2), zero for g = k
        let q = quintic_coefficients(&params(0.8, 0.6, 0.6));
        assert!(q.eval(0.8).abs() < 1e-14);
        let p = params(0.8, 0.6, 0.3);
        let q = quintic_coefficients(&p);
        assert!((q.eval(0.8) - 0.8 * 0.09 * (0.09 - 0.36)).abs() < 1e-14);
    }

    #[test]
    fn expanded_matches_unexpanded() {
        let p = params(0.5, 0.1, 0.05);
        let q = quintic_coefficients(&p);
        assert!((q.eval(0.3) - quintic_unexpanded(0.3, &p)).abs() < 1e-14);
    }

    #[test]
    fn central_amplitude_edge_values() {
        let p = params(0.9, 0.4, 0.2);
        let mut at_e = central_amplitude(0.9, &p);
        at_e.sort_by(f64::total_cmp);
        assert_eq!(at_e, vec![0.0, 0.9]);
        let mut at_0 = central_amplitude(0.0, &p);
        at_0.sort_by(f64::total_cmp);
        assert_eq!(at_0, vec![0.0, 0.9]);
        // discriminant E^2 - 8 x (E - x) < 0 at x = E/2 for E = 0.9
        assert!(central_amplitude(0.45, &p).is_empty());
    }

    #[test]
    fn phases_at_gain_equal_coupling() {
        let p = params(1.0, 1.0, 1.0);
        let (pa, pc) = reconstruct_phases(1.0, 1.0, &p).unwrap();
        assert!((pa - FRAC_PI_2).abs() < 1e-15);
        assert!((pc + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn phases_are_real_at_zero_gain() {
        let p = params(1.0, 1.0, 0.0);
        for s in solve_all_stationary(&p) {
            let pa = s.polar.phases()[0];
            assert!(pa.abs() < 1e-12 || (pa.abs() - PI).abs() < 1e-12, "{pa}");
        }
    }

    #[test]
    fn phase_errors() {
        let p = params(1.0, 1.0, 0.5);
        assert_eq!(
            reconstruct_phases(0.5, 0.0, &p),
            Err(TrimerError::PhaseUndetermined)
        );
        assert!(matches!(
            reconstruct_phases(0.5, 0.1, &p),
            Err(TrimerError::InconsistentPhases { .. })
        ));
    }

    #[test]
    fn weak_coupling_census() {
        assert_eq!(
            real_nonneg_roots(&quintic_coefficients(&params(0.5, 0.1, 0.01))).len(),
            5
        );
        assert_eq!(solve_all_stationary(&params(0.5, 0.1, 0.005)).len(), 5);
        assert_eq!(solve_all_stationary(&params(0.5, 0.1, 0.05)).len(), 3);
        assert_eq!(solve_all_stationary(&params(0.5, 0.1, 0.12)).len(), 1);
    }

    #[test]
    fn unit_coupling_census() {
        assert_eq!(solve_all_stationary(&params(1.0, 1.0, 0.5)).len(), 2);
        assert_eq!(solve_all_stationary(&params(1.0, 1.0, 1.02)).len(), 3);
        assert_eq!(solve_all_stationary(&params(1.0, 1.0, 1.2)).len(), 1);
        assert_eq!(solve_all_stationary(&params(1.0, 1.0, 1.5)).len(), 1);
    }

    #[test]
    fn every_candidate_pipeline_is_consistent() {
        let p = params(0.5, 0.1, 0.05);
        for root in real_nonneg_roots(&quintic_coefficients(&p)) {
            let a = root.x.sqrt();
            let ok = central_amplitude(root.x, &p)
                .into_iter()
                .filter(|b2| *b2 > 0.0)
                .any(|b2| reconstruct_phases(a, b2.sqrt(), &p).is_ok());
            assert!(ok, "root {} has no consistent central amplitude", root.x);
        }
    }

    #[test]
    fn zero_gain_decoupled_state() {
        let p = params(1.0, 1.0, 0.0);
        let s = stationary_from_root(1.0, &p).unwrap();
        assert!(s.polar.phase_undetermined);
        assert!(s.residual < 1e-14);
        assert_eq!(s.amplitudes()[1], 0.0);
    }

    #[test]
    fn zero_root_gives_zero_state() {
        // x = 0 is a root at gamma^2 = 2 k^2 - E^2
        let p = params(1.0, 1.0, 1.0);
        assert!(quintic_coefficients(&p).eval(0.0).abs() < 1e-15);
        let s = stationary_from_root(0.0, &p).unwrap();
        assert_eq!(s.polar.total_power(), 0.0);
    }
}
