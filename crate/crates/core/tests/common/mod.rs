//! Test-side oracles, independent of the library's own algorithms.
#![allow(dead_code)]

use std::sync::OnceLock;

use trimer_core::continuation::{
    ghost_branches, regular_study, GhostStudy, RegularStudy, StudyOptions,
};
use trimer_core::dynamics::{integrate, IntegrationOptions};
use trimer_core::linalg::{eigenvector, ComplexMatrix};
use trimer_core::spectra::{build_linearization, rotating_frame_field};
use trimer_core::{Complex64, TrimerParams, TrimerState};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn weak_coupling_study() -> &'static RegularStudy {
    static S: OnceLock<RegularStudy> = OnceLock::new();
    S.get_or_init(|| regular_study(0.5, 0.1, 0.15, &StudyOptions::default()).unwrap())
}

pub fn unit_studies() -> &'static (RegularStudy, GhostStudy) {
    static S: OnceLock<(RegularStudy, GhostStudy)> = OnceLock::new();
    S.get_or_init(|| ghost_branches(1.0, 1.0, 2.0, &StudyOptions::default()).unwrap())
}

/// Coefficients `c_0..c_n` (monic, `c_n = 1`) of `det(zI - A)` by the
/// Faddeev-LeVerrier recursion.
pub fn characteristic_polynomial(a: &ComplexMatrix) -> Vec<Complex64> {
    let n = a.dim();
    let mut coeffs = vec![c(0.0, 0.0); n + 1];
    coeffs[n] = c(1.0, 0.0);
    let mut m = ComplexMatrix::zeros(n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = a.matmul(&m);
        for i in 0..n {
            next[(i, i)] += coeffs[n - k + 1];
        }
        m = next;
        let am = a.matmul(&m);
        coeffs[n - k] = -am.trace() / k as f64;
    }
    coeffs
}

fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = c(0.0, 0.0);
    let mut dp = c(0.0, 0.0);
    for &a in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// All roots of a monic polynomial by the Aberth-Ehrlich iteration.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let radius = 1.0 + coeffs[..n].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|j| {
            Complex64::from_polar(
                0.5 * radius,
                0.4 + 2.0 * std::f64::consts::PI * j as f64 / n as f64,
            )
        })
        .collect();
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let (p, dp) = horner(coeffs, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| 1.0 / (z[i] - z[j]))
                .sum();
            let w = ratio / (1.0 - ratio * repulsion);
            z[i] -= w;
            moved = moved.max(w.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-16 {
            break;
        }
    }
    z
}

/// The linearization rebuilt from central differences of the rotating
/// frame flow in the real coordinates, mapped to `(w, conj w)` form with
/// Wirtinger derivatives.
pub fn fd_linearization(
    state: &TrimerState,
    e: Complex64,
    params: &TrimerParams,
    h: f64,
) -> ComplexMatrix {
    let v = state.to_array();
    let f =
        |w: [Complex64; 3]| rotating_frame_field(&TrimerState::from_array(w), e, params).to_array();
    let mut m = ComplexMatrix::zeros(6);
    for j in 0..3 {
        let diff = |dir: Complex64| {
            let (mut wp, mut wm) = (v, v);
            wp[j] += dir * h;
            wm[j] -= dir * h;
            let (fp, fm) = (f(wp), f(wm));
            [0, 1, 2].map(|i| (fp[i] - fm[i]) / (2.0 * h))
        };
        let dx = diff(c(1.0, 0.0));
        let dy = diff(c(0.0, 1.0));
        for i in 0..3 {
            let d_w = 0.5 * (dx[i] - c(0.0, 1.0) * dy[i]);
            let d_wbar = 0.5 * (dx[i] + c(0.0, 1.0) * dy[i]);
            m[(i, j)] = d_w;
            m[(i, j + 3)] = d_wbar;
            m[(i + 3, j)] = d_wbar.conj();
            m[(i + 3, j + 3)] = d_w.conj();
        }
    }
    m
}

/// Growth rate of `|u(t) - v exp(iEt)|` when the full dynamics start from
/// `v` displaced by `eps` along the eigenvector of `lambda`.
///
/// For complex `lambda` the distance carries a factor periodic with period
/// `pi / Im lambda`, so it is compared at two times an integer number of
/// such periods apart, ending at `t_end`.
pub fn flow_growth_rate(
    state: &TrimerState,
    e: f64,
    params: &TrimerParams,
    lambda: Complex64,
    eps: f64,
    t_end: f64,
) -> f64 {
    let m = build_linearization(state, c(e, 0.0), params);
    let vec = eigenvector(&m, lambda).unwrap();
    let v = state.to_array();
    let u0 = [0, 1, 2].map(|j| v[j] + (vec[j] + vec[j + 3].conj()) * eps);
    let omega = lambda.im.abs();
    let t_start = if omega > 1e-6 {
        let period = std::f64::consts::PI / omega;
        let n = ((0.5 * t_end) / period).floor().max(1.0);
        t_end - n * period
    } else {
        0.5 * t_end
    };
    assert!(t_start > 0.0, "window too short for one period");
    let traj = integrate(
        &TrimerState::from_array(u0),
        params,
        t_end,
        &[t_start, t_end],
        &IntegrationOptions::default(),
    )
    .unwrap();
    let dist = |t: f64, s: &TrimerState| {
        let rot = c(0.0, e * t).exp();
        let u = s.to_array();
        (0..3)
            .map(|j| (u[j] - v[j] * rot).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let d0 = dist(traj.times[0], &traj.states[0]);
    let d1 = dist(traj.times[1], &traj.states[1]);
    (d1 / d0).ln() / (traj.times[1] - traj.times[0])
}
