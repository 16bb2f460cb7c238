//! Linear stability of stationary and ghost states.
//!
//! Perturbing `u = exp(iEt) (v + eps (p exp(lambda t) + conj(q) exp(conj(lambda) t)))`
//! gives the eigenproblem `lambda (p, q) = M (p, q)` with
//!
//! ```text
//! M = [ -i (E - kL - 2|v|^2 - iG)      i diag(v^2)                  ]
//!     [ -i diag(conj(v)^2)              i (conj(E) - kL - 2|v|^2 + iG) ]
//! ```
//!
//! where `L` is the trimer adjacency and `G = diag(gamma, 0, -gamma)`.
//! `M` is the Jacobian of the rotating-frame flow written in `(w, conj w)`
//! coordinates. Every stationary point (regular or ghost) has the gauge
//! null vector `(i v, -i conj(v))`; it is deflated exactly before the QR
//! iteration so that the zero eigenvalue does not pollute the others.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ghost::GhostPoint;
use crate::linalg::{eigenvalues, ComplexMatrix, Householder};
use crate::model::{TrimerParams, TrimerState};
use crate::stationary::StationaryPoint;

/// `max Re lambda` above this is an instability.
pub const UNSTABLE_TOL: f64 = 1e-8;
/// Eigenvalues with modulus below this count as zero modes.
pub const ZERO_EIG_TOL: f64 = 1e-7;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    /// `|max Re lambda| <= UNSTABLE_TOL`: the spectrum lies on the imaginary
    /// axis, as for every stable regular state (gauge mode included).
    Marginal,
    Unstable,
}

impl Stability {
    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Marginal => "marginal",
            Stability::Unstable => "unstable",
        }
    }
}

pub fn classify_max_real(max_real: f64) -> Stability {
    if max_real > UNSTABLE_TOL {
        Stability::Unstable
    } else if max_real >= -UNSTABLE_TOL {
        Stability::Marginal
    } else {
        Stability::Stable
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Sorted by descending real part, then descending imaginary part.
    pub eigenvalues: Vec<Complex64>,
    pub max_real_part: f64,
    pub classification: Stability,
}

impl Spectrum {
    pub fn from_eigenvalues(mut eigenvalues: Vec<Complex64>) -> Self {
        eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        let max_real_part = eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            classification: classify_max_real(max_real_part),
            eigenvalues,
            max_real_part,
        }
    }

    /// Spectrum of an arbitrary square matrix.
    pub fn of_matrix(m: &ComplexMatrix) -> Result<Self> {
        Ok(Self::from_eigenvalues(eigenvalues(m)?))
    }

    pub fn is_unstable(&self) -> bool {
        self.classification == Stability::Unstable
    }

    /// Not unstable: the sense in which regular states are called stable.
    pub fn is_spectrally_stable(&self) -> bool {
        !self.is_unstable()
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }

    pub fn zero_modes(&self) -> usize {
        self.eigenvalues
            .iter()
            .filter(|z| z.norm() < ZERO_EIG_TOL)
            .count()
    }

    /// Largest `|Re lambda|` mismatch between the spectrum and its
    /// reflection `lambda -> -conj(lambda)`.
    pub fn imaginary_axis_asymmetry(&self) -> f64 {
        let reflected: Vec<Complex64> = self.eigenvalues.iter().map(|z| -z.conj()).collect();
        multiset_distance(&self.eigenvalues, &reflected)
    }
}

/// Matching distance between two small multisets of complex numbers:
/// greedy nearest pairing, maximum pair distance.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for z in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap_or((0, f64::INFINITY));
        if j < used.len() {
            used[j] = true;
        }
        worst = worst.max(d);
    }
    worst
}

fn adjacency_times(k: f64, i: usize, j: usize) -> f64 {
    if (i as isize - j as isize).abs() == 1 {
        k
    } else {
        0.0
    }
}

fn site_gain(gamma: f64) -> [f64; 3] {
    [gamma, 0.0, -gamma]
}

/// The 6x6 linearization about `state` in the frame rotating with `e`.
pub fn build_linearization(
    state: &TrimerState,
    e: Complex64,
    params: &TrimerParams,
) -> ComplexMatrix {
    let v = state.to_array();
    let (k, g) = (params.k(), site_gain(params.gamma()));
    let mut m = ComplexMatrix::zeros(6);
    for i in 0..3 {
        for j in 0..3 {
            let kl = adjacency_times(k, i, j);
            m[(i, j)] = I * kl;
            m[(i + 3, j + 3)] = -I * kl;
        }
        let d = 2.0 * v[i].norm_sqr();
        m[(i, i)] = -I * (e - d - I * g[i]);
        m[(i + 3, i + 3)] = I * (e.conj() - d + I * g[i]);
        m[(i, i + 3)] = I * v[i] * v[i];
        m[(i + 3, i)] = -I * (v[i] * v[i]).conj();
    }
    m
}

/// The rotating-frame flow `dw/dt = -i (E w - kLw - |w|^2 w - iGw)`, whose
/// fixed points are the stationary states at propagation constant `e`.
pub fn rotating_frame_field(w: &TrimerState, e: Complex64, params: &TrimerParams) -> TrimerState {
    let u = w.to_array();
    let (k, g) = (params.k(), site_gain(params.gamma()));
    let lw = [k * u[1], k * (u[0] + u[2]), k * u[1]];
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for j in 0..3 {
        out[j] = -I * (e * u[j] - lw[j] - u[j].norm_sqr() * u[j] - I * g[j] * u[j]);
    }
    out.into()
}

/// The gauge null vector `(i v, -i conj(v))`.
pub fn gauge_mode(state: &TrimerState) -> [Complex64; 6] {
    let v = state.to_array();
    let mut g = [Complex64::new(0.0, 0.0); 6];
    for j in 0..3 {
        g[j] = I * v[j];
        g[j + 3] = -I * v[j].conj();
    }
    g
}

/// Spectrum of the linearization about `state`, with the gauge mode
/// deflated when the state is nonzero.
pub fn spectrum_at(state: &TrimerState, e: Complex64, params: &TrimerParams) -> Result<Spectrum> {
    let m = build_linearization(state, e, params);
    let g = gauge_mode(state);
    if g.iter().map(|z| z.norm_sqr()).sum::<f64>() == 0.0 {
        return Spectrum::of_matrix(&m);
    }
    let h = Householder::annihilating(&g);
    let reduced = h.similarity(&m).trailing(1);
    let mut eig = eigenvalues(&reduced)?;
    eig.push(Complex64::new(0.0, 0.0));
    Ok(Spectrum::from_eigenvalues(eig))
}

pub fn stationary_spectrum(point: &StationaryPoint) -> Result<Spectrum> {
    spectrum_at(
        &point.polar.to_state(),
        point.propagation.value(),
        &point.params,
    )
}

pub fn ghost_spectrum(point: &GhostPoint) -> Result<Spectrum> {
    spectrum_at(
        &point.polar.to_state(),
        point.propagation.value(),
        &point.params,
    )
}

/// Eigenvalues `mu` of the linear stationary problem `mu v = kLv + i G v`:
/// `{0, +-sqrt(2k^2 - gamma^2)}`, real below the PT threshold `sqrt(2) k`.
pub fn linear_eigenvalues(k: f64, gamma: f64) -> Result<Vec<Complex64>> {
    let g = site_gain(gamma);
    let mut m = ComplexMatrix::zeros(3);
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = Complex64::new(adjacency_times(k, i, j), 0.0);
        }
        m[(i, i)] = I * g[i];
    }
    eigenvalues(&m)
}
