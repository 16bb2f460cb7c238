//! Branch tracing over `gamma` and bifurcation events.
//!
//! Regular branches are curves `p(x; gamma) = 0` of the amplitude quintic in
//! the plane `(x, gamma)`; ghost branches are curves of the consistency
//! system in `(A, B, C, gamma)`. Both are traced by pseudo-arclength, so
//! folds are passed rather than stopped at. A traced curve is then split
//! at its folds into segments along which `gamma` is monotone, and each
//! segment becomes a [`Branch`].
//!
//! Events are located by bisection along the curve on a test function:
//! `d gamma / ds` for folds, `max Re lambda > 1e-8` for stability changes,
//! the antisymmetric diagonal entry of the consistency Jacobian for
//! symmetry-breaking pitchforks, and `p(0; gamma)` for zero-amplitude birth.

pub mod arclength;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use arclength::{
    bisect_along, correct_at_gamma, start_point, step_from, trace, ArclengthOptions, Curve,
    CurvePoint, CurveProblem, EndReason,
};

use crate::error::{Result, TrimerError};
use crate::ghost::{consistency_residual, newton_amplitudes, GhostPoint, SYMMETRY_TOL};
use crate::linalg::{fd_jacobian, solve_real};
use crate::model::{PolarState, PropagationConstant, TrimerParams, TrimerState};
use crate::spectra::{ghost_spectrum, linear_eigenvalues, stationary_spectrum, Spectrum};
use crate::stationary::{
    quintic_coefficients, real_nonneg_roots, solve_all_stationary, stationary_from_root,
    StationaryPoint, STATIONARY_TOL,
};

/// Events are bisected until their `gamma` bracket is narrower than this.
pub const EVENT_TOL: f64 = 1e-5;
/// Folds and pitchforks are cheap to refine further.
const SHARP_EVENT_TOL: f64 = 1e-8;
/// Ghost branches end when the total power falls below this.
pub const GHOST_POWER_FLOOR: f64 = 1e-4;
/// Asymmetric offset `A - C = 2 delta` used to leave a pitchfork.
pub const GHOST_SEED_DELTA: f64 = 1e-3;
/// Tolerance of the pitchfork/destabilization coincidence check.
pub const PITCHFORK_MATCH_TOL: f64 = 5e-3;

/// A point on a branch: a regular or a ghost stationary state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Solution {
    Regular(StationaryPoint),
    Ghost(GhostPoint),
}

impl Solution {
    pub fn polar(&self) -> &PolarState {
        match self {
            Solution::Regular(p) => &p.polar,
            Solution::Ghost(g) => &g.polar,
        }
    }

    pub fn propagation(&self) -> PropagationConstant {
        match self {
            Solution::Regular(p) => p.propagation,
            Solution::Ghost(g) => g.propagation,
        }
    }

    pub fn params(&self) -> TrimerParams {
        match self {
            Solution::Regular(p) => p.params,
            Solution::Ghost(g) => g.params,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.params().gamma()
    }

    pub fn amplitudes(&self) -> [f64; 3] {
        self.polar().amplitudes()
    }

    pub fn phases(&self) -> [f64; 3] {
        self.polar().phases()
    }

    pub fn state(&self) -> TrimerState {
        self.polar().to_state()
    }

    pub fn residual(&self) -> f64 {
        match self {
            Solution::Regular(p) => p.residual,
            Solution::Ghost(g) => g.residual,
        }
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        match self {
            Solution::Regular(p) => stationary_spectrum(p),
            Solution::Ghost(g) => ghost_spectrum(g),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub gamma: f64,
    pub solution: Solution,
    pub spectrum: Spectrum,
}

impl BranchPoint {
    pub fn new(solution: Solution) -> Result<Self> {
        Ok(Self {
            gamma: solution.gamma(),
            spectrum: solution.spectrum()?,
            solution,
        })
    }
}

/// Where a branch segment comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    /// Continues a real Hamiltonian state at `gamma = 0`; `pattern` gives
    /// the signs of `(a, b, c)` with `b >= 0`, e.g. `"+0-"` or `"-+-"`.
    GammaZero {
        pattern: String,
        x: f64,
    },
    /// Emerges from the zero state.
    ZeroBirth,
    /// Bifurcates from a symmetric branch at a pitchfork.
    Pitchfork {
        gamma: f64,
    },
    Interior,
}

/// A segment of a traced curve along which `gamma` increases strictly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub label: String,
    pub origin: Origin,
    pub points: Vec<BranchPoint>,
}

impl Branch {
    pub fn gamma_range(&self) -> (f64, f64) {
        (
            self.points.first().map_or(f64::NAN, |p| p.gamma),
            self.points.last().map_or(f64::NAN, |p| p.gamma),
        )
    }

    pub fn contains_gamma(&self, gamma: f64) -> bool {
        let (lo, hi) = self.gamma_range();
        gamma >= lo && gamma <= hi
    }

    /// The stored point nearest in `gamma`.
    pub fn nearest(&self, gamma: f64) -> Option<&BranchPoint> {
        self.points
            .iter()
            .min_by(|a, b| (a.gamma - gamma).abs().total_cmp(&(b.gamma - gamma).abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Fold,
    Pitchfork,
    ZeroBirth,
    GhostTermination,
    StabilityChange,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Fold => "fold",
            EventKind::Pitchfork => "pitchfork",
            EventKind::ZeroBirth => "zero_birth",
            EventKind::GhostTermination => "ghost_termination",
            EventKind::StabilityChange => "stability_change",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub amplitudes: [f64; 3],
    pub phases: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationEvent {
    pub kind: EventKind,
    pub gamma_critical: f64,
    pub gamma_bracket: [f64; 2],
    pub witnesses: Vec<Witness>,
    pub detail: String,
}

impl BifurcationEvent {
    pub fn involves(&self, label: &str) -> bool {
        self.witnesses.iter().any(|w| w.label == label)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyOptions {
    pub arclength: ArclengthOptions,
    /// Number of `gamma` values scanned for roots not yet on a traced curve.
    pub scan_points: usize,
    pub event_tol: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            arclength: ArclengthOptions::default(),
            scan_points: 101,
            event_tol: EVENT_TOL,
        }
    }
}

// ---------------------------------------------------------------------------
// curve problems

/// `p(x; gamma) / scale = 0` at fixed `(E, k)`.
#[derive(Clone, Copy, Debug)]
pub struct RegularCurve {
    pub e: f64,
    pub k: f64,
}

impl RegularCurve {
    pub fn params(&self, gamma: f64) -> Result<TrimerParams> {
        TrimerParams::new(self.e, self.k, gamma.abs())
    }
}

impl CurveProblem for RegularCurve {
    fn dim(&self) -> usize {
        1
    }

    fn residual(&self, state: &[f64], gamma: f64) -> Result<Vec<f64>> {
        let p = quintic_coefficients(&self.params(gamma)?).polynomial();
        let x = state[0];
        Ok(vec![
            p.eval(x) / p.magnitude_scale(x).max(f64::MIN_POSITIVE),
        ])
    }

    fn stop_reason(&self, state: &[f64], _gamma: f64) -> Option<String> {
        (state[0] < 0.0).then(|| "zero amplitude".to_string())
    }
}

/// The ghost consistency system in `(A, B, C)` at fixed `(E_hat, k)`.
#[derive(Clone, Copy, Debug)]
pub struct GhostCurve {
    pub e_hat: f64,
    pub k: f64,
}

impl GhostCurve {
    pub fn params(&self, gamma: f64) -> Result<TrimerParams> {
        TrimerParams::new(self.e_hat, self.k, gamma)
    }
}

impl CurveProblem for GhostCurve {
    fn dim(&self) -> usize {
        3
    }

    fn residual(&self, s: &[f64], gamma: f64) -> Result<Vec<f64>> {
        Ok(consistency_residual([s[0], s[1], s[2]], &self.params(gamma)?, self.e_hat)?.to_vec())
    }

    fn stop_reason(&self, s: &[f64], _gamma: f64) -> Option<String> {
        if s.iter().any(|v| *v <= 0.0) || s.iter().map(|v| v * v).sum::<f64>() < GHOST_POWER_FLOOR {
            Some("vanishing amplitude".into())
        } else if (s[0] - s[2]).abs() < SYMMETRY_TOL {
            Some("symmetric collapse".into())
        } else {
            None
        }
    }
}

trait BranchProblem: CurveProblem + Sync {
    fn finalize(&self, state: &[f64], gamma: f64) -> Result<Solution>;
}

impl BranchProblem for RegularCurve {
    fn finalize(&self, state: &[f64], gamma: f64) -> Result<Solution> {
        let params = self.params(gamma)?;
        let x = polish_root(state[0], &params);
        let point = stationary_from_root(x, &params)?;
        if point.residual > STATIONARY_TOL {
            return Err(TrimerError::NoConvergence {
                iterations: 0,
                residual: point.residual,
            });
        }
        Ok(Solution::Regular(point))
    }
}

impl BranchProblem for GhostCurve {
    fn finalize(&self, s: &[f64], gamma: f64) -> Result<Solution> {
        let params = self.params(gamma)?;
        let amps = newton_amplitudes(&params, self.e_hat, [s[0], s[1], s[2]])?;
        let point = GhostPoint::from_amplitudes(amps, &params, self.e_hat)?;
        if point.residual > STATIONARY_TOL {
            return Err(TrimerError::NoConvergence {
                iterations: 0,
                residual: point.residual,
            });
        }
        Ok(Solution::Ghost(point))
    }
}

/// Newton on the quintic at fixed parameters, keeping the better iterate.
fn polish_root(x0: f64, params: &TrimerParams) -> f64 {
    let p = quintic_coefficients(params).polynomial();
    let mut x = x0.max(0.0);
    let mut best = (p.eval(x).abs(), x);
    for _ in 0..6 {
        let (f, df) = p.eval_with_derivative(x);
        if df == 0.0 || f == 0.0 {
            break;
        }
        x = (x - f / df).max(0.0);
        let v = p.eval(x).abs();
        if v < best.0 {
            best = (v, x);
        }
    }
    best.1
}

// ---------------------------------------------------------------------------
// curve analysis

struct RawEvent {
    kind: EventKind,
    /// The event lies between raw points `index` and `index + 1`.
    index: usize,
    lo: CurvePoint,
    hi: CurvePoint,
    detail: String,
}

struct Analyzed {
    curve: Curve,
    /// End reason at the start of the curve (after merging a backward trace).
    start_end: Option<EndReason>,
    points: Vec<Option<BranchPoint>>,
    events: Vec<RawEvent>,
    fold_points: Vec<Option<BranchPoint>>,
}

fn merge_bidirectional(backward: Curve, forward: Curve) -> Curve {
    let mut points: Vec<CurvePoint> = backward
        .points
        .into_iter()
        .rev()
        .map(|mut p| {
            for t in &mut p.tangent {
                *t = -*t;
            }
            p
        })
        .collect();
    points.extend(forward.points.into_iter().skip(1));
    Curve {
        points,
        end: forward.end,
    }
}

fn trace_both<P: CurveProblem>(
    p: &P,
    state: &[f64],
    gamma: f64,
    opts: &ArclengthOptions,
) -> Result<(Curve, Option<EndReason>)> {
    let mut up = vec![0.0; state.len()];
    up.push(1.0);
    let fwd_start = start_point(p, state, gamma, &up, opts)?;
    let forward = trace(p, fwd_start.clone(), opts)?;
    if gamma <= opts.gamma_min {
        return Ok((forward, None));
    }
    let mut back_start = fwd_start;
    for t in &mut back_start.tangent {
        *t = -*t;
    }
    let backward = trace(p, back_start, opts)?;
    let start_end = backward.end.clone();
    Ok((merge_bidirectional(backward, forward), Some(start_end)))
}

fn analyze<P: BranchProblem>(
    p: &P,
    curve: Curve,
    start_end: Option<EndReason>,
    opts: &StudyOptions,
) -> Analyzed {
    let points: Vec<Option<BranchPoint>> = curve
        .points
        .par_iter()
        .map(|cp| {
            p.finalize(&cp.state, cp.gamma)
                .and_then(BranchPoint::new)
                .ok()
        })
        .collect();
    let arc = &opts.arclength;
    let mut events = Vec::new();
    let mut fold_points = Vec::new();
    for i in 0..curve.points.len().saturating_sub(1) {
        let (a, b) = (&curve.points[i], &curve.points[i + 1]);
        if (a.dgamma_ds() > 0.0) != (b.dgamma_ds() > 0.0) {
            let sign = a.dgamma_ds() > 0.0;
            let (lo, hi) = bisect_along(
                p,
                a,
                b,
                |c| Ok((c.dgamma_ds() > 0.0) == sign),
                SHARP_EVENT_TOL,
                arc,
            )
            .unwrap_or((a.clone(), b.clone()));
            let mid = if lo.gamma.abs() > hi.gamma.abs() {
                &lo
            } else {
                &hi
            };
            fold_points.push(
                p.finalize(&mid.state, mid.gamma)
                    .and_then(BranchPoint::new)
                    .ok(),
            );
            events.push(RawEvent {
                kind: EventKind::Fold,
                index: i,
                lo,
                hi,
                detail: String::new(),
            });
        }
        if let (Some(pa), Some(pb)) = (&points[i], &points[i + 1]) {
            let ua = pa.spectrum.is_unstable();
            if ua != pb.spectrum.is_unstable() {
                let test = |c: &CurvePoint| -> Result<bool> {
                    let s = p.finalize(&c.state, c.gamma)?.spectrum()?;
                    Ok(s.is_unstable())
                };
                let (lo, hi) = bisect_along(p, a, b, test, opts.event_tol, arc)
                    .unwrap_or((a.clone(), b.clone()));
                events.push(RawEvent {
                    kind: EventKind::StabilityChange,
                    index: i,
                    lo,
                    hi,
                    // direction in increasing gamma
                    detail: if ua == (a.gamma < b.gamma) {
                        "stabilizes"
                    } else {
                        "destabilizes"
                    }
                    .to_string(),
                });
            }
        }
    }
    Analyzed {
        curve,
        start_end,
        points,
        events,
        fold_points,
    }
}

struct Segment {
    first: usize,
    last: usize,
    increasing: bool,
    branch: Branch,
}

/// Splits at folds; each segment is stored with ascending `gamma`.
fn split_segments(an: &Analyzed) -> Vec<Segment> {
    let folds: Vec<(usize, Option<&BranchPoint>)> = an
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Fold)
        .zip(&an.fold_points)
        .map(|(e, fp)| (e.index, fp.as_ref()))
        .collect();
    let n = an.curve.points.len();
    let mut out = Vec::new();
    let mut first = 0;
    let mut lead: Option<&BranchPoint> = None;
    for k in 0..=folds.len() {
        let (last, trail) = if k < folds.len() {
            (folds[k].0, folds[k].1)
        } else {
            (n - 1, None)
        };
        let mut pts: Vec<BranchPoint> = Vec::new();
        pts.extend(lead.cloned());
        pts.extend((first..=last).filter_map(|i| an.points[i].clone()));
        pts.extend(trail.cloned());
        let increasing = an.curve.points[first.min(n - 1)].dgamma_ds() > 0.0;
        if !increasing {
            pts.reverse();
        }
        pts.dedup_by(|b, a| b.gamma <= a.gamma);
        out.push(Segment {
            first,
            last,
            increasing,
            branch: Branch {
                label: String::new(),
                origin: Origin::Interior,
                points: pts,
            },
        });
        first = last + 1;
        lead = trail;
    }
    out.retain(|s| !s.branch.points.is_empty());
    out
}

fn segment_of(segments: &[Segment], index: usize, increasing: bool) -> Option<usize> {
    segments
        .iter()
        .position(|s| index >= s.first && index <= s.last && s.increasing == increasing)
        .or_else(|| {
            segments
                .iter()
                .position(|s| index >= s.first && index <= s.last)
        })
}

fn witness(label: &str, solution: Option<Solution>) -> Witness {
    Witness {
        label: label.to_string(),
        amplitudes: solution.map_or([f64::NAN; 3], |s| s.amplitudes()),
        phases: solution.map_or([f64::NAN; 3], |s| s.phases()),
    }
}

fn to_event<P: BranchProblem>(
    p: &P,
    raw: &RawEvent,
    segments: &[Segment],
    labels: &[String],
) -> BifurcationEvent {
    let g_lo = raw.lo.gamma.min(raw.hi.gamma);
    let g_hi = raw.lo.gamma.max(raw.hi.gamma);
    let sol = p.finalize(&raw.hi.state, raw.hi.gamma).ok();
    let witnesses = match raw.kind {
        EventKind::Fold => segments
            .iter()
            .zip(labels)
            .filter(|(s, _)| s.last == raw.index || s.first == raw.index + 1)
            .map(|(_, l)| witness(l, sol))
            .collect(),
        _ => segment_of(segments, raw.index, raw.lo.dgamma_ds() > 0.0)
            .map(|j| vec![witness(&labels[j], sol)])
            .unwrap_or_default(),
    };
    BifurcationEvent {
        kind: raw.kind,
        gamma_critical: 0.5 * (g_lo + g_hi),
        gamma_bracket: [g_lo, g_hi],
        witnesses,
        detail: raw.detail.clone(),
    }
}

// ---------------------------------------------------------------------------
// regular study

/// Signs of `(a, b, c)` of a real state, e.g. `"+0-"`.
pub fn sign_pattern(polar: &PolarState) -> String {
    let amps = polar.amplitudes();
    let ph = polar.phases();
    (0..3)
        .map(|j| {
            if amps[j] < 1e-9 {
                '0'
            } else if ph[j].cos() >= 0.0 {
                '+'
            } else {
                '-'
            }
        })
        .collect()
}

/// A symmetry-breaking point on a symmetric branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PitchforkPoint {
    pub gamma: f64,
    /// `(A, B, A)` at the bifurcation.
    pub amplitudes: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularStudy {
    pub e: f64,
    pub k: f64,
    pub gamma_max: f64,
    pub branches: Vec<Branch>,
    pub events: Vec<BifurcationEvent>,
    pub pitchforks: Vec<PitchforkPoint>,
}

impl RegularStudy {
    pub fn branch(&self, label: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.label == label)
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &BifurcationEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Number of distinct regular states at `gamma` over all branches.
    /// Fold ends are excluded; ends at `gamma = 0` and at `gamma_max` are
    /// truncations and count.
    pub fn census(&self, gamma: f64) -> usize {
        self.branches
            .iter()
            .filter(|b| {
                let (lo, hi) = b.gamma_range();
                let above = gamma > lo || (lo <= 0.0 && gamma == lo);
                let below = gamma < hi || (hi >= self.gamma_max && gamma == hi);
                above && below
            })
            .count()
    }
}

/// The antisymmetric test function of a symmetric state `(A, B, A)`: the
/// derivative of `r_a - r_c` of the consistency system along `(1, 0, -1)`.
/// It vanishes where a pair of asymmetric states branches off.
pub fn pitchfork_test(a: f64, b: f64, params: &TrimerParams) -> Result<f64> {
    let e_hat = params.e().abs();
    let h = 1e-6 * (1.0 + a);
    let rp = consistency_residual([a + h, b, a - h], params, e_hat)?;
    let rm = consistency_residual([a - h, b, a + h], params, e_hat)?;
    Ok(((rp[0] - rp[1]) - (rm[0] - rm[1])) / (4.0 * h))
}

fn pitchfork_value(curve: &RegularCurve, cp: &CurvePoint) -> Option<f64> {
    let params = curve.params(cp.gamma).ok()?;
    let s = stationary_from_root(polish_root(cp.state[0], &params), &params).ok()?;
    let [a, b, _] = s.amplitudes();
    if a < 1e-6 || b < 1e-6 {
        return None;
    }
    pitchfork_test(a, b, &params).ok().filter(|v| v.is_finite())
}

fn find_pitchforks(
    curve_problem: &RegularCurve,
    an: &Analyzed,
    opts: &StudyOptions,
) -> Vec<(RawEvent, PitchforkPoint)> {
    let tau: Vec<Option<f64>> = an
        .curve
        .points
        .par_iter()
        .map(|cp| pitchfork_value(curve_problem, cp))
        .collect();
    let mut out = Vec::new();
    for i in 0..tau.len().saturating_sub(1) {
        let (Some(ta), Some(tb)) = (tau[i], tau[i + 1]) else {
            continue;
        };
        if (ta > 0.0) == (tb > 0.0) {
            continue;
        }
        let (a, b) = (&an.curve.points[i], &an.curve.points[i + 1]);
        let test = |c: &CurvePoint| -> Result<bool> {
            pitchfork_value(curve_problem, c)
                .map(|v| v > 0.0)
                .ok_or(TrimerError::Inconsistent("pitchfork test undefined".into()))
        };
        let Ok((lo, hi)) =
            bisect_along(curve_problem, a, b, test, SHARP_EVENT_TOL, &opts.arclength)
        else {
            continue;
        };
        // a sign change through a pole is not a bifurcation
        let (vl, vh) = match (
            pitchfork_value(curve_problem, &lo),
            pitchfork_value(curve_problem, &hi),
        ) {
            (Some(l), Some(h)) => (l, h),
            _ => continue,
        };
        if vl.abs().min(vh.abs()) > 1e-3 * ta.abs().max(tb.abs()) {
            continue;
        }
        let Ok(params) = curve_problem.params(hi.gamma) else {
            continue;
        };
        let Ok(s) = stationary_from_root(polish_root(hi.state[0], &params), &params) else {
            continue;
        };
        let amps = s.amplitudes();
        out.push((
            RawEvent {
                kind: EventKind::Pitchfork,
                index: i,
                lo: lo.clone(),
                hi: hi.clone(),
                detail: "symmetry-breaking".into(),
            },
            PitchforkPoint {
                gamma: 0.5 * (lo.gamma + hi.gamma),
                amplitudes: amps,
            },
        ));
    }
    out
}

fn covers(
    curve_problem: &RegularCurve,
    an: &Analyzed,
    gamma: f64,
    x: f64,
    opts: &ArclengthOptions,
) -> bool {
    an.curve.points.windows(2).any(|w| {
        let (g0, g1) = (w[0].gamma, w[1].gamma);
        if !(gamma >= g0.min(g1) && gamma <= g0.max(g1)) || g0 == g1 {
            return false;
        }
        let t = (gamma - g0) / (g1 - g0);
        let guess = w[0].state[0] + t * (w[1].state[0] - w[0].state[0]);
        if (guess - x).abs() > 0.1 {
            return false;
        }
        match correct_at_gamma(curve_problem, &[guess], gamma, opts) {
            Ok(s) => (s[0] - x).abs() < 1e-7 * (1.0 + x),
            Err(_) => false,
        }
    })
}

/// Traces every regular branch of `(E, k)` on `[0, gamma_max]`, splits the
/// curves into monotone segments, labels them and collects all events.
pub fn regular_study(e: f64, k: f64, gamma_max: f64, opts: &StudyOptions) -> Result<RegularStudy> {
    if gamma_max.is_nan() || gamma_max <= 0.0 {
        return Err(TrimerError::InvalidParameter(format!(
            "gamma_max = {gamma_max} must be positive"
        )));
    }
    TrimerParams::new(e, k, 0.0)?;
    let problem = RegularCurve { e, k };
    let arc = ArclengthOptions {
        gamma_min: 0.0,
        gamma_max,
        ..opts.arclength.clone()
    };

    // curves from the Hamiltonian limit, skipping roots reached by an earlier curve
    let zero_roots: Vec<f64> = solve_all_stationary(&problem.params(0.0)?)
        .iter()
        .map(|s| s.x)
        .collect();
    let mut analyzed: Vec<Analyzed> = Vec::new();
    for &x0 in &zero_roots {
        let reached = analyzed.iter().any(|an| {
            an.curve
                .points
                .iter()
                .any(|p| p.gamma == 0.0 && (p.state[0] - x0).abs() < 1e-6 * (1.0 + x0))
        });
        if reached {
            continue;
        }
        let (curve, start_end) = trace_both(&problem, &[x0], 0.0, &arc)?;
        analyzed.push(analyze(&problem, curve, start_end, opts));
    }

    // completeness scan for curves that do not touch gamma = 0
    let n_scan = opts.scan_points.max(2);
    for j in 1..=n_scan {
        let gamma = gamma_max * j as f64 / n_scan as f64;
        for s in solve_all_stationary(&problem.params(gamma)?) {
            if s.x == 0.0
                || analyzed
                    .iter()
                    .any(|an| covers(&problem, an, gamma, s.x, &arc))
            {
                continue;
            }
            let (curve, start_end) = trace_both(&problem, &[s.x], gamma, &arc)?;
            analyzed.push(analyze(&problem, curve, start_end, opts));
        }
    }

    let mut branches = Vec::new();
    let mut events = Vec::new();
    let mut pitchforks = Vec::new();
    for an in &analyzed {
        let forks = find_pitchforks(&problem, an, opts);
        let segments = split_segments(an);
        let base = branches.len();
        for (idx, seg) in segments.iter().enumerate() {
            let mut b = seg.branch.clone();
            b.origin = segment_origin(an, seg, idx == 0, idx + 1 == segments.len());
            branches.push(b);
        }
        let idx_labels: Vec<String> = (base..branches.len()).map(|i| format!("#{i}")).collect();
        for raw in &an.events {
            events.push(to_event(&problem, raw, &segments, &idx_labels));
        }
        for (raw, fork) in forks {
            events.push(to_event(&problem, &raw, &segments, &idx_labels));
            pitchforks.push(fork);
        }
    }

    if let Some(birth) = detect_zero_birth(e, k, 0.0, gamma_max)? {
        let mut birth = birth;
        for (i, b) in branches.iter().enumerate() {
            if b.origin == Origin::ZeroBirth {
                birth.witnesses.push(witness(
                    &format!("#{i}"),
                    b.points.first().map(|p| p.solution),
                ));
            }
        }
        events.push(birth);
    }

    assign_labels(&mut branches, &mut events);
    events.sort_by(|a, b| a.gamma_critical.total_cmp(&b.gamma_critical));
    Ok(RegularStudy {
        e,
        k,
        gamma_max,
        branches,
        events,
        pitchforks,
    })
}

fn segment_origin(an: &Analyzed, seg: &Segment, is_first: bool, is_last: bool) -> Origin {
    let first = &an.curve.points[seg.first];
    let last = &an.curve.points[seg.last];
    if let Some(cp) = [first, last].into_iter().find(|cp| cp.gamma == 0.0) {
        let pattern = seg
            .branch
            .points
            .first()
            .filter(|p| p.gamma == 0.0)
            .map_or_else(String::new, |p| sign_pattern(p.solution.polar()));
        return Origin::GammaZero {
            pattern,
            x: cp.state[0],
        };
    }
    let at_zero =
        |r: Option<&EndReason>| matches!(r, Some(EndReason::Stopped(s)) if s == "zero amplitude");
    if (is_first && at_zero(an.start_end.as_ref())) || (is_last && at_zero(Some(&an.curve.end))) {
        return Origin::ZeroBirth;
    }
    Origin::Interior
}

/// Names segments. The two continuations of the Hamiltonian `"+0-"` and
/// `"-+-"` states and a single zero-birth branch are called blue, red and
/// black when they are the only branches; otherwise segments are numbered
/// by their `gamma = 0` amplitude.
fn assign_labels(branches: &mut [Branch], events: &mut [BifurcationEvent]) {
    let mut names: Vec<String> = vec![String::new(); branches.len()];
    let zero: Vec<usize> = (0..branches.len())
        .filter(|&i| matches!(branches[i].origin, Origin::GammaZero { .. }))
        .collect();
    let births: Vec<usize> = (0..branches.len())
        .filter(|&i| branches[i].origin == Origin::ZeroBirth)
        .collect();
    let pattern = |i: usize| match &branches[i].origin {
        Origin::GammaZero { pattern, .. } => pattern.clone(),
        _ => String::new(),
    };
    let colored = zero.len() == 2 && births.len() == 1 && branches.len() == 3 && {
        let mut p: Vec<String> = zero.iter().map(|&i| pattern(i)).collect();
        p.sort();
        p == ["+0-", "-+-"]
    };
    if colored {
        for &i in &zero {
            names[i] = if pattern(i) == "+0-" { "blue" } else { "red" }.into();
        }
        names[births[0]] = "black".into();
    } else {
        let mut by_x: Vec<(f64, usize)> = zero
            .iter()
            .map(|&i| match branches[i].origin {
                Origin::GammaZero { x, .. } => (x, i),
                _ => unreachable!(),
            })
            .collect();
        by_x.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut n = 0;
        for (_, i) in by_x {
            names[i] = format!("branch-{n}");
            n += 1;
        }
        for (j, &i) in births.iter().enumerate() {
            names[i] = format!("birth-{j}");
        }
        for name in names.iter_mut().filter(|s| s.is_empty()) {
            *name = format!("branch-{n}");
            n += 1;
        }
    }
    for (b, name) in branches.iter_mut().zip(&names) {
        b.label = name.clone();
    }
    for ev in events.iter_mut() {
        for w in &mut ev.witnesses {
            if let Some(i) = w
                .label
                .strip_prefix('#')
                .and_then(|s| s.parse::<usize>().ok())
            {
                w.label = names[i].clone();
            }
        }
    }
}

/// Continues one regular state in `gamma` until `gamma_target` (or the
/// curve leaves `[0, gamma_target]` on the other side), returning the
/// monotone segments.
pub fn continue_branch(
    seed: &StationaryPoint,
    gamma_target: f64,
    opts: &StudyOptions,
) -> Result<Vec<Branch>> {
    let problem = RegularCurve {
        e: seed.params.e(),
        k: seed.params.k(),
    };
    let g0 = seed.gamma();
    let (lo, hi) = if gamma_target >= g0 {
        (0.0, gamma_target)
    } else {
        (gamma_target, f64::MAX)
    };
    let arc = ArclengthOptions {
        gamma_min: lo,
        gamma_max: hi,
        ..opts.arclength.clone()
    };
    let dir = if gamma_target >= g0 { 1.0 } else { -1.0 };
    let start = start_point(&problem, &[seed.x], g0, &[0.0, dir], &arc)?;
    let curve = trace(&problem, start, &arc)?;
    let an = analyze(&problem, curve, None, opts);
    let segs = split_segments(&an);
    Ok(segs
        .into_iter()
        .enumerate()
        .map(|(i, s)| Branch {
            label: format!("segment-{i}"),
            ..s.branch
        })
        .collect())
}

/// The zero-amplitude birth of a regular branch: the root `x = 0` of the
/// quintic appears where `p(0; gamma) = k^2 E (2k^2 - E^2 - gamma^2)`
/// changes sign, i.e. at `gamma = sqrt(2k^2 - E^2)`.
pub fn detect_zero_birth(
    e: f64,
    k: f64,
    gamma_lo: f64,
    gamma_hi: f64,
) -> Result<Option<BifurcationEvent>> {
    let f = |g: f64| -> Result<f64> { Ok(quintic_coefficients(&TrimerParams::new(e, k, g)?).c[0]) };
    let n = 1000;
    let mut prev = (gamma_lo, f(gamma_lo)?);
    for j in 1..=n {
        let g = gamma_lo + (gamma_hi - gamma_lo) * j as f64 / n as f64;
        let v = f(g)?;
        if prev.1 != 0.0 && (v == 0.0 || (v > 0.0) != (prev.1 > 0.0)) {
            let (mut a, mut b) = (prev.0, g);
            let sa = prev.1 > 0.0;
            while b - a > 1e-14 * (1.0 + b) {
                let m = 0.5 * (a + b);
                let fm = f(m)?;
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if (fm > 0.0) == sa {
                    a = m;
                } else {
                    b = m;
                }
            }
            let analytic = (2.0 * k * k - e * e).sqrt();
            return Ok(Some(BifurcationEvent {
                kind: EventKind::ZeroBirth,
                gamma_critical: 0.5 * (a + b),
                gamma_bracket: [a, b],
                witnesses: Vec::new(),
                detail: format!("analytic sqrt(2k^2 - E^2) = {analytic:.12}"),
            }));
        }
        prev = (g, v);
    }
    Ok(None)
}

/// The linear PT threshold: the analytic `sqrt(2) k` and the value where
/// the linear stationary spectrum first leaves the real axis, by bisection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtThreshold {
    pub analytic: f64,
    pub numeric: f64,
}

pub fn linear_pt_threshold(k: f64) -> Result<PtThreshold> {
    let complex = |g: f64| -> Result<bool> {
        Ok(linear_eigenvalues(k, g)?
            .iter()
            .any(|z| z.im.abs() > 1e-6 * k))
    };
    let (mut a, mut b) = (0.0, 3.0 * k);
    if complex(a)? || !complex(b)? {
        return Err(TrimerError::NoBracket {
            what: "linear PT threshold",
            lo: a,
            hi: b,
        });
    }
    while b - a > 1e-13 * k {
        let m = 0.5 * (a + b);
        if complex(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(PtThreshold {
        analytic: std::f64::consts::SQRT_2 * k,
        numeric: 0.5 * (a + b),
    })
}

// ---------------------------------------------------------------------------
// ghost study

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GhostStudy {
    pub e_hat: f64,
    pub k: f64,
    pub pitchfork: PitchforkPoint,
    /// The mirror pair: `magenta` (`Im E < 0`) and `green` (`Im E > 0`).
    pub branches: Vec<Branch>,
    pub events: Vec<BifurcationEvent>,
    /// End of each branch estimated from `P^2` linear in `gamma` near the
    /// vanishing-amplitude limit.
    pub termination: Vec<f64>,
}

impl GhostStudy {
    pub fn branch(&self, label: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.label == label)
    }
}

/// Solves consistency plus `A - C = 2 delta` for `(A, B, C, gamma)`.
fn pinned_seed(curve: &GhostCurve, fork: &PitchforkPoint, delta: f64) -> Result<Vec<f64>> {
    let [a, b, _] = fork.amplitudes;
    let f = |y: &[f64]| -> Result<Vec<f64>> {
        let mut r = curve.residual(&y[..3], y[3])?;
        r.push(y[0] - y[2] - 2.0 * delta);
        Ok(r)
    };
    let mut y = vec![a + delta, b, a - delta, fork.gamma];
    for _ in 0..50 {
        let r = f(&y)?;
        if r.iter().all(|v| v.abs() <= 1e-13) {
            return Ok(y);
        }
        let jac = fd_jacobian(f, &y, 1e-7)?;
        let dy = solve_real(&jac, &r).ok_or(TrimerError::NoConvergence {
            iterations: 0,
            residual: f64::NAN,
        })?;
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi -= d;
        }
    }
    let res = f(&y)?.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if res <= 1e-11 {
        Ok(y)
    } else {
        Err(TrimerError::NoConvergence {
            iterations: 50,
            residual: res,
        })
    }
}

fn ghost_termination_estimate(branch: &Branch) -> f64 {
    let tail: Vec<(f64, f64)> = branch
        .points
        .iter()
        .rev()
        .take(6)
        .map(|p| (p.gamma, p.solution.polar().total_power().powi(2)))
        .collect();
    // least squares P^2 = alpha + beta gamma, end at P = 0
    let n = tail.len() as f64;
    let (sx, sy) = tail
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = tail.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    let beta = sxy / sxx;
    mx - my / beta
}

/// Continues the mirror pair of ghost branches out of the pitchfork on the
/// symmetric branch until their amplitudes vanish.
pub fn ghost_study(
    e_hat: f64,
    k: f64,
    fork: &PitchforkPoint,
    gamma_max: f64,
    opts: &StudyOptions,
) -> Result<GhostStudy> {
    let curve = GhostCurve { e_hat, k };
    let arc = ArclengthOptions {
        gamma_min: fork.gamma - 1.0,
        gamma_max,
        initial_step: 1e-3,
        ..opts.arclength.clone()
    };
    let runs: Vec<Result<(Branch, f64, BifurcationEvent)>> = [GHOST_SEED_DELTA, -GHOST_SEED_DELTA]
        .par_iter()
        .map(|&delta| {
            let y = pinned_seed(&curve, fork, delta)?;
            let hint = [delta.signum(), 0.0, -delta.signum(), 0.0];
            let start = start_point(&curve, &y[..3], y[3], &hint, &arc)?;
            let traced = trace(&curve, start, &arc)?;
            let end_reason = traced.end.clone();
            let an = analyze(&curve, traced, None, opts);
            let mut points: Vec<BranchPoint> = an.points.into_iter().flatten().collect();
            points.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
            points.dedup_by(|b, a| b.gamma <= a.gamma);
            let label = match points.last().map(|p| p.solution.propagation().imag()) {
                Some(im) if im < 0.0 => "magenta",
                _ => "green",
            };
            let branch = Branch {
                label: label.into(),
                origin: Origin::Pitchfork { gamma: fork.gamma },
                points,
            };
            let end = ghost_termination_estimate(&branch);
            let last = branch.points.last().map(|p| p.gamma).unwrap_or(f64::NAN);
            let event = BifurcationEvent {
                kind: EventKind::GhostTermination,
                gamma_critical: end,
                gamma_bracket: [last, end.max(last)],
                witnesses: vec![witness(label, branch.points.last().map(|p| p.solution))],
                detail: format!("{end_reason:?}"),
            };
            Ok((branch, end, event))
        })
        .collect();
    let mut branches = Vec::new();
    let mut termination = Vec::new();
    let mut events = Vec::new();
    for r in runs {
        let (b, end, ev) = r?;
        branches.push(b);
        termination.push(end);
        events.push(ev);
    }
    Ok(GhostStudy {
        e_hat,
        k,
        pitchfork: *fork,
        branches,
        events,
        termination,
    })
}

/// Locates the ghost branches of `(E_hat, k)`: the regular branches at
/// `E = E_hat` are traced, and ghosts are continued from the first
/// symmetry-breaking pitchfork.
pub fn ghost_branches(
    e_hat: f64,
    k: f64,
    gamma_max: f64,
    opts: &StudyOptions,
) -> Result<(RegularStudy, GhostStudy)> {
    let regular = regular_study(e_hat, k, gamma_max, opts)?;
    let fork = *regular
        .pitchforks
        .iter()
        .min_by(|a, b| a.gamma.total_cmp(&b.gamma))
        .ok_or(TrimerError::NoBracket {
            what: "symmetry-breaking test function",
            lo: 0.0,
            hi: gamma_max,
        })?;
    let ghosts = ghost_study(e_hat, k, &fork, gamma_max, opts)?;
    Ok((regular, ghosts))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PitchforkReport {
    /// Where the ghost pair leaves the symmetric branch.
    pub gamma_fork: f64,
    /// Where the symmetric branch first loses stability near the fork.
    pub gamma_destabilization: f64,
    /// Midpoint, reported as the common critical value.
    pub gamma_c: f64,
    pub mismatch: f64,
    /// Log-log slope of `|A - C|` against `gamma - gamma_fork`.
    pub scaling_exponent: f64,
}

/// Confirms that the ghost pair starts where the symmetric `branch`
/// destabilizes and measures the pitchfork scaling of the asymmetry.
pub fn pitchfork_locator(
    regular: &RegularStudy,
    branch: &str,
    ghosts: &GhostStudy,
) -> Result<PitchforkReport> {
    let gamma_fork = ghosts.pitchfork.gamma;
    let gamma_destabilization = regular
        .events_of(EventKind::StabilityChange)
        .filter(|e| e.involves(branch) && e.detail == "destabilizes")
        .map(|e| e.gamma_critical)
        .min_by(|a, b| (a - gamma_fork).abs().total_cmp(&(b - gamma_fork).abs()))
        .ok_or_else(|| TrimerError::Inconsistent(format!("branch {branch} never destabilizes")))?;
    let mismatch = (gamma_fork - gamma_destabilization).abs();
    if mismatch > PITCHFORK_MATCH_TOL {
        return Err(TrimerError::Inconsistent(format!(
            "ghost pitchfork at {gamma_fork} but {branch} destabilizes at {gamma_destabilization}"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for b in &ghosts.branches {
        for p in &b.points {
            let d = p.gamma - gamma_fork;
            let [a, _, c] = p.solution.amplitudes();
            if d > 1e-7 && d < 1e-2 && (a - c).abs() > 0.0 {
                xs.push(d.ln());
                ys.push((a - c).abs().ln());
            }
        }
    }
    if xs.len() < 3 {
        return Err(TrimerError::Inconsistent(
            "too few ghost points near the pitchfork".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(PitchforkReport {
        gamma_fork,
        gamma_destabilization,
        gamma_c: 0.5 * (gamma_fork + gamma_destabilization),
        mismatch,
        scaling_exponent: sxy / sxx,
    })
}

/// Re-solves the state of `branch` at `gamma` inside its range.
///
/// Regular branches take the quintic root nearest to `x` interpolated
/// between the stored points around `gamma`; ghost branches rerun Newton
/// from the nearest stored amplitudes.
pub fn solution_at(branch: &Branch, gamma: f64) -> Result<Solution> {
    let label = &branch.label;
    if !branch.contains_gamma(gamma) {
        let (lo, hi) = branch.gamma_range();
        return Err(TrimerError::InvalidParameter(format!(
            "{label} exists on gamma in [{lo}, {hi}], not at {gamma}"
        )));
    }
    let i = branch
        .points
        .partition_point(|p| p.gamma < gamma)
        .min(branch.points.len() - 1);
    let hi = &branch.points[i];
    let lo = &branch.points[i.saturating_sub(1)];
    let params = hi.solution.params().with_gamma(gamma)?;
    let (s_lo, s_hi) = match (&lo.solution, &hi.solution) {
        (Solution::Regular(a), Solution::Regular(b)) => (a, b),
        _ => {
            let near = if gamma - lo.gamma < hi.gamma - gamma {
                lo
            } else {
                hi
            };
            let e_hat = near.solution.propagation().e_hat;
            return Ok(Solution::Ghost(crate::ghost::solve_ghost(
                &params,
                e_hat,
                near.solution.amplitudes(),
            )?));
        }
    };
    let x_guess = if hi.gamma > lo.gamma {
        s_lo.x + (s_hi.x - s_lo.x) * (gamma - lo.gamma) / (hi.gamma - lo.gamma)
    } else {
        s_hi.x
    };
    let root = real_nonneg_roots(&quintic_coefficients(&params))
        .into_iter()
        .map(|r| r.x)
        .min_by(|a, b| (a - x_guess).abs().total_cmp(&(b - x_guess).abs()))
        .ok_or(TrimerError::NoBracket {
            what: "quintic root",
            lo: gamma,
            hi: gamma,
        })?;
    let point = stationary_from_root(root, &params)?;
    if point.residual > STATIONARY_TOL {
        return Err(TrimerError::NoConvergence {
            iterations: 0,
            residual: point.residual,
        });
    }
    Ok(Solution::Regular(point))
}

pub fn ghost_at(ghosts: &GhostStudy, label: &str, gamma: f64) -> Result<GhostPoint> {
    let b = ghosts
        .branch(label)
        .ok_or_else(|| TrimerError::InvalidParameter(format!("no ghost branch {label}")))?;
    match solution_at(b, gamma)? {
        Solution::Ghost(g) => Ok(g),
        Solution::Regular(_) => Err(TrimerError::InvalidParameter(format!(
            "{label} is not a ghost branch"
        ))),
    }
}

pub fn regular_at(study: &RegularStudy, label: &str, gamma: f64) -> Result<StationaryPoint> {
    let b = study
        .branch(label)
        .ok_or_else(|| TrimerError::InvalidParameter(format!("no branch {label}")))?;
    match solution_at(b, gamma)? {
        Solution::Regular(p) => Ok(p),
        Solution::Ghost(_) => Err(TrimerError::InvalidParameter(format!(
            "{label} is not a regular branch"
        ))),
    }
}

/// Complex propagation constant of a branch point.
pub fn propagation_value(p: &BranchPoint) -> Complex64 {
    p.solution.propagation().value()
}
