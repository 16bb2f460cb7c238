//! Pseudo-arclength predictor-corrector for curves `F(y, gamma) = 0`,
//! `F: R^{n+1} -> R^n`, with finite-difference Jacobians.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TrimerError};
use crate::linalg::{fd_jacobian, solve_real};

/// A one-parameter family of equations in `n` unknowns.
pub trait CurveProblem {
    fn dim(&self) -> usize;

    fn residual(&self, state: &[f64], gamma: f64) -> Result<Vec<f64>>;

    /// Ends the trace at an accepted point.
    fn stop_reason(&self, _state: &[f64], _gamma: f64) -> Option<String> {
        None
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArclengthOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub max_points: usize,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub fd_step: f64,
}

impl Default for ArclengthOptions {
    fn default() -> Self {
        Self {
            initial_step: 1e-2,
            min_step: 1e-6,
            max_step: 5e-3,
            gamma_min: 0.0,
            gamma_max: 2.0,
            max_points: 20_000,
            newton_tol: 1e-12,
            max_newton: 10,
            fd_step: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub state: Vec<f64>,
    pub gamma: f64,
    /// Unit tangent in `(state, gamma)`; the last entry is `d gamma / ds`.
    pub tangent: Vec<f64>,
}

impl CurvePoint {
    pub fn dgamma_ds(&self) -> f64 {
        *self.tangent.last().unwrap()
    }

    fn augmented(&self) -> Vec<f64> {
        let mut y = self.state.clone();
        y.push(self.gamma);
        y
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EndReason {
    GammaBound,
    StepFloor { residual: f64 },
    MaxPoints,
    Stopped(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub points: Vec<CurvePoint>,
    pub end: EndReason,
}

fn split(y: &[f64]) -> (&[f64], f64) {
    let (s, g) = y.split_at(y.len() - 1);
    (s, g[0])
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn augmented_jacobian<P: CurveProblem>(p: &P, y: &[f64], fd_step: f64) -> Result<Vec<Vec<f64>>> {
    fd_jacobian(
        |z| {
            let (s, g) = split(z);
            p.residual(s, g)
        },
        y,
        fd_step,
    )
}

/// Unit null vector of the `n x (n+1)` Jacobian, oriented along `hint`.
fn tangent_at<P: CurveProblem>(p: &P, y: &[f64], hint: &[f64], fd_step: f64) -> Result<Vec<f64>> {
    let mut rows = augmented_jacobian(p, y, fd_step)?;
    rows.push(hint.to_vec());
    let mut rhs = vec![0.0; y.len()];
    *rhs.last_mut().unwrap() = 1.0;
    let z = solve_real(&rows, &rhs).ok_or_else(|| {
        TrimerError::Inconsistent("singular bordered system while computing a tangent".into())
    })?;
    let norm = dot(&z, &z).sqrt();
    let sign = if dot(&z, hint) < 0.0 { -1.0 } else { 1.0 };
    Ok(z.iter().map(|v| sign * v / norm).collect())
}

/// Newton at fixed `gamma`.
pub fn correct_at_gamma<P: CurveProblem>(
    p: &P,
    guess: &[f64],
    gamma: f64,
    opts: &ArclengthOptions,
) -> Result<Vec<f64>> {
    let mut x = guess.to_vec();
    let mut res = max_abs(&p.residual(&x, gamma)?);
    for _ in 0..opts.max_newton.max(20) {
        if res <= opts.newton_tol {
            return Ok(x);
        }
        let jac = fd_jacobian(|s| p.residual(s, gamma), &x, opts.fd_step)?;
        let f = p.residual(&x, gamma)?;
        let dx = solve_real(&jac, &f).ok_or(TrimerError::NoConvergence {
            iterations: 0,
            residual: res,
        })?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi -= d;
        }
        res = max_abs(&p.residual(&x, gamma)?);
    }
    if res <= opts.newton_tol * 10.0 {
        Ok(x)
    } else {
        Err(TrimerError::NoConvergence {
            iterations: opts.max_newton,
            residual: res,
        })
    }
}

/// Keller corrector: `F(y) = 0`, `t . (y - y_pred) = 0`.
fn correct_keller<P: CurveProblem>(
    p: &P,
    pred: &[f64],
    t: &[f64],
    opts: &ArclengthOptions,
) -> Result<(Vec<f64>, usize)> {
    let mut y = pred.to_vec();
    for it in 0..opts.max_newton {
        let (s, g) = split(&y);
        let f = p.residual(s, g)?;
        let arc = dot(
            t,
            &y.iter().zip(pred).map(|(a, b)| a - b).collect::<Vec<_>>(),
        );
        if max_abs(&f) <= opts.newton_tol && arc.abs() <= opts.newton_tol {
            return Ok((y, it));
        }
        let mut rows = augmented_jacobian(p, &y, opts.fd_step)?;
        rows.push(t.to_vec());
        let mut rhs = f;
        rhs.push(arc);
        let dy = solve_real(&rows, &rhs).ok_or(TrimerError::NoConvergence {
            iterations: it,
            residual: f64::NAN,
        })?;
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi -= d;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(TrimerError::NonFinite);
        }
    }
    let (s, g) = split(&y);
    let res = max_abs(&p.residual(s, g)?);
    if res <= opts.newton_tol {
        Ok((y, opts.max_newton))
    } else {
        Err(TrimerError::NoConvergence {
            iterations: opts.max_newton,
            residual: res,
        })
    }
}

/// Starts a curve point at a converged `(state, gamma)`.
///
/// `direction` is a tangent hint in `(state, gamma)` coordinates, e.g.
/// `(0, .., 0, 1)` for increasing `gamma`.
pub fn start_point<P: CurveProblem>(
    p: &P,
    state: &[f64],
    gamma: f64,
    direction: &[f64],
    opts: &ArclengthOptions,
) -> Result<CurvePoint> {
    let mut y = state.to_vec();
    y.push(gamma);
    let tangent = tangent_at(p, &y, direction, opts.fd_step)?;
    Ok(CurvePoint {
        state: state.to_vec(),
        gamma,
        tangent,
    })
}

/// Takes one corrected arclength step of length `h` from `from`.
pub fn step_from<P: CurveProblem>(
    p: &P,
    from: &CurvePoint,
    h: f64,
    opts: &ArclengthOptions,
) -> Result<(CurvePoint, usize)> {
    let y0 = from.augmented();
    let pred: Vec<f64> = y0
        .iter()
        .zip(&from.tangent)
        .map(|(y, t)| y + h * t)
        .collect();
    let (y, iters) = correct_keller(p, &pred, &from.tangent, opts)?;
    let tangent = tangent_at(p, &y, &from.tangent, opts.fd_step)?;
    let (s, g) = split(&y);
    Ok((
        CurvePoint {
            state: s.to_vec(),
            gamma: g,
            tangent,
        },
        iters,
    ))
}

/// Traces the curve from `start` until a `gamma` bound, a stop condition,
/// or the step floor.
pub fn trace<P: CurveProblem>(p: &P, start: CurvePoint, opts: &ArclengthOptions) -> Result<Curve> {
    let mut points = vec![start];
    let mut h = opts.initial_step;
    loop {
        if points.len() >= opts.max_points {
            return Ok(Curve {
                points,
                end: EndReason::MaxPoints,
            });
        }
        let last = points.last().unwrap().clone();
        let attempt = step_from(p, &last, h, opts);
        let accepted = match attempt {
            Ok((pt, iters)) => {
                // reject steps that jump or reverse orientation
                let turn = dot(&pt.tangent, &last.tangent);
                let dist = pt
                    .augmented()
                    .iter()
                    .zip(last.augmented())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if turn < 0.8 || dist > 2.0 * h {
                    None
                } else {
                    Some((pt, iters))
                }
            }
            Err(_) => None,
        };
        let Some((pt, iters)) = accepted else {
            h *= 0.5;
            if h < opts.min_step {
                let residual = max_abs(&p.residual(&last.state, last.gamma)?);
                return Ok(Curve {
                    points,
                    end: EndReason::StepFloor { residual },
                });
            }
            continue;
        };

        if pt.gamma > opts.gamma_max || pt.gamma < opts.gamma_min {
            let bound = if pt.gamma > opts.gamma_max {
                opts.gamma_max
            } else {
                opts.gamma_min
            };
            let w = (bound - last.gamma) / (pt.gamma - last.gamma);
            let guess: Vec<f64> = last
                .state
                .iter()
                .zip(&pt.state)
                .map(|(a, b)| a + w * (b - a))
                .collect();
            if let Ok(state) = correct_at_gamma(p, &guess, bound, opts) {
                let mut y = state.clone();
                y.push(bound);
                if let Ok(tangent) = tangent_at(p, &y, &last.tangent, opts.fd_step) {
                    points.push(CurvePoint {
                        state,
                        gamma: bound,
                        tangent,
                    });
                }
            }
            return Ok(Curve {
                points,
                end: EndReason::GammaBound,
            });
        }
        if let Some(reason) = p.stop_reason(&pt.state, pt.gamma) {
            return Ok(Curve {
                points,
                end: EndReason::Stopped(reason),
            });
        }
        points.push(pt);
        if iters <= 2 {
            h = (h * 2.0).min(opts.max_step);
        } else if iters >= 5 {
            h *= 0.5;
        }
    }
}

/// Arclength from `a` to `b` measured along the tangent of `a`.
pub fn arclength_between(a: &CurvePoint, b: &CurvePoint) -> f64 {
    let da: Vec<f64> = b
        .augmented()
        .iter()
        .zip(a.augmented())
        .map(|(x, y)| x - y)
        .collect();
    dot(&a.tangent, &da)
}

/// Bisects along the curve between consecutive points `a` and `b` for the
/// change of a boolean test, until the bracket is narrower than `gamma_tol`
/// in `gamma` (or the arclength bracket collapses). Returns the two bracket
/// points `(before, after)`.
pub fn bisect_along<P, T>(
    p: &P,
    a: &CurvePoint,
    b: &CurvePoint,
    test: T,
    gamma_tol: f64,
    opts: &ArclengthOptions,
) -> Result<(CurvePoint, CurvePoint)>
where
    P: CurveProblem,
    T: Fn(&CurvePoint) -> Result<bool>,
{
    let t_a = test(a)?;
    let mut lo = 0.0;
    let mut hi = arclength_between(a, b);
    let mut lo_pt = a.clone();
    let mut hi_pt = b.clone();
    for _ in 0..80 {
        if (hi_pt.gamma - lo_pt.gamma).abs() <= gamma_tol && hi - lo <= 1e3 * gamma_tol {
            break;
        }
        if hi - lo < 1e-13 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (pt, _) = step_from(p, a, mid, opts)?;
        if test(&pt)? == t_a {
            lo = mid;
            lo_pt = pt;
        } else {
            hi = mid;
            hi_pt = pt;
        }
    }
    Ok((lo_pt, hi_pt))
}
