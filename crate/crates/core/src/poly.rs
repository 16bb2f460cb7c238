//! Real polynomials and complete real-root isolation on an interval.
//!
//! Roots are isolated by recursion on derivatives: the real roots of `p'`
//! split the interval into pieces on which `p` is monotone, so each piece
//! holds at most one root and a sign test decides it. Every bracketed root
//! is then refined by bisection and polished with Newton steps.

use serde::{Deserialize, Serialize};

/// Coefficients in ascending order of powers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

/// A real root with diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealRoot {
    pub x: f64,
    /// `p'(x)`; small values signal a nearby fold.
    pub derivative: f64,
    /// Another root lies within [`NEAR_DOUBLE_GAP`], or the root is a
    /// tangency of the polynomial with the axis.
    pub near_double: bool,
}

/// Two roots closer than this are flagged as a near-double pair.
pub const NEAR_DOUBLE_GAP: f64 = 1e-6;

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn monomial(degree: usize) -> Self {
        let mut c = vec![0.0; degree + 1];
        c[degree] = 1.0;
        Self::new(c)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and first derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// `sum |c_i| |x|^i`, the natural rounding scale of `eval(x)`.
    pub fn magnitude_scale(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * ax + c.abs())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(0.0);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).copied().unwrap_or(0.0)
                        + other.coeffs.get(i).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Cauchy bound: every root satisfies `|x| <= 1 + max |c_i / c_n|`.
    pub fn cauchy_bound(&self) -> f64 {
        let n = self.degree();
        let lead = self.coeffs[n];
        1.0 + self.coeffs[..n]
            .iter()
            .map(|c| (c / lead).abs())
            .fold(0.0, f64::max)
    }

    /// All real roots in `[lo, hi]`, ascending, polished to
    /// `|p(x)| <= 1e-13 * magnitude_scale(x)` where floating point allows.
    pub fn real_roots_in(&self, lo: f64, hi: f64) -> Vec<RealRoot> {
        let xs = isolate(self, lo, hi);
        let mut roots: Vec<RealRoot> = xs
            .into_iter()
            .map(|(x, tangent)| RealRoot {
                x,
                derivative: self.eval_with_derivative(x).1,
                near_double: tangent,
            })
            .collect();
        for i in 1..roots.len() {
            if roots[i].x - roots[i - 1].x < NEAR_DOUBLE_GAP {
                roots[i].near_double = true;
                roots[i - 1].near_double = true;
            }
        }
        roots
    }
}

/// Returns `(root, is_tangency)` pairs in ascending order.
fn isolate(p: &Polynomial, lo: f64, hi: f64) -> Vec<(f64, bool)> {
    match p.degree() {
        0 => Vec::new(),
        1 => {
            let x = -p.coeffs[0] / p.coeffs[1];
            if (lo..=hi).contains(&x) {
                vec![(x, false)]
            } else {
                Vec::new()
            }
        }
        _ => {
            let crit: Vec<f64> = isolate(&p.derivative(), lo, hi)
                .into_iter()
                .map(|(x, _)| x)
                .collect();
            let mut knots = Vec::with_capacity(crit.len() + 2);
            knots.push(lo);
            knots.extend(crit.iter().copied().filter(|&c| c > lo && c < hi));
            knots.push(hi);

            let mut roots: Vec<(f64, bool)> = Vec::new();
            let tol = |x: f64| 1e-14 * p.magnitude_scale(x);
            for w in knots.windows(2) {
                let (a, b) = (w[0], w[1]);
                let (fa, fb) = (p.eval(a), p.eval(b));
                if fa.abs() <= tol(a) {
                    push_unique(&mut roots, a, is_interior(a, lo, hi));
                    continue;
                }
                if fb.abs() <= tol(b) {
                    continue; // handled as the left knot of the next piece
                }
                if fa.signum() != fb.signum() {
                    push_unique(&mut roots, bracketed_root(p, a, b), false);
                }
            }
            let last = *knots.last().unwrap();
            if p.eval(last).abs() <= tol(last) {
                push_unique(&mut roots, last, false);
            }
            roots
        }
    }
}

fn is_interior(x: f64, lo: f64, hi: f64) -> bool {
    x > lo && x < hi
}

fn push_unique(roots: &mut Vec<(f64, bool)>, x: f64, tangent: bool) {
    if let Some(last) = roots.last_mut() {
        if (x - last.0).abs() <= 1e-15 * (1.0 + x.abs()) {
            last.1 |= tangent;
            return;
        }
    }
    roots.push((x, tangent));
}

/// Root of a monotone piece with a sign change on `[a, b]`.
fn bracketed_root(p: &Polynomial, mut a: f64, mut b: f64) -> f64 {
    let mut fa = p.eval(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = p.eval(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..3 {
        let (f, df) = p.eval_with_derivative(x);
        if df == 0.0 {
            break;
        }
        let next = x - f / df;
        if next < a || next > b || p.eval(next).abs() > f.abs() {
            break;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_roots(rs: &[f64]) -> Polynomial {
        rs.iter().fold(Polynomial::constant(1.0), |acc, &r| {
            acc.mul(&Polynomial::new(vec![-r, 1.0]))
        })
    }

    #[test]
    fn horner_and_derivative() {
        let p = Polynomial::new(vec![1.0, -3.0, 0.0, 2.0]);
        let (v, d) = p.eval_with_derivative(2.0);
        assert_eq!(v, 1.0 - 6.0 + 16.0);
        assert_eq!(d, -3.0 + 24.0);
        assert_eq!(p.derivative().coeffs(), &[-3.0, 0.0, 6.0]);
    }

    #[test]
    fn five_distinct_roots() {
        let want = [0.02, 0.43, 0.45, 0.5, 0.61];
        let p = from_roots(&want);
        let got = p.real_roots_in(0.0, p.cauchy_bound());
        assert_eq!(got.len(), 5);
        for (g, w) in got.iter().zip(&want) {
            assert!((g.x - w).abs() < 1e-12, "{} vs {}", g.x, w);
            assert!(!g.near_double);
        }
    }

    #[test]
    fn close_pair_is_flagged() {
        let p = from_roots(&[0.3, 0.3 + 4e-7, 2.0]);
        let got = p.real_roots_in(-5.0, 5.0);
        assert_eq!(got.len(), 3);
        assert!(got[0].near_double && got[1].near_double && !got[2].near_double);
    }

    #[test]
    fn exact_double_root_is_reported_once() {
        // (x-1)^2 (x+2)
        let p = from_roots(&[1.0, 1.0, -2.0]);
        let got = p.real_roots_in(-3.0, 3.0);
        assert_eq!(got.len(), 2);
        assert!((got[1].x - 1.0).abs() < 1e-12);
        assert!(got[1].near_double);
    }

    #[test]
    fn no_real_roots() {
        let p = Polynomial::new(vec![1.0, 0.0, 1.0]);
        assert!(p.real_roots_in(-10.0, 10.0).is_empty());
    }

    #[test]
    fn cauchy_bound_encloses_roots() {
        let p = from_roots(&[-7.5, 0.1, 3.0]);
        assert!(p.cauchy_bound() >= 7.5);
    }
}
