//! Small dense linear algebra: complex Hessenberg/QR eigenvalues, Householder
//! reflectors, the matrix exponential, and real linear solves.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, TrimerError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major dense complex square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self[(i, l)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(l, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn conj_transpose(&self) -> Self {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Trailing principal submatrix starting at `start`.
    pub fn trailing(&self, start: usize) -> Self {
        let m = self.n - start;
        let mut out = Self::zeros(m);
        for i in 0..m {
            for j in 0..m {
                out[(i, j)] = self[(start + i, start + j)];
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Householder reflector `H = I - 2 w w^H` (unitary, Hermitian) with
/// `H x = alpha e_0`, `|alpha| = |x|`.
#[derive(Clone, Debug)]
pub struct Householder {
    w: Vec<Complex64>,
}

impl Householder {
    pub fn annihilating(x: &[Complex64]) -> Self {
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut w = x.to_vec();
        if norm == 0.0 {
            return Self {
                w: vec![ZERO; x.len()],
            };
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            ONE
        };
        // alpha = -phase * norm avoids cancellation in w[0]
        w[0] += phase * norm;
        let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut w {
            *z /= wn;
        }
        Self { w }
    }

    /// Applies `H` to rows `offset..offset+len` of `m` from the left.
    fn apply_left(&self, m: &mut ComplexMatrix, offset: usize, cols: std::ops::Range<usize>) {
        for j in cols {
            let dot: Complex64 = (0..self.w.len())
                .map(|i| self.w[i].conj() * m[(offset + i, j)])
                .sum();
            for i in 0..self.w.len() {
                m[(offset + i, j)] -= 2.0 * self.w[i] * dot;
            }
        }
    }

    /// Applies `H` to columns `offset..offset+len` of `m` from the right.
    fn apply_right(&self, m: &mut ComplexMatrix, offset: usize, rows: std::ops::Range<usize>) {
        for i in rows {
            let dot: Complex64 = (0..self.w.len())
                .map(|j| m[(i, offset + j)] * self.w[j])
                .sum();
            for j in 0..self.w.len() {
                m[(i, offset + j)] -= 2.0 * dot * self.w[j].conj();
            }
        }
    }

    /// Unitary similarity `H M H`.
    pub fn similarity(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = m.clone();
        let n = m.dim();
        self.apply_left(&mut out, 0, 0..n);
        self.apply_right(&mut out, 0, 0..n);
        out
    }
}

/// Reduces `m` to upper Hessenberg form by Householder similarities.
pub fn hessenberg(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.dim();
    let mut h = m.clone();
    for col in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (col + 1..n).map(|i| h[(i, col)]).collect();
        if x[1..].iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        let hh = Householder::annihilating(&x);
        hh.apply_left(&mut h, col + 1, col..n);
        hh.apply_right(&mut h, col + 1, 0..n);
        for i in col + 2..n {
            h[(i, col)] = ZERO;
        }
    }
    h
}

/// Complex Givens rotation `G = [[c, s], [-conj(s), c]]` with `G [a; b] = [r; 0]`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO);
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

/// All eigenvalues of a complex square matrix: Householder reduction to
/// Hessenberg form, then single-shift QR with Wilkinson shifts and deflation.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    if !m.is_finite() {
        return Err(TrimerError::NonFinite);
    }
    let n = m.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = hessenberg(m);
    let mut eig = vec![ZERO; n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let max_iter = 60 * n;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // locate the active unreduced block [lo, hi]
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let scale = if diag > 0.0 { diag } else { m.max_abs() };
            if sub <= f64::EPSILON * scale {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > max_iter {
            return Err(TrimerError::NoConvergence {
                iterations: iter,
                residual: h[(hi, hi - 1)].norm(),
            });
        }
        let shift = if iter.is_multiple_of(11) {
            // exceptional shift
            h[(hi, hi)] + Complex64::new(h[(hi, hi - 1)].norm(), 0.0) * 1.5
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        qr_step(&mut h, lo, hi, shift);
    }
    Ok(eig)
}

/// Eigenvalue of the trailing 2x2 block closest to its bottom-right entry.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn qr_step(h: &mut ComplexMatrix, lo: usize, hi: usize, shift: Complex64) {
    for j in lo..=hi {
        h[(j, j)] -= shift;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for j in lo..hi {
        let (c, s) = givens(h[(j, j)], h[(j + 1, j)]);
        for col in j..=hi {
            let x = h[(j, col)];
            let y = h[(j + 1, col)];
            h[(j, col)] = c * x + s * y;
            h[(j + 1, col)] = -s.conj() * x + c * y;
        }
        h[(j + 1, j)] = ZERO;
        rots.push((c, s));
    }
    for (idx, &(c, s)) in rots.iter().enumerate() {
        let j = lo + idx;
        for row in lo..=(j + 1).min(hi) {
            let x = h[(row, j)];
            let y = h[(row, j + 1)];
            h[(row, j)] = x * c + y * s.conj();
            h[(row, j + 1)] = -x * s + y * c;
        }
    }
    for j in lo..=hi {
        h[(j, j)] += shift;
    }
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.dim();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a = m.scale(Complex64::new(0.5f64.powi(squarings), 0.0));
    // |a| <= 1/2: 20 terms put the truncation error below 1e-25
    let mut term = ComplexMatrix::identity(n);
    let mut sum = ComplexMatrix::identity(n);
    for p in 1..=20 {
        term = term.matmul(&a).scale(Complex64::new(1.0 / p as f64, 0.0));
        sum = sum.add(&term);
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

/// Solves the real square system `a x = b` by LU with partial pivoting.
pub fn solve_real(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mat = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let rhs = DVector::from_column_slice(b);
    let x = mat.lu().solve(&rhs)?;
    if x.iter().all(|v| v.is_finite()) {
        Some(x.iter().copied().collect())
    } else {
        None
    }
}

/// Determinant of a small real square matrix.
pub fn det_real(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| a[i][j]).determinant()
}

/// Unit eigenvector for the eigenvalue estimate `lambda` by inverse
/// iteration on `m - (lambda + shift) I`.
pub fn eigenvector(m: &ComplexMatrix, lambda: Complex64) -> Result<Vec<Complex64>> {
    let n = m.dim();
    let shift = lambda + Complex64::new(1e-10 * (1.0 + lambda.norm()), 0.0);
    let a = DMatrix::from_fn(
        n,
        n,
        |i, j| if i == j { m[(i, j)] - shift } else { m[(i, j)] },
    );
    let lu = a.lu();
    let mut v = DVector::from_fn(n, |i, _| {
        Complex64::new(1.0 + 0.1 * i as f64, 0.05 * i as f64)
    });
    for _ in 0..8 {
        v = lu
            .solve(&v)
            .ok_or(TrimerError::Inconsistent("singular shifted matrix".into()))?;
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(TrimerError::NonFinite);
        }
        v /= Complex64::new(norm, 0.0);
    }
    Ok(v.iter().copied().collect())
}

/// Central finite-difference Jacobian of `f: R^n -> R^m` with the step
/// `rel_step * (1 + |x_j|)` per coordinate.
pub fn fd_jacobian<F>(f: F, x: &[f64], rel_step: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut cols = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let h = rel_step * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let fp = f(&xp)?;
        xp[j] = x[j] - h;
        let fm = f(&xp)?;
        xp[j] = x[j];
        cols.push(
            fp.iter()
                .zip(&fm)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect::<Vec<_>>(),
        );
    }
    let m = cols.first().map_or(0, Vec::len);
    Ok((0..m)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect())
}
