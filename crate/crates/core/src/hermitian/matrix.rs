//! Small dense complex matrices (n <= 4) stored inline.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// General complex square matrix, row-major, at most 4x4.
#[derive(Clone, Copy, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    a: [Complex64; MAX_DIM * MAX_DIM],
}

impl std::fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut rows = f.debug_list();
        for i in 0..self.n {
            rows.entry(&(0..self.n).map(|j| self[(i, j)]).collect::<Vec<_>>());
        }
        rows.finish()
    }
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "dimension {n} out of range");
        Self { n, a: [ZERO; MAX_DIM * MAX_DIM] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)] * s)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Max-row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self[(i, j)].norm());
            }
        }
        m
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> Complex64 {
        let n = self.n;
        match n {
            1 => return self.a[0],
            2 => return self.a[0] * self.a[MAX_DIM + 1] - self.a[1] * self.a[MAX_DIM],
            _ => {}
        }
        let mut m = *self;
        let mut det = ONE;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| m[(x, k)].norm().total_cmp(&m[(y, k)].norm()))
                .unwrap();
            if m[(p, k)] == ZERO {
                return ZERO;
            }
            if p != k {
                for j in 0..n {
                    let t = m[(k, j)];
                    m[(k, j)] = m[(p, j)];
                    m[(p, j)] = t;
                }
                det = -det;
            }
            let pivot = m[(k, k)];
            det *= pivot;
            for i in (k + 1)..n {
                let f = m[(i, k)] / pivot;
                for j in k..n {
                    let v = m[(k, j)];
                    m[(i, j)] -= f * v;
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut m = *self;
        let mut inv = Self::identity(n);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| m[(x, k)].norm().total_cmp(&m[(y, k)].norm()))
                .unwrap();
            if m[(p, k)].norm() == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    m.a.swap(k * MAX_DIM + j, p * MAX_DIM + j);
                    inv.a.swap(k * MAX_DIM + j, p * MAX_DIM + j);
                }
            }
            let pivot = m[(k, k)].inv();
            for j in 0..n {
                m[(k, j)] *= pivot;
                inv[(k, j)] *= pivot;
            }
            for i in 0..n {
                if i != k {
                    let f = m[(i, k)];
                    if f != ZERO {
                        for j in 0..n {
                            let mv = m[(k, j)];
                            let iv = inv[(k, j)];
                            m[(i, j)] -= f * mv;
                            inv[(i, j)] -= f * iv;
                        }
                    }
                }
            }
        }
        Some(inv)
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.n && j < self.n);
        &self.a[i * MAX_DIM + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.n && j < self.n);
        &mut self.a[i * MAX_DIM + j]
    }
}

impl Mul for SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for SquareMatrix {
    type Output = SquareMatrix;
    fn add(self, rhs: SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, rhs.n);
        SquareMatrix::from_fn(self.n, |i, j| self[(i, j)] + rhs[(i, j)])
    }
}

impl Sub for SquareMatrix {
    type Output = SquareMatrix;
    fn sub(self, rhs: SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, rhs.n);
        SquareMatrix::from_fn(self.n, |i, j| self[(i, j)] - rhs[(i, j)])
    }
}

/// Complex Hermitian matrix. Holds the coefficients `a_{j k̄}` of a real
/// (1,1)-form in a holomorphic frame.
///
/// Construction symmetrizes `(A + A^H) / 2`, so the stored matrix is exactly
/// Hermitian (real diagonal, conjugate-symmetric off-diagonal).
#[derive(Clone, Copy, PartialEq)]
pub struct HermitianMatrix(SquareMatrix);

impl std::fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl HermitianMatrix {
    /// Builds from row-major entries, symmetrizing.
    pub fn from_entries(n: usize, entries: &[Complex64]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) {
            return Err(Error::BadDimension(n));
        }
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: entries.len() });
        }
        Ok(Self::symmetrize(&SquareMatrix::from_fn(n, |i, j| entries[i * n + j])))
    }

    pub fn symmetrize(m: &SquareMatrix) -> Self {
        let n = m.dim();
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            out[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        Self(out)
    }

    pub fn zeros(n: usize) -> Self {
        Self(SquareMatrix::zeros(n))
    }

    pub fn identity(n: usize) -> Self {
        Self(SquareMatrix::identity(n))
    }

    pub fn from_real_diag(values: &[f64]) -> Self {
        Self(SquareMatrix::diag(values))
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Self(SquareMatrix::identity(n).scale(Complex64::new(s, 0.0)))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    #[inline]
    pub fn as_matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(Complex64::new(s, 0.0)))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        Self(self.0 + other.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        Self(self.0 - other.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.norm_inf()
    }

    /// Frobenius inner product `tr(A B)`, real for Hermitian arguments.
    pub fn pair(&self, other: &HermitianMatrix) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += (self.get(i, j) * other.get(j, i)).re;
            }
        }
        s
    }

    /// Lower-triangular Cholesky factor `L` with `A = L L^H`.
    pub fn cholesky(&self) -> Result<SquareMatrix> {
        let n = self.dim();
        let mut l = SquareMatrix::zeros(n);
        for j in 0..n {
            let mut d = self.get(j, j).re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > super::PD_PIVOT_TOL) {
                return Err(Error::NotPositiveDefinite { pivot: d, index: None });
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }
}

/// Inverse of a lower-triangular matrix by forward substitution.
pub(crate) fn lower_inverse(l: &SquareMatrix) -> SquareMatrix {
    let n = l.dim();
    let mut inv = SquareMatrix::zeros(n);
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { ONE } else { ZERO };
            for k in col..i {
                s -= l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = s / l[(i, i)];
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn symmetrization_makes_hermitian() {
        let m = HermitianMatrix::from_entries(2, &[c(1.0, 0.3), c(2.0, 1.0), c(0.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert_eq!(m.get(0, 0), c(1.0, 0.0));
        assert_eq!(m.get(0, 1), c(1.0, 0.5));
        assert_eq!(m.get(1, 0), c(1.0, -0.5));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(HermitianMatrix::from_entries(5, &[c(0.0, 0.0); 25]), Err(Error::BadDimension(5))));
        assert!(matches!(
            HermitianMatrix::from_entries(2, &[c(0.0, 0.0); 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = HermitianMatrix::from_entries(
            3,
            &[c(4.0, 0.0), c(1.0, 1.0), c(0.0, -0.5), c(1.0, -1.0), c(3.0, 0.0), c(0.2, 0.0), c(0.0, 0.5), c(0.2, 0.0), c(2.0, 0.0)],
        )
        .unwrap();
        let l = a.cholesky().unwrap();
        let r = l * l.adjoint() - *a.as_matrix();
        assert!(r.max_abs() < 1e-14);
        let li = lower_inverse(&l);
        assert!((li * l - SquareMatrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = HermitianMatrix::from_real_diag(&[1.0, -1.0]);
        assert!(matches!(a.cholesky(), Err(Error::NotPositiveDefinite { .. })));
        assert!(!HermitianMatrix::zeros(2).is_positive_definite());
    }

    #[test]
    fn det_and_inverse() {
        let m = SquareMatrix::from_fn(3, |i, j| c((i * 3 + j) as f64 + 1.0, (i as f64) - (j as f64)) + if i == j { c(5.0, 0.0) } else { c(0.0, 0.0) });
        let inv = m.inverse().unwrap();
        assert!((m * inv - SquareMatrix::identity(3)).max_abs() < 1e-13);
        let d = m.det();
        assert!((d * inv.det() - c(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(SquareMatrix::diag(&[2.0, 3.0]).det(), c(6.0, 0.0));
    }
}
