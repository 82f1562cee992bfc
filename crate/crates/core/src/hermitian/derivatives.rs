//! First and second derivatives of eigenvalues and of spectral functions
//! `F(Λ) = f(λ(Λ))`, evaluated at a diagonal matrix with distinct
//! eigenvalues. Index `(p, q)` refers to the entry `Λ_{p q̄}`.

use num_complex::Complex64;

use super::matrix::HermitianMatrix;
use crate::error::{Error, Result};

/// Minimum eigenvalue gap for the closed-form derivative formulas.
pub const DISTINCT_TOL: f64 = 1e-6;

/// Dense derivative tensors of a scalar function of `Λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDerivatives {
    n: usize,
    first: Vec<Complex64>,
    second: Vec<Complex64>,
}

impl SpectralDerivatives {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            first: vec![Complex64::new(0.0, 0.0); n * n],
            second: vec![Complex64::new(0.0, 0.0); n * n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `F^{ij}`.
    pub fn first(&self, i: usize, j: usize) -> Complex64 {
        self.first[i * self.n + j]
    }

    /// `F^{ij,rs}`.
    pub fn second(&self, i: usize, j: usize, r: usize, s: usize) -> Complex64 {
        let n = self.n;
        self.second[((i * n + j) * n + r) * n + s]
    }

    fn second_mut(&mut self, i: usize, j: usize, r: usize, s: usize) -> &mut Complex64 {
        let n = self.n;
        &mut self.second[((i * n + j) * n + r) * n + s]
    }

    /// `Σ F^{ij} H_{ij}`: first derivative along the direction `H`.
    pub fn apply_first(&self, h: &HermitianMatrix) -> Complex64 {
        let n = self.n;
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                s += self.first(i, j) * h.get(i, j);
            }
        }
        s
    }

    /// `Σ F^{ij,rs} H_{ij} K_{rs}`: mixed second derivative along `H`, `K`.
    pub fn apply_second(&self, h: &HermitianMatrix, k: &HermitianMatrix) -> Complex64 {
        let n = self.n;
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let hij = h.get(i, j);
                for r in 0..n {
                    for q in 0..n {
                        s += self.second(i, j, r, q) * hij * k.get(r, q);
                    }
                }
            }
        }
        s
    }
}

/// Derivatives of a single eigenvalue: `λ_i^{pq}` and `λ_i^{pq,rs}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueDerivatives {
    pub lambdas: Vec<f64>,
    /// One tensor per eigenvalue index `i`.
    pub per_eigenvalue: Vec<SpectralDerivatives>,
}

/// Diagonal entries of `Λ` after checking it is diagonal with distinct entries.
fn distinct_diagonal(lambda: &HermitianMatrix) -> Result<Vec<f64>> {
    let n = lambda.dim();
    for i in 0..n {
        for j in 0..n {
            if i != j && lambda.get(i, j).norm() > 0.0 {
                return Err(Error::PreconditionFailed(format!(
                    "matrix is not diagonal: entry ({i},{j}) = {}",
                    lambda.get(i, j)
                )));
            }
        }
    }
    let d: Vec<f64> = (0..n).map(|i| lambda.get(i, i).re).collect();
    let mut gap = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            gap = gap.min((d[i] - d[j]).abs());
        }
    }
    if gap < DISTINCT_TOL {
        return Err(Error::DegenerateSpectrum { gap, tol: DISTINCT_TOL });
    }
    Ok(d)
}

fn kd(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Eigenvalue derivatives at a diagonal matrix with distinct eigenvalues:
/// `λ_i^{pq} = δ_{pi} δ_{qi}` and
/// `λ_i^{pq,rs} = (1-δ_{ip}) δ_{iq} δ_{ir} δ_{ps} / (λ_i - λ_p)
///              + (1-δ_{ir}) δ_{is} δ_{ip} δ_{rq} / (λ_i - λ_r)`.
pub fn eigenvalue_derivatives(lambda: &HermitianMatrix) -> Result<EigenvalueDerivatives> {
    let d = distinct_diagonal(lambda)?;
    let n = d.len();
    let per_eigenvalue = (0..n)
        .map(|i| {
            let mut t = SpectralDerivatives::zeros(n);
            t.first[i * n + i] = Complex64::new(1.0, 0.0);
            for p in 0..n {
                for q in 0..n {
                    for r in 0..n {
                        for s in 0..n {
                            let mut v = 0.0;
                            if p != i {
                                v += kd(i, q) * kd(i, r) * kd(p, s) / (d[i] - d[p]);
                            }
                            if r != i {
                                v += kd(i, s) * kd(i, p) * kd(r, q) / (d[i] - d[r]);
                            }
                            if v != 0.0 {
                                *t.second_mut(p, q, r, s) = Complex64::new(v, 0.0);
                            }
                        }
                    }
                }
            }
            t
        })
        .collect();
    Ok(EigenvalueDerivatives { lambdas: d, per_eigenvalue })
}

/// The concrete spectral functions whose derivatives the estimates use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralFunction {
    /// `f(λ) = Σ arctan λ_i`.
    ArctanSum,
    /// `g(λ) = log(C_ε + λ_max)`.
    LogMax { c_eps: f64 },
}

impl SpectralFunction {
    pub fn value(&self, lambdas: &[f64]) -> f64 {
        match *self {
            SpectralFunction::ArctanSum => lambdas.iter().map(|l| l.atan()).sum(),
            SpectralFunction::LogMax { c_eps } => {
                (c_eps + lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max)).ln()
            }
        }
    }

    /// Gradient `f_i` and Hessian `f_{ij}` in eigenvalue space.
    fn gradient_hessian(&self, d: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = d.len();
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        match *self {
            SpectralFunction::ArctanSum => {
                for i in 0..n {
                    let s = 1.0 + d[i] * d[i];
                    grad[i] = 1.0 / s;
                    hess[i * n + i] = -2.0 * d[i] / (s * s);
                }
            }
            SpectralFunction::LogMax { c_eps } => {
                let top = (0..n).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
                let denom = c_eps + d[top];
                grad[top] = 1.0 / denom;
                hess[top * n + top] = -1.0 / (denom * denom);
            }
        }
        (grad, hess)
    }
}

/// `F^{ij} = δ_{ij} f_i` and
/// `F^{ij,rs} = f_{ir} δ_{ij} δ_{rs} + (f_i - f_j)/(λ_i - λ_j) (1-δ_{ij}) δ_{is} δ_{jr}`.
pub fn spectral_function_derivatives(func: SpectralFunction, lambda: &HermitianMatrix) -> Result<SpectralDerivatives> {
    if let SpectralFunction::LogMax { c_eps } = func {
        if !(c_eps > 0.0) {
            return Err(Error::PreconditionFailed(format!("C_eps must be positive, got {c_eps}")));
        }
    }
    let d = distinct_diagonal(lambda)?;
    let n = d.len();
    let (grad, hess) = func.gradient_hessian(&d);
    let mut t = SpectralDerivatives::zeros(n);
    for i in 0..n {
        t.first[i * n + i] = Complex64::new(grad[i], 0.0);
    }
    for i in 0..n {
        for r in 0..n {
            *t.second_mut(i, i, r, r) = Complex64::new(hess[i * n + r], 0.0);
        }
        for j in 0..n {
            if i != j {
                *t.second_mut(i, j, j, i) = Complex64::new((grad[i] - grad[j]) / (d[i] - d[j]), 0.0);
            }
        }
    }
    Ok(t)
}

/// Elementary symmetric polynomial `σ_k(λ)`, from the coefficients of
/// `Π (1 + λ_i t)`.
pub fn sigma_k(lambdas: &[f64], k: usize) -> Result<f64> {
    let n = lambdas.len();
    if k == 0 || k > n {
        return Err(Error::BadIndex { index: k, max: n });
    }
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (m, &l) in lambdas.iter().enumerate() {
        for j in (1..=m + 1).rev() {
            e[j] += l * e[j - 1];
        }
    }
    Ok(e[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::eigen::{eig_pair, theta_arctan};
    use crate::hermitian::matrix::SquareMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> HermitianMatrix {
        HermitianMatrix::symmetrize(&SquareMatrix::from_fn(n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        }))
    }

    fn eigvals(m: &HermitianMatrix) -> Vec<f64> {
        eig_pair(&HermitianMatrix::identity(m.dim()), m).unwrap().lambdas().to_vec()
    }

    /// Eigenvalue `i` of a perturbation of a diagonal matrix, tracked by
    /// proximity to the unperturbed value.
    fn tracked(m: &HermitianMatrix, target: f64) -> f64 {
        eigvals(m).into_iter().min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs())).unwrap()
    }

    fn mixed_fd(f: impl Fn(&HermitianMatrix) -> f64, base: &HermitianMatrix, h: &HermitianMatrix, k: &HermitianMatrix, step: f64) -> f64 {
        let at = |a: f64, b: f64| f(&base.add(&h.scale(a)).add(&k.scale(b)));
        (at(step, step) - at(step, -step) - at(-step, step) + at(-step, -step)) / (4.0 * step * step)
    }

    #[test]
    fn first_eigen_derivative_is_unit() {
        let d = eigenvalue_derivatives(&HermitianMatrix::from_real_diag(&[3.0, 1.0])).unwrap();
        let t = &d.per_eigenvalue[0];
        for p in 0..2 {
            for q in 0..2 {
                let want = if p == 0 && q == 0 { 1.0 } else { 0.0 };
                assert_eq!(t.first(p, q).re, want);
            }
        }
    }

    #[test]
    fn degenerate_spectrum_rejected() {
        assert!(matches!(
            eigenvalue_derivatives(&HermitianMatrix::from_real_diag(&[1.0, 1.0])),
            Err(Error::DegenerateSpectrum { .. })
        ));
        assert!(matches!(
            spectral_function_derivatives(SpectralFunction::ArctanSum, &HermitianMatrix::identity(3)),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn second_eigen_derivative_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = HermitianMatrix::from_real_diag(&[3.0, 1.0]);
        let d = eigenvalue_derivatives(&base).unwrap();
        for _ in 0..20 {
            let h = random_hermitian(&mut rng, 2);
            let k = random_hermitian(&mut rng, 2);
            for (i, &li) in d.lambdas.iter().enumerate() {
                let exact = d.per_eigenvalue[i].apply_second(&h, &k).re;
                let fd = mixed_fd(|m| tracked(m, li), &base, &h, &k, 1e-4);
                assert!((fd - exact).abs() <= 1e-4 * exact.abs().max(1.0), "{fd} vs {exact}");
            }
        }
    }

    #[test]
    fn arctan_sum_first_at_zero_is_identity() {
        // Distinct spectrum is required, so evaluate near zero: f_i → 1.
        let t = spectral_function_derivatives(SpectralFunction::ArctanSum, &HermitianMatrix::from_real_diag(&[1e-3, 0.0, -1e-3])).unwrap();
        for i in 0..3 {
            assert!((t.first(i, i).re - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn log_max_first() {
        let t = spectral_function_derivatives(SpectralFunction::LogMax { c_eps: 1.0 }, &HermitianMatrix::from_real_diag(&[2.0, 1.0])).unwrap();
        assert!((t.first(0, 0).re - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.first(1, 1).re, 0.0);
        assert_eq!(t.first(0, 1).re, 0.0);
        assert!(spectral_function_derivatives(SpectralFunction::LogMax { c_eps: 0.0 }, &HermitianMatrix::from_real_diag(&[2.0, 1.0])).is_err());
    }

    #[test]
    fn arctan_sum_second_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base = HermitianMatrix::from_real_diag(&[2.0, 1.0]);
        let t = spectral_function_derivatives(SpectralFunction::ArctanSum, &base).unwrap();
        for _ in 0..20 {
            let h = random_hermitian(&mut rng, 2);
            let k = random_hermitian(&mut rng, 2);
            let exact = t.apply_second(&h, &k).re;
            let fd = mixed_fd(|m| theta_arctan(&eigvals(m)), &base, &h, &k, 1e-4);
            assert!((fd - exact).abs() <= 1e-4 * exact.abs().max(1.0), "{fd} vs {exact}");
        }
    }

    #[test]
    fn sigma_k_examples() {
        assert_eq!(sigma_k(&[2.0, 1.0, 1.0], 1).unwrap(), 4.0);
        assert_eq!(sigma_k(&[2.0, 1.0, 1.0], 2).unwrap(), 5.0);
        assert_eq!(sigma_k(&[2.0, 1.0, 1.0], 3).unwrap(), 2.0);
        assert!(matches!(sigma_k(&[1.0], 2), Err(Error::BadIndex { .. })));
        assert!(matches!(sigma_k(&[1.0], 0), Err(Error::BadIndex { .. })));
    }
}
