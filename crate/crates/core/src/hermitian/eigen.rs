//! Generalized eigenvalues of a Hermitian pencil `(ω, χ)` and the
//! Lagrangian angle in its two forms.

use num_complex::Complex64;

use super::matrix::{lower_inverse, HermitianMatrix, SquareMatrix, MAX_DIM};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Eigen-decomposition of `ω^{-1} χ`.
///
/// `transform` is a `W` with `W^H ω W = Id` and `W^H χ W = diag(lambdas)`;
/// its columns are the eigenvectors, ordered like `lambdas` (descending).
#[derive(Debug, Clone, Copy)]
pub struct EigenSystem {
    n: usize,
    lambdas: [f64; MAX_DIM],
    transform: SquareMatrix,
}

impl EigenSystem {
    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas[..self.n]
    }

    #[inline]
    pub fn transform(&self) -> &SquareMatrix {
        &self.transform
    }

    /// Assembles `W diag(f(λ)) W^H`.
    pub fn spectral_form(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.n;
        let w = &self.transform;
        let mut out = SquareMatrix::zeros(n);
        for k in 0..n {
            let fk = f(self.lambdas[k]);
            for i in 0..n {
                let wik = w[(i, k)] * fk;
                for j in 0..n {
                    out[(i, j)] += wik * w[(j, k)].conj();
                }
            }
        }
        HermitianMatrix::symmetrize(&out)
    }
}

/// Eigenvalues of the endomorphism `Λ = ω^{-1} χ` (sorted descending) via
/// Cholesky whitening `ω = L L^H` and cyclic Jacobi on `L^{-1} χ L^{-H}`.
pub fn eig_pair(omega: &HermitianMatrix, chi: &HermitianMatrix) -> Result<EigenSystem> {
    let n = omega.dim();
    if chi.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: chi.dim() });
    }
    // ω = Id whitens to χ itself; skip the factorization.
    if n > 1 && *omega == HermitianMatrix::identity(n) {
        let (values, vectors) = jacobi_hermitian::<true>(chi.as_matrix());
        return Ok(sorted_system(n, values, vectors));
    }
    let l = omega.cholesky()?;
    let linv = lower_inverse(&l);

    if n == 1 {
        let w = linv[(0, 0)].re;
        let mut lambdas = [0.0; MAX_DIM];
        lambdas[0] = chi.get(0, 0).re * w * w;
        let mut transform = SquareMatrix::zeros(1);
        transform[(0, 0)] = Complex64::new(w, 0.0);
        return Ok(EigenSystem { n, lambdas, transform });
    }

    let whitened = linv * *chi.as_matrix() * linv.adjoint();
    let (values, vectors) = jacobi_hermitian::<true>(HermitianMatrix::symmetrize(&whitened).as_matrix());
    Ok(sorted_system(n, values, linv.adjoint() * vectors))
}

/// Eigenvalues of `ω^{-1} χ` in no particular order, without eigenvectors.
/// Same whitening and Jacobi sweeps as [`eig_pair`].
pub(crate) fn pair_eigenvalues(omega: &HermitianMatrix, chi: &HermitianMatrix) -> Result<[f64; MAX_DIM]> {
    let n = omega.dim();
    if chi.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: chi.dim() });
    }
    if n > 1 && *omega == HermitianMatrix::identity(n) {
        return Ok(jacobi_hermitian::<false>(chi.as_matrix()).0);
    }
    let linv = lower_inverse(&omega.cholesky()?);
    if n == 1 {
        let w = linv[(0, 0)].re;
        return Ok([chi.get(0, 0).re * w * w, 0.0, 0.0, 0.0]);
    }
    let whitened = linv * *chi.as_matrix() * linv.adjoint();
    Ok(jacobi_hermitian::<false>(HermitianMatrix::symmetrize(&whitened).as_matrix()).0)
}

fn sorted_system(n: usize, values: [f64; MAX_DIM], w_unsorted: SquareMatrix) -> EigenSystem {
    let mut order: [usize; MAX_DIM] = [0, 1, 2, 3];
    order[..n].sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let mut lambdas = [0.0; MAX_DIM];
    let mut transform = SquareMatrix::zeros(n);
    for (dst, &src) in order[..n].iter().enumerate() {
        lambdas[dst] = values[src];
        for i in 0..n {
            transform[(i, dst)] = w_unsorted[(i, src)];
        }
    }
    EigenSystem { n, lambdas, transform }
}

/// Cyclic Jacobi for a Hermitian matrix. Returns eigenvalues (unsorted) and
/// the unitary whose columns are the eigenvectors.
fn jacobi_hermitian<const VECTORS: bool>(m: &SquareMatrix) -> ([f64; MAX_DIM], SquareMatrix) {
    let n = m.dim();
    let mut a = *m;
    let mut v = SquareMatrix::identity(n);
    let mut scale_sq: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            scale_sq = scale_sq.max(a[(i, j)].norm_sqr());
        }
    }
    let scale = scale_sq.sqrt().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm_sqr().sqrt();
                if r <= 1e-300 {
                    continue;
                }
                // Phase-rotate so the pivot is real, then apply a real
                // Jacobi rotation: J = diag(1, e^{-iφ}) · [[c, s], [-s, c]].
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;

                // A <- A J (columns p, q)
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * jpp + aiq * jqp;
                    a[(i, q)] = aip * jpq + aiq * jqq;
                }
                // A <- J^H A (rows p, q)
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = jpp.conj() * apj + jqp.conj() * aqj;
                    a[(q, j)] = jpq.conj() * apj + jqq.conj() * aqj;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                for i in 0..n * usize::from(VECTORS) {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * jpp + viq * jqp;
                    v[(i, q)] = vip * jpq + viq * jqq;
                }
            }
        }
    }
    let mut values = [0.0; MAX_DIM];
    for (i, val) in values.iter_mut().enumerate().take(n) {
        *val = a[(i, i)].re;
    }
    (values, v)
}

/// `Σ arctan λ_i`.
pub fn theta_arctan(lambdas: &[f64]) -> f64 {
    lambdas.iter().map(|l| l.atan()).sum()
}

/// `det(Id + iΛ) = det(ω + iχ) / det ω`.
pub fn det_id_plus_i_lambda(omega: &HermitianMatrix, chi: &HermitianMatrix) -> Result<Complex64> {
    let n = omega.dim();
    if chi.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: chi.dim() });
    }
    omega.cholesky()?;
    let i = Complex64::new(0.0, 1.0);
    let m = *omega.as_matrix() + chi.as_matrix().scale(i);
    Ok(m.det() / omega.as_matrix().det().re)
}

/// Lagrangian angle as `arg det(Id + iΛ)`, lifted to the branch selected by
/// the eigenvalue-wise arctan sum (zero at `Λ = 0`, continuous in `Λ`).
pub fn lagrangian_angle_det(omega: &HermitianMatrix, chi: &HermitianMatrix) -> Result<f64> {
    let z = det_id_plus_i_lambda(omega, chi)?;
    let reference = theta_arctan(eig_pair(omega, chi)?.lambdas());
    Ok(lift_angle(z.arg(), reference))
}

/// Shifts a principal angle by a multiple of 2π to lie nearest `reference`.
pub fn lift_angle(principal: f64, reference: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    principal + tau * ((reference - principal) / tau).round()
}

/// Derivative of the angle with respect to `χ`: the Hermitian form
/// `W diag(1/(1+λ_i²)) W^H = (Id + Λ²)^{-1} ω^{-1}`.
///
/// At `ω = Id` this is `(Id + Λ²)^{-1}` itself. Contracting with a direction
/// `H` via [`HermitianMatrix::pair`] gives the directional derivative.
pub fn d_f(eigen: &EigenSystem) -> HermitianMatrix {
    eigen.spectral_form(|l| 1.0 / (1.0 + l * l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> HermitianMatrix {
        let m = SquareMatrix::from_fn(n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale
        });
        HermitianMatrix::symmetrize(&m)
    }

    fn random_hpd(rng: &mut impl Rng, n: usize) -> HermitianMatrix {
        let b = SquareMatrix::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        HermitianMatrix::symmetrize(&(b * b.adjoint() + SquareMatrix::identity(n).scale(Complex64::new(0.5, 0.0))))
    }

    /// Real roots of det(χ − λω) for n = 3 via the trigonometric cubic formula.
    fn cubic_roots_oracle(omega: &HermitianMatrix, chi: &HermitianMatrix) -> Vec<f64> {
        let p = |lam: f64| (*chi.as_matrix() - omega.as_matrix().scale(Complex64::new(lam, 0.0))).det().re;
        // Interpolate the cubic c0 + c1 x + c2 x^2 + c3 x^3 from 4 samples.
        let xs = [-1.0, 0.0, 1.0, 2.0];
        let ys: Vec<f64> = xs.iter().map(|&x| p(x)).collect();
        // Newton divided differences.
        let d1 = [(ys[1] - ys[0]) / 1.0, (ys[2] - ys[1]) / 1.0, (ys[3] - ys[2]) / 1.0];
        let d2 = [(d1[1] - d1[0]) / 2.0, (d1[2] - d1[1]) / 2.0];
        let d3 = (d2[1] - d2[0]) / 3.0;
        // p(x) = y0 + d1 (x+1) + d2 (x+1) x + d3 (x+1) x (x-1)
        let c3 = d3;
        let c2 = d2[0];
        let c1 = d1[0] + d2[0] - d3;
        let c0 = ys[0] + d1[0];
        let (a, b, c) = (c2 / c3, c1 / c3, c0 / c3);
        let q = (a * a - 3.0 * b) / 9.0;
        let r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
        let theta = (r / q.powf(1.5)).clamp(-1.0, 1.0).acos();
        let mut roots: Vec<f64> = (0..3)
            .map(|k| -2.0 * q.sqrt() * ((theta + 2.0 * PI * k as f64) / 3.0).cos() - a / 3.0)
            .collect();
        roots.sort_by(|x, y| y.total_cmp(x));
        roots
    }

    #[test]
    fn diagonal_and_scalar_cases() {
        let e = eig_pair(&HermitianMatrix::identity(2), &HermitianMatrix::from_real_diag(&[1.0, 2.0])).unwrap();
        assert_eq!(e.lambdas(), &[2.0, 1.0]);
        let e = eig_pair(&HermitianMatrix::from_real_diag(&[2.0]), &HermitianMatrix::from_real_diag(&[6.0])).unwrap();
        assert!((e.lambdas()[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let bad = HermitianMatrix::from_real_diag(&[1.0, 0.0]);
        assert!(matches!(
            eig_pair(&bad, &HermitianMatrix::identity(2)),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            eig_pair(&HermitianMatrix::identity(2), &HermitianMatrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cubic_oracle_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let omega = random_hpd(&mut rng, 3);
            let chi = random_hermitian(&mut rng, 3, 2.0);
            let e = eig_pair(&omega, &chi).unwrap();
            let roots = cubic_roots_oracle(&omega, &chi);
            for (l, r) in e.lambdas().iter().zip(&roots) {
                assert!((l - r).abs() <= 1e-9 * (1.0 + r.abs()), "{l} vs {r}");
            }
        }
    }

    #[test]
    fn reconstruction_and_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=4 {
            for _ in 0..200 {
                let omega = random_hpd(&mut rng, n);
                let chi = random_hermitian(&mut rng, n, 3.0);
                let e = eig_pair(&omega, &chi).unwrap();
                let w = *e.transform();
                let d = SquareMatrix::diag(e.lambdas());
                let resid = (*chi.as_matrix() * w - *omega.as_matrix() * w * d).norm_inf();
                assert!(resid <= 1e-10 * (1.0 + chi.norm_inf()), "n={n} resid={resid}");
                let gram = w.adjoint() * *omega.as_matrix() * w - SquareMatrix::identity(n);
                assert!(gram.max_abs() < 1e-10);
                assert!(e.lambdas().windows(2).all(|p| p[0] >= p[1]));
            }
        }
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_arctan(&[0.0, 0.0, 0.0]), 0.0);
        assert!((theta_arctan(&[1.0, 1.0]) - FRAC_PI_2).abs() < 1e-15);
        assert!((theta_arctan(&[0.7f64.tan()]) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn det_form_examples() {
        let z = lagrangian_angle_det(&HermitianMatrix::identity(3), &HermitianMatrix::zeros(3)).unwrap();
        assert_eq!(z, 0.0);
        let a = lagrangian_angle_det(&HermitianMatrix::identity(2), &HermitianMatrix::identity(2)).unwrap();
        assert!((a - FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn det_form_on_high_branch() {
        // Θ close to 2π for n = 4 sits well outside (−π, π].
        let chi = HermitianMatrix::from_real_diag(&[50.0, 40.0, 30.0, 20.0]);
        let a = lagrangian_angle_det(&HermitianMatrix::identity(4), &chi).unwrap();
        assert!((a - theta_arctan(&[50.0, 40.0, 30.0, 20.0])).abs() < 1e-12);
        assert!(a > 1.9 * PI);
    }

    #[test]
    fn d_f_examples() {
        let e = eig_pair(&HermitianMatrix::identity(3), &HermitianMatrix::zeros(3)).unwrap();
        assert!((d_f(&e).as_matrix().clone() - SquareMatrix::identity(3)).max_abs() < 1e-15);
        let e = eig_pair(&HermitianMatrix::identity(2), &HermitianMatrix::from_real_diag(&[2.0, -0.5])).unwrap();
        let f = d_f(&e);
        assert!((f.get(0, 0).re - 0.2).abs() < 1e-15);
        assert!((f.get(1, 1).re - 0.8).abs() < 1e-15);
        assert!(f.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn d_f_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-5;
        for _ in 0..50 {
            let lam = random_hermitian(&mut rng, 3, 1.5);
            let dir = random_hermitian(&mut rng, 3, 1.0);
            let id = HermitianMatrix::identity(3);
            let exact = d_f(&eig_pair(&id, &lam).unwrap()).pair(&dir);
            let fp = lagrangian_angle_det(&id, &lam.add(&dir.scale(h))).unwrap();
            let fm = lagrangian_angle_det(&id, &lam.sub(&dir.scale(h))).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-2), "{fd} vs {exact}");
        }
    }
}
