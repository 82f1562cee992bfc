//! Differential and pointwise operators on torus fields.

use num_complex::Complex64;
use rayon::prelude::*;

use super::field::{HermitianFormField, ScalarField};
use super::grid::TorusGrid;
use crate::error::{Error, Result};
use crate::hermitian::{pair_eigenvalues, theta_arctan, HermitianMatrix, SquareMatrix};

/// `u_{jk̄} = ∂²u/∂z_j∂z̄_k` with spectral derivatives.
pub fn i_ddbar(u: &ScalarField) -> HermitianFormField {
    let grid = u.grid();
    hessian_from_spectrum(grid, &grid.forward(u.values()))
}

/// Complex Hessian `v_{jk̄}` from the spectrum of a real field.
pub(crate) fn hessian_from_spectrum(grid: &TorusGrid, spectrum: &[Complex64]) -> HermitianFormField {
    let n = grid.dim();
    let len = grid.len();
    let mut data = vec![Complex64::new(0.0, 0.0); len * n * n];
    let i = Complex64::new(0.0, 1.0);

    // Diagonal entries are real: pack two per transform as re + i·im.
    let mut j = 0;
    while j < n {
        let second = (j + 1 < n).then_some(j + 1);
        let packed: Vec<Complex64> = spectrum
            .par_iter()
            .enumerate()
            .map(|(idx, &v)| {
                let d = grid.digits(idx);
                let mut m = grid.ddbar_symbol(&d, j, j);
                if let Some(k) = second {
                    m += i * grid.ddbar_symbol(&d, k, k);
                }
                m * v
            })
            .collect();
        let out = grid.inverse(packed);
        data.par_chunks_mut(n * n).zip(out.par_iter()).for_each(|(m, v)| {
            m[j * n + j] = Complex64::new(v.re, 0.0);
            if let Some(k) = second {
                m[k * n + k] = Complex64::new(v.im, 0.0);
            }
        });
        j += 2;
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let mult: Vec<Complex64> = spectrum
                .par_iter()
                .enumerate()
                .map(|(idx, &v)| grid.ddbar_symbol(&grid.digits(idx), j, k) * v)
                .collect();
            let out = grid.inverse(mult);
            data.par_chunks_mut(n * n).zip(out.par_iter()).for_each(|(m, v)| {
                m[j * n + k] = *v;
                m[k * n + j] = v.conj();
            });
        }
    }
    HermitianFormField::from_vec_unchecked(grid.clone(), data)
}

/// Adjoint (real `ℓ²` pairing) of `v ↦ tr(A(x) · v_{··̄}(x))`.
pub(crate) fn trace_hessian_adjoint(coeffs: &HermitianFormField, w: &[f64]) -> Vec<f64> {
    let grid = coeffs.grid();
    let n = grid.dim();
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for j in 0..n {
        for k in 0..n {
            // tr(A H) = Σ_{jk} A_{jk} H_{kj}; adjoint term uses conj(symbol of H_{kj}) on A_{kj} w.
            let weighted: Vec<Complex64> = coeffs
                .data()
                .par_chunks(n * n)
                .zip(w.par_iter())
                .map(|(a, &wv)| a[k * n + j] * wv)
                .collect();
            let spec = grid.forward_complex(weighted);
            acc.par_iter_mut().zip(spec.par_iter()).enumerate().for_each(|(idx, (s, v))| {
                *s += grid.ddbar_symbol(&grid.digits(idx), k, j).conj() * v;
            });
        }
    }
    grid.inverse(acc).into_iter().map(|v| v.re).collect()
}

/// Solves `(Δ/4) v = f - mean(f)` for mean-zero `v`.
pub fn inverse_quarter_laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let mut spec = grid.forward(f.values());
    spec.par_iter_mut().enumerate().for_each(|(idx, v)| {
        let s = grid.trace_symbol(&grid.digits(idx));
        *v = if s == 0.0 { Complex64::new(0.0, 0.0) } else { *v / s };
    });
    ScalarField::from_vec_unchecked(grid.clone(), grid.inverse(spec).into_iter().map(|v| v.re).collect())
}

fn check_pair(omega: &HermitianFormField, chi: &HermitianFormField) -> Result<()> {
    if omega.grid() != chi.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Runs a fallible pointwise map; errors report the lowest failing index.
pub(crate) fn pointwise<T: Send>(len: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let results: Vec<Result<T>> = (0..len).into_par_iter().map(&f).collect();
    let mut out = Vec::with_capacity(len);
    for (idx, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(Error::NotPositiveDefinite { pivot, .. }) => {
                return Err(Error::NotPositiveDefinite { pivot, index: Some(idx) })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Pointwise `Σ arctan λ_i(ω^{-1} χ)`.
pub fn theta_field(omega: &HermitianFormField, chi: &HermitianFormField) -> Result<ScalarField> {
    check_pair(omega, chi)?;
    let n = omega.grid().dim();
    let values = pointwise(omega.grid().len(), |i| Ok(theta_arctan(&pair_eigenvalues(&omega.at(i), &chi.at(i))?[..n])))?;
    Ok(ScalarField::from_vec_unchecked(omega.grid().clone(), values))
}

/// Pointwise `η = ω + χ ω^{-1} χ`.
pub fn eta_metric(omega: &HermitianFormField, chi: &HermitianFormField) -> Result<HermitianFormField> {
    check_pair(omega, chi)?;
    let n = omega.grid().dim();
    let mats = pointwise(omega.grid().len(), |i| {
        let w = omega.at(i);
        let c = chi.at(i);
        w.cholesky()?;
        let winv = w.as_matrix().inverse().ok_or(Error::NotPositiveDefinite { pivot: 0.0, index: None })?;
        let eta: SquareMatrix = *w.as_matrix() + *c.as_matrix() * winv * *c.as_matrix();
        Ok(HermitianMatrix::symmetrize(&eta))
    })?;
    let data = mats.iter().flat_map(|m| (0..n * n).map(move |k| m.get(k / n, k % n))).collect();
    Ok(HermitianFormField::from_vec_unchecked(omega.grid().clone(), data))
}

/// Argument of `∫ (ω + iχ)ⁿ`, with the branch fixed by the pointwise angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleResult {
    pub hat_theta: f64,
    /// `|∫ det(ω + iχ) dV|`.
    pub modulus: f64,
    /// `max_x |Θ(x) - hat_theta|`.
    pub branch_certificate: f64,
}

/// `Θ̂ = Arg ∫ r(x) e^{iΘ(x)} dV` with `r = |det(ω + iχ)|` and `Θ` the
/// pointwise arctan sum. The integral is accumulated relative to the mean of
/// `Θ`, then shifted back, so the result is not confined to `(-π, π]`.
pub fn hat_theta(omega: &HermitianFormField, chi: &HermitianFormField) -> Result<AngleResult> {
    check_pair(omega, chi)?;
    let grid = omega.grid();
    let pts = pointwise(grid.len(), |i| {
        let w = omega.at(i);
        let c = chi.at(i);
        // det(ω + iχ) = det ω · Π(1 + iλ_k): modulus from the eigenvalues,
        // argument equal to the arctan sum on the continuous branch
        let lambdas = &pair_eigenvalues(&w, &c)?[..grid.dim()];
        let r = w.as_matrix().det().re * lambdas.iter().map(|l| l.hypot(1.0)).product::<f64>();
        Ok((r, theta_arctan(lambdas)))
    })?;
    let mean_theta = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for &(r, theta) in &pts {
        acc += Complex64::from_polar(r, theta - mean_theta);
    }
    acc *= grid.cell_volume();
    let hat = mean_theta + acc.arg();
    let branch_certificate = pts.iter().fold(0.0, |m: f64, p| m.max((p.1 - hat).abs()));
    Ok(AngleResult { hat_theta: hat, modulus: acc.norm(), branch_certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::lagrangian_angle_det;
    use crate::torus::FourierMode;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn ddbar_of_constant_vanishes() {
        let g = TorusGrid::new(2, 8).unwrap();
        let h = i_ddbar(&ScalarField::constant(&g, 3.7));
        assert!(h.data().iter().all(|v| v.norm() < 1e-13));
    }

    #[test]
    fn ddbar_of_cosine() {
        let g = TorusGrid::new(1, 32).unwrap();
        let u = ScalarField::from_fn(&g, |x| x[0].cos());
        let h = i_ddbar(&u);
        for i in 0..g.len() {
            assert!((h.at(i).get(0, 0).re + g.coords(i)[0].cos() / 4.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn ddbar_mixed_entry() {
        // u = cos(x₁ + y₂): u_{12̄} = ¼(∂x₁∂x₂ + ∂y₁∂y₂)u + (i/4)(∂x₁∂y₂ − ∂y₁∂x₂)u = −(i/4) cos(x₁ + y₂)
        let g = TorusGrid::new(2, 8).unwrap();
        let u = ScalarField::from_fn(&g, |x| (x[0] + x[3]).cos());
        let h = i_ddbar(&u);
        for i in 0..g.len() {
            let c = (g.coords(i)[0] + g.coords(i)[3]).cos();
            let m = h.at(i);
            assert!((m.get(0, 1) - Complex64::new(0.0, -0.25 * c)).norm() < 1e-13);
            assert!((m.get(0, 0).re + 0.25 * c).abs() < 1e-13);
            assert!((m.get(1, 1).re + 0.25 * c).abs() < 1e-13);
        }
    }

    #[test]
    fn theta_examples() {
        let g = TorusGrid::new(2, 8).unwrap();
        let id = HermitianFormField::identity(&g);
        let zero = HermitianFormField::constant(&g, &HermitianMatrix::zeros(2)).unwrap();
        assert_eq!(theta_field(&id, &zero).unwrap().sup_norm(), 0.0);
        let t = theta_field(&id, &id).unwrap();
        assert!(t.values().iter().all(|v| (v - FRAC_PI_2).abs() < 1e-14));
    }

    #[test]
    fn theta_matches_det_form() {
        let g = TorusGrid::new(2, 8).unwrap();
        let id = HermitianFormField::identity(&g);
        let chi0 = HermitianFormField::constant(&g, &HermitianMatrix::from_real_diag(&[0.7, 1.3])).unwrap();
        let u = ScalarField::from_modes(&g, &[FourierMode::new(0.8, [1, 0, 0, 1], 0.3), FourierMode::new(0.5, [0, 1, 1, 0], 0.0)]);
        let chi = chi0.add(&i_ddbar(&u)).unwrap();
        let t = theta_field(&id, &chi).unwrap();
        for i in 0..g.len() {
            let d = lagrangian_angle_det(&id.at(i), &chi.at(i)).unwrap();
            assert!((t.values()[i] - d).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_reports_failing_index() {
        let g = TorusGrid::new(1, 8).unwrap();
        let omega = HermitianFormField::from_fn(&g, |x| HermitianMatrix::from_real_diag(&[if x[1] > 3.0 { -1.0 } else { 1.0 }])).unwrap();
        let chi = HermitianFormField::identity(&g);
        let err = theta_field(&omega, &chi).unwrap_err();
        let expected = (0..g.len()).find(|&i| g.coords(i)[1] > 3.0).unwrap();
        assert_eq!(err, Error::NotPositiveDefinite { pivot: -1.0, index: Some(expected) });
    }

    #[test]
    fn eta_examples() {
        let g = TorusGrid::new(2, 8).unwrap();
        let id = HermitianFormField::identity(&g);
        let zero = HermitianFormField::constant(&g, &HermitianMatrix::zeros(2)).unwrap();
        assert!(eta_metric(&id, &zero).unwrap().sup_distance(&id) < 1e-15);
        let chi = HermitianFormField::constant(&g, &HermitianMatrix::from_real_diag(&[2.0, -3.0])).unwrap();
        let eta = eta_metric(&id, &chi).unwrap();
        let want = HermitianFormField::constant(&g, &HermitianMatrix::from_real_diag(&[5.0, 10.0])).unwrap();
        assert!(eta.sup_distance(&want) < 1e-14);
    }

    #[test]
    fn eta_determinant_identity() {
        let g = TorusGrid::new(2, 8).unwrap();
        let omega = HermitianFormField::from_fn(&g, |x| {
            HermitianMatrix::from_entries(
                2,
                &[
                    Complex64::new(2.0 + x[0].sin(), 0.0),
                    Complex64::new(0.3, 0.2 * x[3].cos()),
                    Complex64::new(0.3, -0.2 * x[3].cos()),
                    Complex64::new(1.5, 0.0),
                ],
            )
            .unwrap()
        })
        .unwrap();
        let u = ScalarField::from_modes(&g, &[FourierMode::new(1.0, [1, 1, 0, 0], 0.0), FourierMode::new(0.7, [0, 0, 1, 2], 1.0)]);
        let chi = i_ddbar(&u);
        let eta = eta_metric(&omega, &chi).unwrap();
        for i in 0..g.len() {
            let lhs = eta.at(i).as_matrix().det().re * omega.at(i).as_matrix().det().re;
            let m = *omega.at(i).as_matrix() + chi.at(i).as_matrix().scale(Complex64::new(0.0, 1.0));
            let rhs = m.det().norm_sqr();
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1.0));
        }
    }

    #[test]
    fn hat_theta_examples() {
        let g = TorusGrid::new(1, 8).unwrap();
        let id = HermitianFormField::identity(&g);
        let zero = HermitianFormField::constant(&g, &HermitianMatrix::zeros(1)).unwrap();
        let r = hat_theta(&id, &zero).unwrap();
        assert_eq!(r.hat_theta, 0.0);
        assert!(r.modulus > 0.0);
        let c = HermitianFormField::constant(&g, &HermitianMatrix::from_real_diag(&[2.5])).unwrap();
        assert!((hat_theta(&id, &c).unwrap().hat_theta - 2.5f64.atan()).abs() < 1e-14);
    }

    #[test]
    fn inverse_laplacian_round_trip() {
        let g = TorusGrid::new(2, 8).unwrap();
        let f = ScalarField::from_modes(&g, &[FourierMode::new(1.0, [1, 0, 2, 0], 0.2), FourierMode::new(0.3, [0, 3, 0, 1], 0.0)]);
        let v = inverse_quarter_laplacian(&f);
        let back: Vec<f64> = i_ddbar(&v).data().chunks(4).map(|m| m[0].re + m[3].re).collect();
        for (a, b) in back.iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(v.mean().abs() < 1e-15);
    }

    #[test]
    fn adjoint_identity() {
        let g = TorusGrid::new(2, 8).unwrap();
        let coeffs = HermitianFormField::from_fn(&g, |x| {
            HermitianMatrix::from_entries(
                2,
                &[
                    Complex64::new(1.0 + 0.3 * x[1].cos(), 0.0),
                    Complex64::new(0.2 * x[0].sin(), 0.1),
                    Complex64::new(0.2 * x[0].sin(), -0.1),
                    Complex64::new(0.8, 0.0),
                ],
            )
            .unwrap()
        })
        .unwrap();
        let v = ScalarField::from_fn(&g, |x| (x[0] + 2.0 * x[3]).sin() + x[2].cos() * x[1].sin());
        let w = ScalarField::from_fn(&g, |x| (x[1] - x[2]).cos() + 0.5 * (3.0 * x[0]).sin());
        let hv = i_ddbar(&v);
        let lv: f64 = (0..g.len()).map(|i| coeffs.at(i).pair(&hv.at(i)) * w.values()[i]).sum();
        let ltw = trace_hessian_adjoint(&coeffs, w.values());
        let rhs: f64 = ltw.iter().zip(v.values()).map(|(a, b)| a * b).sum();
        assert!((lv - rhs).abs() < 1e-10 * lv.abs().max(1.0), "{lv} vs {rhs}");
    }
}
