//! Newton-Krylov and continuity-method solvers for `Θ_ω(χ₀ + i∂∂̄u) = h + c`
//! on flat tori.
//!
//! The unknowns are a mean-zero potential `u` and a real constant `c`; the
//! constant absorbs the one-dimensional cokernel of the linearization.

mod continuity;
mod krylov;
mod newton;

use num_complex::Complex64;
use rayon::prelude::*;

pub use continuity::{continuity_solve, continuity_solve_from, ContinuityStage};
pub use krylov::KrylovOutcome;
pub use newton::{newton_solve, NewtonStep};

use crate::error::{Error, Result};
use crate::hermitian::{d_f, eig_pair, theta_arctan};
use crate::phase::supercritical_floor;
use crate::torus::{hessian_from_spectrum, i_ddbar, pointwise, theta_field, HermitianFormField, ScalarField, TorusGrid};

/// Right-hand side of the equation.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Constant(f64),
    Field(ScalarField),
}

/// Problem data `(ω, χ₀, h, ε₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DhymProblem {
    omega: HermitianFormField,
    chi0: HermitianFormField,
    target: Target,
    eps0: f64,
}

impl DhymProblem {
    /// Validates that `ω` is positive-definite at every point and that the
    /// target lies in `[(n-2)π/2 + ε₀, nπ/2)`.
    pub fn new(omega: HermitianFormField, chi0: HermitianFormField, target: Target, eps0: f64) -> Result<Self> {
        if omega.grid() != chi0.grid() {
            return Err(Error::GridMismatch);
        }
        if let Target::Field(h) = &target {
            if h.grid() != omega.grid() {
                return Err(Error::GridMismatch);
            }
        }
        if !(eps0 > 0.0) || !eps0.is_finite() {
            return Err(Error::PreconditionFailed(format!("phase floor eps0 = {eps0} must be positive")));
        }
        pointwise(omega.grid().len(), |i| omega.at(i).cholesky().map(|_| ()))?;
        let n = omega.grid().dim();
        let lo = supercritical_floor(n) + eps0;
        let hi = n as f64 * std::f64::consts::FRAC_PI_2;
        let check = |v: f64| {
            if v >= lo && v < hi {
                Ok(())
            } else {
                Err(Error::PhaseOutOfRange { value: v, lo, hi })
            }
        };
        match &target {
            Target::Constant(h) => check(*h)?,
            Target::Field(h) => h.values().iter().try_for_each(|v| check(*v))?,
        }
        Ok(Self { omega, chi0, target, eps0 })
    }

    /// Skips validation; used for intermediate continuity stages.
    pub(crate) fn unchecked(omega: HermitianFormField, chi0: HermitianFormField, target: Target, eps0: f64) -> Self {
        Self { omega, chi0, target, eps0 }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.omega.grid()
    }

    pub fn omega(&self) -> &HermitianFormField {
        &self.omega
    }

    pub fn chi0(&self) -> &HermitianFormField {
        &self.chi0
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    /// `(n-2)π/2`.
    pub fn phase_floor(&self) -> f64 {
        supercritical_floor(self.grid().dim())
    }

    #[inline]
    pub(crate) fn target_at(&self, idx: usize) -> f64 {
        match &self.target {
            Target::Constant(h) => *h,
            Target::Field(h) => h.values()[idx],
        }
    }

    fn check_grid(&self, f: &ScalarField) -> Result<()> {
        if f.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Pointwise angle and linearization coefficients at a state.
pub(crate) struct State {
    pub theta: Vec<f64>,
    /// `dF = (Id + Λ²)^{-1}` expressed as a Hermitian form, per point.
    pub coeffs: HermitianFormField,
}

impl State {
    pub(crate) fn min_phase(&self) -> f64 {
        self.theta.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn evaluate(prob: &DhymProblem, u: &[f64]) -> Result<State> {
    let grid = prob.grid();
    let n = grid.dim();
    let hess = hessian_from_spectrum(grid, &grid.forward(u));
    let pts = pointwise(grid.len(), |i| {
        let chi = prob.chi0.at(i).add(&hess.at(i));
        let eig = eig_pair(&prob.omega.at(i), &chi)?;
        Ok((theta_arctan(eig.lambdas()), d_f(&eig)))
    })?;
    let theta = pts.iter().map(|p| p.0).collect();
    let data = pts.iter().flat_map(|p| (0..n * n).map(move |k| p.1.get(k / n, k % n))).collect();
    Ok(State { theta, coeffs: HermitianFormField::from_vec_unchecked(grid.clone(), data) })
}

/// `v ↦ tr(A(x) · v_{··̄}(x))` for a coefficient field `A`.
pub(crate) fn apply_linear(coeffs: &HermitianFormField, v: &[f64]) -> Vec<f64> {
    let grid = coeffs.grid();
    let n = grid.dim();
    let hess = hessian_from_spectrum(grid, &grid.forward(v));
    coeffs
        .data()
        .par_chunks(n * n)
        .zip(hess.data().par_chunks(n * n))
        .map(|(a, h)| {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                for k in 0..n {
                    s += a[j * n + k] * h[k * n + j];
                }
            }
            s.re
        })
        .collect()
}

fn residual_values(prob: &DhymProblem, theta: &[f64], c: f64) -> Vec<f64> {
    theta.par_iter().enumerate().map(|(i, t)| t - prob.target_at(i) - c).collect()
}

fn sup(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// `Θ_ω(χ₀ + i∂∂̄u) - h - c`.
pub fn residual(u: &ScalarField, c: f64, prob: &DhymProblem) -> Result<ScalarField> {
    prob.check_grid(u)?;
    let state = evaluate(prob, u.values())?;
    Ok(ScalarField::from_vec_unchecked(prob.grid().clone(), residual_values(prob, &state.theta, c)))
}

/// Gâteaux derivative of [`residual`] at `u` in direction `v`:
/// `tr((Id + Λ²)^{-1} ω^{-1} v_{··̄})` pointwise.
pub fn linearized_apply(u: &ScalarField, v: &ScalarField, prob: &DhymProblem) -> Result<ScalarField> {
    prob.check_grid(u)?;
    prob.check_grid(v)?;
    let state = evaluate(prob, u.values())?;
    Ok(ScalarField::from_vec_unchecked(prob.grid().clone(), apply_linear(&state.coeffs, v.values())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrylovMethod {
    /// Restarted GMRES with the given restart length.
    Gmres { restart: usize },
    /// Conjugate gradients on the normal equations.
    Cgnr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Newton stopping tolerance on `sup |residual|`.
    pub tol: f64,
    /// Relative Krylov tolerance per linear solve.
    pub krylov_tol: f64,
    pub krylov_iters: usize,
    pub max_iters: usize,
    pub method: KrylovMethod,
    /// Extra margin above `(n-2)π/2` demanded of the initial state.
    pub phase_margin: f64,
    pub max_backtracks: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            krylov_tol: 1e-8,
            krylov_iters: 400,
            max_iters: 40,
            method: KrylovMethod::Gmres { restart: 20 },
            phase_margin: 0.0,
            max_backtracks: 30,
        }
    }
}

/// Outcome of a Newton or continuity solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Mean-zero potential.
    pub u: ScalarField,
    pub c: f64,
    pub residual_sup: f64,
    pub newton_trace: Vec<NewtonStep>,
    pub continuity_trace: Vec<ContinuityStage>,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupercriticalReport {
    pub min_phase: f64,
    /// `min_phase - (n-2)π/2`.
    pub margin: f64,
    pub ok: bool,
}

/// Checks `min Θ > (n-2)π/2 + ε₀` at the state `u`.
pub fn verify_supercritical(u: &ScalarField, prob: &DhymProblem) -> Result<SupercriticalReport> {
    prob.check_grid(u)?;
    let min_phase = evaluate(prob, u.values())?.min_phase();
    let margin = min_phase - prob.phase_floor();
    Ok(SupercriticalReport { min_phase, margin, ok: margin > prob.eps0 - 1e-12 })
}

/// Problem whose exact discrete solution is `u_star` (up to its mean).
pub fn manufactured_problem(
    u_star: &ScalarField,
    omega: HermitianFormField,
    chi0: HermitianFormField,
    eps0: f64,
) -> Result<DhymProblem> {
    if u_star.grid() != omega.grid() {
        return Err(Error::GridMismatch);
    }
    let chi = chi0.add(&i_ddbar(u_star))?;
    let target = theta_field(&omega, &chi)?;
    DhymProblem::new(omega, chi0, Target::Field(target), eps0)
}
