use rayon::prelude::*;

use super::krylov::{cgnr, gmres, norm};
use super::{apply_linear, evaluate, residual_values, sup, DhymProblem, KrylovMethod, SolveReport, SolverConfig, State};
use crate::error::{Error, Result};
use crate::torus::{inverse_quarter_laplacian, trace_hessian_adjoint, ScalarField};

/// One accepted Newton iterate (iteration 0 is the initial state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonStep {
    /// Continuity parameter of the stage; 1 for a plain Newton solve.
    pub t: f64,
    pub iteration: usize,
    pub residual_sup: f64,
    /// Accepted damping factor; 0 for the initial state.
    pub step_length: f64,
    pub min_phase: f64,
    /// `min_phase - (n-2)π/2`.
    pub min_phase_margin: f64,
    pub c: f64,
    pub krylov_iterations: usize,
}

pub(crate) struct NewtonResult {
    pub u: Vec<f64>,
    pub c: f64,
    pub residual_sup: f64,
    pub trace: Vec<NewtonStep>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn shift(v: &[f64], s: f64) -> Vec<f64> {
    v.par_iter().map(|x| x - s).collect()
}

/// Solves `L δu - δc = rhs` for mean-zero `δu`, returning `(δu, δc, iterations)`.
fn newton_direction(
    prob: &DhymProblem,
    state: &State,
    rhs: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, f64, usize)> {
    let grid = prob.grid().clone();
    let coeffs = &state.coeffs;
    // augmented operator on x: L(x - x̄) - x̄
    let apply = |x: &[f64]| {
        let m = mean(x);
        let lx = apply_linear(coeffs, &shift(x, m));
        shift(&lx, m)
    };
    let apply_t = |w: &[f64]| {
        let m = mean(w);
        let lw = trace_hessian_adjoint(coeffs, w);
        let lm = mean(&lw);
        lw.par_iter().map(|v| v - lm - m).collect::<Vec<_>>()
    };
    // exact inverse when dF = Id: y ↦ (Δ/4)^{-1}(y - ȳ) - ȳ
    let precond = |y: &[f64]| {
        let m = mean(y);
        let q = inverse_quarter_laplacian(&ScalarField::from_vec_unchecked(grid.clone(), y.to_vec()));
        shift(q.values(), m)
    };
    // Relative tolerance, floored so the linear residual never has to drop
    // below a small fraction of the Newton tolerance (RMS).
    let b_norm = norm(rhs);
    let floor = 1e-2 * cfg.tol * (rhs.len() as f64).sqrt();
    let rel_tol = if b_norm > 0.0 { cfg.krylov_tol.max(floor / b_norm) } else { cfg.krylov_tol };
    let (x, outcome) = match cfg.method {
        KrylovMethod::Gmres { restart } => gmres(&apply, &precond, rhs, rel_tol, cfg.krylov_iters, restart.max(1)),
        KrylovMethod::Cgnr => cgnr(&apply, &apply_t, &precond, rhs, rel_tol, cfg.krylov_iters),
    };
    if !outcome.converged {
        return Err(Error::LinearSolveStalled {
            achieved: outcome.relative_residual,
            target: rel_tol,
            iterations: outcome.iterations,
        });
    }
    let m = mean(&x);
    Ok((shift(&x, m), m, outcome.iterations))
}

pub(crate) fn newton_core(prob: &DhymProblem, u0: &[f64], c0: f64, cfg: &SolverConfig, t: f64) -> Result<NewtonResult> {
    let floor = prob.phase_floor();
    let mut u = shift(u0, mean(u0));
    let mut c = c0;
    let mut state = evaluate(prob, &u)?;
    let start_phase = state.min_phase();
    if start_phase < floor + cfg.phase_margin {
        return Err(Error::PhaseFloorViolated { min_phase: start_phase });
    }
    let mut r = residual_values(prob, &state.theta, c);
    let mut res = sup(&r);
    let mut trace = vec![NewtonStep {
        t,
        iteration: 0,
        residual_sup: res,
        step_length: 0.0,
        min_phase: start_phase,
        min_phase_margin: start_phase - floor,
        c,
        krylov_iterations: 0,
    }];
    let mut iteration = 0;
    while res > cfg.tol {
        if iteration >= cfg.max_iters {
            return Err(Error::MaxItersExceeded { iterations: iteration, residual: res });
        }
        iteration += 1;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let (du, dc, kits) = newton_direction(prob, &state, &rhs, cfg)?;
        let mut alpha = 1.0;
        let mut accepted = None;
        let mut phase_blocked = true;
        let mut worst_phase = f64::INFINITY;
        for _ in 0..=cfg.max_backtracks {
            let u_try: Vec<f64> = u.par_iter().zip(&du).map(|(a, b)| a + alpha * b).collect();
            let c_try = c + alpha * dc;
            let s_try = evaluate(prob, &u_try)?;
            let phase = s_try.min_phase();
            let r_try = residual_values(prob, &s_try.theta, c_try);
            let res_try = sup(&r_try);
            if phase > floor {
                phase_blocked = false;
                if res_try < res {
                    accepted = Some((u_try, c_try, s_try, r_try, res_try));
                    break;
                }
            } else {
                worst_phase = worst_phase.min(phase);
            }
            alpha *= 0.5;
        }
        let Some((u_new, c_new, s_new, r_new, res_new)) = accepted else {
            return Err(if phase_blocked {
                Error::PhaseFloorViolated { min_phase: worst_phase }
            } else {
                Error::Stagnated { residual: res }
            });
        };
        // keep the potential exactly mean-zero
        u = shift(&u_new, mean(&u_new));
        c = c_new;
        state = s_new;
        r = r_new;
        res = res_new;
        let min_phase = state.min_phase();
        trace.push(NewtonStep {
            t,
            iteration,
            residual_sup: res,
            step_length: alpha,
            min_phase,
            min_phase_margin: min_phase - floor,
            c,
            krylov_iterations: kits,
        });
    }
    Ok(NewtonResult { u, c, residual_sup: res, trace })
}

/// Damped Newton on the augmented unknown `(u, c)` from `u0` (projected to
/// mean zero) and `c = 0`.
pub fn newton_solve(prob: &DhymProblem, u0: &ScalarField, cfg: &SolverConfig) -> Result<SolveReport> {
    prob.check_grid(u0)?;
    let out = newton_core(prob, u0.values(), 0.0, cfg, 1.0)?;
    Ok(SolveReport {
        u: ScalarField::from_vec_unchecked(prob.grid().clone(), out.u),
        c: out.c,
        residual_sup: out.residual_sup,
        newton_trace: out.trace,
        continuity_trace: Vec::new(),
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::HermitianMatrix;
    use crate::solver::{manufactured_problem, Target};
    use crate::torus::{theta_field, HermitianFormField, TorusGrid};

    #[test]
    fn exact_start_needs_no_iterations() {
        let g = TorusGrid::new(2, 8).unwrap();
        let omega = HermitianFormField::identity(&g);
        let chi0 = HermitianFormField::from_fn(&g, |x| HermitianMatrix::scaled_identity(2, 0.5 + 0.1 * x[0].cos())).unwrap();
        let theta0 = theta_field(&omega, &chi0).unwrap();
        let prob = DhymProblem::new(omega, chi0, Target::Field(theta0), 0.1).unwrap();
        let rep = newton_solve(&prob, &ScalarField::zeros(&g), &SolverConfig::default()).unwrap();
        assert!(rep.converged && rep.newton_trace.len() == 1);
        assert_eq!(rep.u.sup_norm(), 0.0);
        assert_eq!(rep.c, 0.0);
    }

    fn manufactured_n1(big_n: usize, method: KrylovMethod) -> f64 {
        let g = TorusGrid::new(1, big_n).unwrap();
        let omega = HermitianFormField::identity(&g);
        let chi0 = HermitianFormField::constant(&g, &HermitianMatrix::scaled_identity(1, 0.2)).unwrap();
        let u_star = ScalarField::from_fn(&g, |x| 0.3 * x[0].cos());
        let prob = manufactured_problem(&u_star, omega, chi0, 0.5).unwrap();
        let cfg = SolverConfig { tol: 1e-12, method, ..SolverConfig::default() };
        let rep = newton_solve(&prob, &ScalarField::zeros(&g), &cfg).unwrap();
        assert!(rep.residual_sup <= 1e-12);
        assert!(rep.u.mean().abs() < 1e-13);
        rep.u.sup_distance(&u_star.mean_zero())
    }

    #[test]
    fn manufactured_n1_gmres_and_cgnr() {
        assert!(manufactured_n1(32, KrylovMethod::Gmres { restart: 20 }) <= 1e-9);
        assert!(manufactured_n1(32, KrylovMethod::Cgnr) <= 1e-9);
    }

    #[test]
    fn stalled_krylov_is_reported() {
        let g = TorusGrid::new(1, 16).unwrap();
        let omega = HermitianFormField::identity(&g);
        let chi0 = HermitianFormField::constant(&g, &HermitianMatrix::scaled_identity(1, 0.2)).unwrap();
        let u_star = ScalarField::from_fn(&g, |x| 0.3 * x[0].cos() + 0.2 * (2.0 * x[1]).sin());
        let prob = manufactured_problem(&u_star, omega, chi0, 0.5).unwrap();
        let cfg = SolverConfig { krylov_iters: 1, krylov_tol: 1e-14, ..SolverConfig::default() };
        assert!(matches!(
            newton_solve(&prob, &ScalarField::zeros(&g), &cfg),
            Err(Error::LinearSolveStalled { .. })
        ));
        let cfg = SolverConfig { max_iters: 1, ..SolverConfig::default() };
        assert!(matches!(
            newton_solve(&prob, &ScalarField::zeros(&g), &cfg),
            Err(Error::MaxItersExceeded { .. })
        ));
    }

    #[test]
    fn subcritical_start_is_rejected() {
        let g = TorusGrid::new(2, 8).unwrap();
        let omega = HermitianFormField::identity(&g);
        let chi0 = HermitianFormField::constant(&g, &HermitianMatrix::scaled_identity(2, -1.0)).unwrap();
        let prob = DhymProblem::new(omega, chi0, Target::Constant(0.5), 0.1).unwrap();
        assert!(matches!(
            newton_solve(&prob, &ScalarField::zeros(&g), &SolverConfig::default()),
            Err(Error::PhaseFloorViolated { .. })
        ));
    }
}
