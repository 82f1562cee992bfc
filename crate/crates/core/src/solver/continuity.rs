use rayon::prelude::*;

use super::newton::{newton_core, NewtonStep};
use super::{evaluate, DhymProblem, SolveReport, SolverConfig, Target};
use crate::error::{Error, Result};
use crate::torus::ScalarField;

pub const MAX_STEP: f64 = 0.25;
pub const MIN_STEP: f64 = 1.0 / 1024.0;

/// Newton iteration count at or below which the next step is doubled.
const FAST_STAGE: usize = 3;

/// One accepted stage of the continuity path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityStage {
    pub t: f64,
    /// Newton-determined constant shift at this stage.
    pub c_t: f64,
    pub iterations: usize,
    /// Step in `t` that reached this stage.
    pub dt: f64,
}

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::PhaseFloorViolated { .. }
            | Error::MaxItersExceeded { .. }
            | Error::LinearSolveStalled { .. }
            | Error::Stagnated { .. }
    )
}

/// Continuity method from the cold start `u = 0` at `t = 0`.
pub fn continuity_solve(prob: &DhymProblem, cfg: &SolverConfig) -> Result<SolveReport> {
    continuity_solve_from(prob, &ScalarField::zeros(prob.grid()), cfg)
}

/// Marches `t` from 0 to 1 on the path `Θ(u_t) = (1-t)Θ(u₀) + t ĥ + c_t`,
/// starting from the exact solution `(u₀, 0)` at `t = 0`.
pub fn continuity_solve_from(prob: &DhymProblem, u0: &ScalarField, cfg: &SolverConfig) -> Result<SolveReport> {
    let Target::Constant(h) = *prob.target() else {
        return Err(Error::PreconditionFailed("continuity path needs a constant target".into()));
    };
    prob.check_grid(u0)?;
    let grid = prob.grid().clone();
    let m0 = u0.mean();
    let mut u: Vec<f64> = u0.values().iter().map(|v| v - m0).collect();
    let start = evaluate(prob, &u)?;
    let floor = prob.phase_floor();
    if start.min_phase() < floor + cfg.phase_margin {
        return Err(Error::PhaseFloorViolated { min_phase: start.min_phase() });
    }
    let theta0 = start.theta;

    let mut c = 0.0;
    let mut t = 0.0;
    let mut dt = MAX_STEP;
    let mut residual_sup = 0.0;
    let mut newton_trace: Vec<NewtonStep> = Vec::new();
    let mut stages = Vec::new();
    while t < 1.0 {
        let t_next = (t + dt).min(1.0);
        let target: Vec<f64> = theta0.par_iter().map(|th| (1.0 - t_next) * th + t_next * h).collect();
        let stage = DhymProblem::unchecked(
            prob.omega().clone(),
            prob.chi0().clone(),
            Target::Field(ScalarField::from_vec_unchecked(grid.clone(), target)),
            prob.eps0(),
        );
        match newton_core(&stage, &u, c, cfg, t_next) {
            Ok(out) => {
                let iterations = out.trace.len() - 1;
                newton_trace.extend(out.trace);
                u = out.u;
                c = out.c;
                residual_sup = out.residual_sup;
                stages.push(ContinuityStage { t: t_next, c_t: c, iterations, dt: t_next - t });
                t = t_next;
                if iterations <= FAST_STAGE {
                    dt = (2.0 * dt).min(MAX_STEP);
                }
            }
            Err(e) if recoverable(&e) => {
                dt *= 0.5;
                if dt < MIN_STEP {
                    return Err(Error::PathStalled { t, min_step: MIN_STEP });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SolveReport {
        u: ScalarField::from_vec_unchecked(grid, u),
        c,
        residual_sup,
        newton_trace,
        continuity_trace: stages,
        converged: true,
    })
}
