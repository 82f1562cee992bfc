use thiserror::Error;

/// Errors raised by the kernels, field operations and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive-definite (pivot {pivot:.3e}){}", fmt_index(*.index))]
    NotPositiveDefinite { pivot: f64, index: Option<usize> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0} (1 <= n <= 4)")]
    BadDimension(usize),

    #[error("degenerate spectrum: eigenvalue gap {gap:.3e} below {tol:.1e}")]
    DegenerateSpectrum { gap: f64, tol: f64 },

    #[error("index {index} out of range 1..={max}")]
    BadIndex { index: usize, max: usize },

    #[error("eigenvalues are not on the level set: angle error {error:.3e}")]
    NotOnLevelSet { error: f64 },

    #[error("phase {value} outside the admissible band [{lo}, {hi})")]
    PhaseOutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("not a C-subsolution: margin {margin:.3e} at point {index}")]
    NotASubsolution { margin: f64, index: usize },

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between fields")]
    GridMismatch,

    #[error("Krylov solve stalled: relative residual {achieved:.3e} after {iterations} iterations (target {target:.1e})")]
    LinearSolveStalled { achieved: f64, target: f64, iterations: usize },

    #[error("no step length keeps the phase above the supercritical floor (min phase {min_phase:.6})")]
    PhaseFloorViolated { min_phase: f64 },

    #[error("line search found no residual decrease at residual {residual:.3e}")]
    Stagnated { residual: f64 },

    #[error("Newton iteration limit {iterations} reached with residual {residual:.3e}")]
    MaxItersExceeded { iterations: usize, residual: f64 },

    #[error("continuity path stalled at t = {t} (step below {min_step})")]
    PathStalled { t: f64, min_step: f64 },

    #[error("unknown surface '{0}'")]
    UnknownSurface(String),

    #[error("bad range: {0}")]
    BadRange(String),

    #[error("field file: {0}")]
    Format(String),
}

fn fmt_index(index: Option<usize>) -> String {
    match index {
        Some(i) => format!(" at grid index {i}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
