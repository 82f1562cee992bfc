//! Small-matrix kernels: generalized Hermitian eigenvalues, the Lagrangian
//! angle and its derivatives.

mod derivatives;
mod eigen;
mod matrix;

pub use derivatives::{
    eigenvalue_derivatives, sigma_k, spectral_function_derivatives, EigenvalueDerivatives, SpectralDerivatives,
    SpectralFunction, DISTINCT_TOL,
};
pub(crate) use eigen::pair_eigenvalues;
pub use eigen::{d_f, det_id_plus_i_lambda, eig_pair, lagrangian_angle_det, lift_angle, theta_arctan, EigenSystem};
pub use matrix::{HermitianMatrix, SquareMatrix, MAX_DIM};

/// Smallest admissible Cholesky pivot for a positive-definite `ω`.
pub const PD_PIVOT_TOL: f64 = 1e-12;
