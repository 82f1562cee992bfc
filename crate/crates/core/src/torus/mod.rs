//! Periodic spectral calculus on flat complex tori.

mod fft;
mod field;
mod grid;
pub mod io;
mod ops;

pub use field::{FourierMode, HermitianFormField, ScalarField};
pub use grid::TorusGrid;
pub use ops::{eta_metric, hat_theta, i_ddbar, inverse_quarter_laplacian, theta_field, AngleResult};
pub(crate) use ops::{hessian_from_spectrum, pointwise, trace_hessian_adjoint};
