//! Numerical toolkit for the deformed Hermitian-Yang-Mills equation
//! `Σ arctan λ_i(ω^{-1} χ) = h`.
//!
//! * [`hermitian`]: pointwise matrix kernels and derivative formulas.
//! * [`phase`]: supercritical-phase arithmetic and C-subsolution tests.
//! * [`torus`]: periodic spectral fields on flat complex tori.
//! * [`solver`]: Newton-Krylov and continuity-method solvers.
//! * [`surface`]: left-invariant data on Inoue and secondary Kodaira surfaces.

pub mod error;
pub mod hermitian;
pub mod phase;
pub mod solver;
pub mod surface;
pub mod torus;

pub use error::{Error, Result};
