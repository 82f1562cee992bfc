use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::fft::NdFft;
use crate::error::{Error, Result};

/// Uniform periodic grid on the flat torus `ℂⁿ / (2π ℤ)^{2n}`, `n ∈ {1, 2}`,
/// with `N` points per real axis. Points are ordered row-major over
/// `(x₁, y₁, x₂, y₂)` with the last axis fastest.
#[derive(Clone)]
pub struct TorusGrid {
    n: usize,
    points_per_axis: usize,
    fft: Arc<NdFft>,
    /// First-derivative wavenumbers (Nyquist zeroed).
    k1: Arc<[f64]>,
    /// Second-derivative wavenumbers squared (Nyquist kept).
    k2: Arc<[f64]>,
}

impl std::fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusGrid").field("n", &self.n).field("N", &self.points_per_axis).finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.points_per_axis == other.points_per_axis
    }
}

impl TorusGrid {
    pub fn new(n: usize, points_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidGrid(format!("complex dimension {n} not in {{1, 2}}")));
        }
        if !points_per_axis.is_power_of_two() || !(8..=64).contains(&points_per_axis) {
            return Err(Error::InvalidGrid(format!(
                "points per axis {points_per_axis} must be a power of two in [8, 64]"
            )));
        }
        let big_n = points_per_axis;
        let half = big_n / 2;
        let signed = |j: usize| if j <= half { j as f64 } else { j as f64 - big_n as f64 };
        let k1: Vec<f64> = (0..big_n).map(|j| if j == half { 0.0 } else { signed(j) }).collect();
        let k2: Vec<f64> = (0..big_n).map(|j| signed(j).powi(2)).collect();
        Ok(Self {
            n,
            points_per_axis,
            fft: Arc::new(NdFft::new(big_n, 2 * n)),
            k1: k1.into(),
            k2: k2.into(),
        })
    }

    /// Complex dimension.
    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Points per real axis.
    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    #[inline]
    pub fn real_dims(&self) -> usize {
        2 * self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.real_dims() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.points_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.real_dims() as i32)
    }

    pub fn volume(&self) -> f64 {
        TAU.powi(self.real_dims() as i32)
    }

    /// Per-axis integer indices of a flat point index.
    #[inline]
    pub fn digits(&self, mut idx: usize) -> [usize; 4] {
        let mut d = [0; 4];
        for a in (0..self.real_dims()).rev() {
            d[a] = idx % self.points_per_axis;
            idx /= self.points_per_axis;
        }
        d
    }

    /// Coordinates `(x₁, y₁, x₂, y₂)` of a point; unused axes are zero.
    #[inline]
    pub fn coords(&self, idx: usize) -> [f64; 4] {
        let d = self.digits(idx);
        let h = self.spacing();
        [d[0] as f64 * h, d[1] as f64 * h, d[2] as f64 * h, d[3] as f64 * h]
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.par_iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut data);
        data
    }

    pub(crate) fn forward_complex(&self, mut data: Vec<Complex64>) -> Vec<Complex64> {
        self.fft.forward(&mut data);
        data
    }

    pub(crate) fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
        self.fft.inverse(&mut spectrum);
        spectrum
    }

    /// Fourier multiplier of `∂²/∂z_j ∂z̄_k` at a spectral index.
    #[inline]
    pub(crate) fn ddbar_symbol(&self, digits: &[usize; 4], j: usize, k: usize) -> Complex64 {
        if j == k {
            let s = self.k2[digits[2 * j]] + self.k2[digits[2 * j + 1]];
            Complex64::new(-0.25 * s, 0.0)
        } else {
            let (xj, yj) = (self.k1[digits[2 * j]], self.k1[digits[2 * j + 1]]);
            let (xk, yk) = (self.k1[digits[2 * k]], self.k1[digits[2 * k + 1]]);
            Complex64::new(-0.25 * (xj * xk + yj * yk), -0.25 * (xj * yk - yj * xk))
        }
    }

    /// Fourier multiplier of the flat operator `Σ_j ∂²/∂z_j ∂z̄_j = Δ/4`.
    #[inline]
    pub(crate) fn trace_symbol(&self, digits: &[usize; 4]) -> f64 {
        (0..self.n).map(|j| self.ddbar_symbol(digits, j, j).re).sum()
    }

    /// Spectral first derivative along real axis `axis`.
    pub fn derivative(&self, values: &[f64], axis: usize) -> Vec<f64> {
        let mut spec = self.forward(values);
        spec.par_iter_mut().enumerate().for_each(|(idx, v)| {
            let d = self.digits(idx);
            *v *= Complex64::new(0.0, self.k1[d[axis]]);
        });
        self.inverse(spec).into_iter().map(|v| v.re).collect()
    }
}
