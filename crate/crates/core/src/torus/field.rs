use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::TorusGrid;
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;

/// Real-valued field on a torus grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite value at grid index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &TorusGrid, value: f64) -> Self {
        Self { grid: grid.clone(), values: vec![value; grid.len()] }
    }

    /// Samples `f(x₁, y₁, x₂, y₂)` at every grid point.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn([f64; 4]) -> f64 + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.coords(i))).collect();
        Self { grid: grid.clone(), values }
    }

    /// Sum of cosine modes.
    pub fn from_modes(grid: &TorusGrid, modes: &[FourierMode]) -> Self {
        Self::from_fn(grid, |x| modes.iter().map(|m| m.eval(&x)).sum())
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Rectangle-rule integral over the torus (exact for band-limited data).
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Copy with the mean removed.
    pub fn mean_zero(&self) -> Self {
        let m = self.mean();
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v - m).collect() }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        Self { grid: self.grid.clone(), values: self.values.par_iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.par_iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    /// `max |self - other|`.
    pub fn sup_distance(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// `amplitude · cos(k · (x₁, y₁, x₂, y₂) + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierMode {
    pub amplitude: f64,
    pub wave: [i32; 4],
    pub phase: f64,
}

impl FourierMode {
    pub fn new(amplitude: f64, wave: [i32; 4], phase: f64) -> Self {
        Self { amplitude, wave, phase }
    }

    #[inline]
    pub fn eval(&self, x: &[f64; 4]) -> f64 {
        let arg: f64 = self.wave.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum();
        self.amplitude * (arg + self.phase).cos()
    }
}

/// Field of Hermitian matrices, stored as `n²` complex entries per point.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianFormField {
    grid: TorusGrid,
    data: Vec<Complex64>,
}

impl HermitianFormField {
    /// Builds from flat per-point row-major entries, symmetrizing each matrix.
    pub fn new(grid: TorusGrid, data: Vec<Complex64>) -> Result<Self> {
        let n = grid.dim();
        let expected = grid.len() * n * n;
        if data.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: data.len() });
        }
        let mut field = Self { grid, data };
        field.symmetrize();
        Ok(field)
    }

    pub(crate) fn from_vec_unchecked(grid: TorusGrid, data: Vec<Complex64>) -> Self {
        Self { grid, data }
    }

    pub fn constant(grid: &TorusGrid, m: &HermitianMatrix) -> Result<Self> {
        let n = grid.dim();
        if m.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.dim() });
        }
        let per: Vec<Complex64> = (0..n * n).map(|k| m.get(k / n, k % n)).collect();
        let data = (0..grid.len()).flat_map(|_| per.iter().copied()).collect();
        Ok(Self { grid: grid.clone(), data })
    }

    pub fn identity(grid: &TorusGrid) -> Self {
        Self::constant(grid, &HermitianMatrix::identity(grid.dim())).unwrap()
    }

    pub fn from_fn(grid: &TorusGrid, f: impl Fn([f64; 4]) -> HermitianMatrix + Sync) -> Result<Self> {
        let n = grid.dim();
        let mats: Vec<HermitianMatrix> = (0..grid.len()).into_par_iter().map(|i| f(grid.coords(i))).collect();
        if let Some(m) = mats.iter().find(|m| m.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: m.dim() });
        }
        let data = mats
            .iter()
            .flat_map(|m| (0..n * n).map(move |k| m.get(k / n, k % n)))
            .collect();
        Ok(Self { grid: grid.clone(), data })
    }

    fn symmetrize(&mut self) {
        let n = self.grid.dim();
        self.data.par_chunks_mut(n * n).for_each(|m| {
            for i in 0..n {
                m[i * n + i].im = 0.0;
                for j in (i + 1)..n {
                    let v = (m[i * n + j] + m[j * n + i].conj()) * 0.5;
                    m[i * n + j] = v;
                    m[j * n + i] = v.conj();
                }
            }
        });
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[inline]
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, idx: usize) -> HermitianMatrix {
        let n = self.grid.dim();
        let chunk = &self.data[idx * n * n..(idx + 1) * n * n];
        HermitianMatrix::from_entries(n, chunk).expect("stored entries have the grid dimension")
    }

    pub fn add(&self, other: &HermitianFormField) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let data = self.data.par_iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid.clone(), data })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { grid: self.grid.clone(), data: self.data.par_iter().map(|v| v * s).collect() }
    }

    /// Largest entry-wise difference.
    pub fn sup_distance(&self, other: &HermitianFormField) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn integrals() {
        let g = TorusGrid::new(2, 8).unwrap();
        assert!((ScalarField::constant(&g, 1.0).integrate() - TAU.powi(4)).abs() < 1e-9);
        let c = ScalarField::from_fn(&g, |x| x[0].cos());
        assert!(c.integrate().abs() < 1e-13 * TAU.powi(4));
        // ∫ cos² x₁ cos² y₂ = (2π)^4 / 4
        let p = ScalarField::from_fn(&g, |x| (x[0].cos() * x[3].cos()).powi(2));
        assert!((p.integrate() - TAU.powi(4) / 4.0).abs() < 1e-10);
    }

    #[test]
    fn hermitian_field_roundtrip() {
        let g = TorusGrid::new(2, 8).unwrap();
        let m = HermitianMatrix::from_entries(
            2,
            &[Complex64::new(2.0, 0.0), Complex64::new(0.1, 0.3), Complex64::new(0.1, -0.3), Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        let f = HermitianFormField::constant(&g, &m).unwrap();
        assert_eq!(f.at(17), m);
        assert!(matches!(
            HermitianFormField::constant(&g, &HermitianMatrix::identity(1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
