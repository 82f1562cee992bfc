//! Multi-dimensional FFT on a periodic grid with `N` points per axis.
//!
//! Each pass transforms the contiguous last axis and rotates the axes
//! cyclically, so after `dims` passes the data is back in its original
//! row-major layout.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

pub(crate) struct NdFft {
    len: usize,
    dims: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for NdFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NdFft").field("len", &self.len).field("dims", &self.dims).finish()
    }
}

impl NdFft {
    pub fn new(len: usize, dims: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            dims,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn total(&self) -> usize {
        self.len.pow(self.dims as u32)
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut Vec<Complex64>) {
        self.run(data, &self.forward);
    }

    /// Inverse transform including the `1/total` normalization.
    pub fn inverse(&self, data: &mut Vec<Complex64>) {
        self.run(data, &self.inverse);
        let s = 1.0 / self.total() as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }

    fn run(&self, data: &mut Vec<Complex64>, plan: &Arc<dyn Fft<f64>>) {
        let n = self.len;
        let total = self.total();
        assert_eq!(data.len(), total);
        let rows = total / n;
        let lines_per_task = (4096 / n).max(1);
        let mut scratch_buf = vec![Complex64::new(0.0, 0.0); total];
        for _ in 0..self.dims {
            data.par_chunks_mut(n * lines_per_task).for_each_init(
                || vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()],
                |scratch, chunk| plan.process_with_scratch(chunk, scratch),
            );
            // rotate: out[r][j] = in[j][r], treating `in` as rows x n; each task
            // owns a group of output rows so reads stay contiguous
            let group = [8, 4, 2, 1].into_iter().find(|g| n % g == 0).unwrap();
            let src = &*data;
            scratch_buf.par_chunks_mut(rows * group).enumerate().for_each(|(gi, out)| {
                let r0 = gi * group;
                for j in 0..rows {
                    let line = &src[j * n + r0..j * n + r0 + group];
                    for (k, v) in line.iter().enumerate() {
                        out[k * rows + j] = *v;
                    }
                }
            });
            std::mem::swap(data, &mut scratch_buf);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_lands_in_one_bin() {
        let n = 8;
        let fft = NdFft::new(n, 2);
        // e^{i(2 x0 + 3 x1)} sampled on the grid
        let mut data: Vec<Complex64> = (0..n * n)
            .map(|idx| {
                let (a, b) = (idx / n, idx % n);
                let phase = 2.0 * std::f64::consts::PI * (2.0 * a as f64 + 3.0 * b as f64) / n as f64;
                Complex64::from_polar(1.0, phase)
            })
            .collect();
        let orig = data.clone();
        fft.forward(&mut data);
        for (idx, v) in data.iter().enumerate() {
            let want = if idx == 2 * n + 3 { (n * n) as f64 } else { 0.0 };
            assert!((v.re - want).abs() < 1e-10 && v.im.abs() < 1e-10, "{idx}: {v}");
        }
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn four_dims_round_trip() {
        let fft = NdFft::new(8, 4);
        let mut data: Vec<Complex64> = (0..fft.total()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let orig = data.clone();
        fft.forward(&mut data);
        fft.inverse(&mut data);
        let err = data.iter().zip(&orig).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-13);
    }
}
