//! Spectral calculus on periodic grids, backed by rustfft.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Grid1D, Grid2D};

/// Angular wavenumbers in FFT ordering for an `n`-point grid of the given spacing.
pub fn wavenumbers(n: usize, spacing: f64) -> Vec<f64> {
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * spacing);
    (0..n)
        .map(|j| {
            let m = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
            m as f64 * dk
        })
        .collect()
}

/// Cached FFT plans plus the wavenumber table for one grid size.
pub struct SpectralOps {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl SpectralOps {
    pub fn new(grid: &Grid1D) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.len();
        SpectralOps {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            k: wavenumbers(n, grid.spacing()),
        }
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn forward(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut buf = f.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    /// Apply a multiplier in wavenumber space: `f -> IFFT(m(k) * FFT(f))`.
    pub fn apply_k_multiplier(&self, f: &[Complex64], m: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let mut buf = self.forward(f);
        for (v, &k) in buf.iter_mut().zip(&self.k) {
            *v *= m(k);
        }
        self.inverse_in_place(&mut buf);
        buf
    }

    /// First spatial derivative.
    pub fn derivative(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.apply_k_multiplier(f, |k| Complex64::new(0.0, k))
    }

    /// Second spatial derivative.
    pub fn second_derivative(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.apply_k_multiplier(f, |k| Complex64::new(-k * k, 0.0))
    }

    /// Momentum operator `-i hbar d/dq`.
    pub fn apply_momentum(&self, f: &[Complex64], hbar: f64) -> Vec<Complex64> {
        self.apply_k_multiplier(f, |k| Complex64::new(hbar * k, 0.0))
    }
}

/// FFT along both axes of a row-major `(n_a, n_b)` field, in place.
pub fn fft2_in_place(field: &mut [Complex64], grid: &Grid2D, inverse: bool) {
    let (na, nb) = (grid.grid_a.len(), grid.grid_b.len());
    assert_eq!(field.len(), na * nb);
    let mut planner = FftPlanner::new();
    let plan_b = if inverse {
        planner.plan_fft_inverse(nb)
    } else {
        planner.plan_fft_forward(nb)
    };
    let plan_a = if inverse {
        planner.plan_fft_inverse(na)
    } else {
        planner.plan_fft_forward(na)
    };

    for row in field.chunks_exact_mut(nb) {
        plan_b.process(row);
    }
    let mut column = vec![Complex64::default(); na];
    for ib in 0..nb {
        for ia in 0..na {
            column[ia] = field[ia * nb + ib];
        }
        plan_a.process(&mut column);
        for ia in 0..na {
            field[ia * nb + ib] = column[ia];
        }
    }
    if inverse {
        let scale = 1.0 / (na * nb) as f64;
        for v in field.iter_mut() {
            *v *= scale;
        }
    }
}
