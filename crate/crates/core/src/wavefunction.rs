//! Complex amplitude fields on 1D and 2D grids.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, Grid2D};

/// Tolerance below which a state counts as normalized.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct WaveFunction {
    amplitudes: Vec<Complex64>,
    grid: Grid1D,
    hbar: f64,
}

impl WaveFunction {
    pub fn new(amplitudes: Vec<Complex64>, grid: Grid1D, hbar: f64) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: amplitudes.len(),
            });
        }
        if !(hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "wavefunction construction",
            });
        }
        Ok(WaveFunction {
            amplitudes,
            grid,
            hbar,
        })
    }

    /// Construct and normalize in one step.
    pub fn normalized(amplitudes: Vec<Complex64>, grid: Grid1D, hbar: f64) -> Result<Self> {
        let mut psi = Self::new(amplitudes, grid, hbar)?;
        psi.normalize()?;
        Ok(psi)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// L2 norm under the rectangle rule.
    pub fn norm(&self) -> f64 {
        let sum: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        (sum * self.grid.spacing()).sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NonFinite {
                context: "normalization",
            });
        }
        let inv = 1.0 / norm;
        for a in &mut self.amplitudes {
            *a *= inv;
        }
        Ok(())
    }

    pub fn assert_normalized(&self) -> Result<()> {
        let deviation = (self.norm() - 1.0).abs();
        if deviation > NORM_TOL {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(())
    }

    /// Probability density `|psi|^2` per point.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &WaveFunction) -> Complex64 {
        debug_assert_eq!(self.grid.len(), other.grid.len());
        let sum: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        sum * self.grid.spacing()
    }

    /// Largest pointwise deviation from `other` after removing one global phase.
    pub fn max_deviation_up_to_phase(&self, other: &WaveFunction) -> f64 {
        let overlap = self.inner(other);
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a * phase - b).norm())
            .fold(0.0, f64::max)
    }

    /// True when the density within `spacings` of either end stays below
    /// `1e-12` of the peak. Position moments and commutators require this.
    pub fn clears_boundary(&self, spacings: usize) -> bool {
        let rho = self.density();
        let peak = rho.iter().cloned().fold(0.0, f64::max);
        let n = rho.len();
        let band = spacings.min(n / 2);
        let edge = rho[..band]
            .iter()
            .chain(rho[n - band..].iter())
            .cloned()
            .fold(0.0, f64::max);
        edge <= 1e-12 * peak
    }
}

#[derive(Debug, Clone)]
pub struct WaveFunction2D {
    amplitudes: Vec<Complex64>,
    grid: Grid2D,
    hbar: f64,
}

impl WaveFunction2D {
    pub fn new(amplitudes: Vec<Complex64>, grid: Grid2D, hbar: f64) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: amplitudes.len(),
            });
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "2d wavefunction construction",
            });
        }
        Ok(WaveFunction2D {
            amplitudes,
            grid,
            hbar,
        })
    }

    /// Tensor product `psi_a(q_a) * psi_b(q_b)`.
    pub fn product(psi_a: &WaveFunction, psi_b: &WaveFunction) -> Result<Self> {
        let grid = Grid2D::new(psi_a.grid().clone(), psi_b.grid().clone());
        let mut amplitudes = Vec::with_capacity(grid.len());
        for a in psi_a.amplitudes() {
            for b in psi_b.amplitudes() {
                amplitudes.push(a * b);
            }
        }
        Self::new(amplitudes, grid, psi_a.hbar())
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    fn cell_area(&self) -> f64 {
        self.grid.grid_a.spacing() * self.grid.grid_b.spacing()
    }

    pub fn norm(&self) -> f64 {
        let sum: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        (sum * self.cell_area()).sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NonFinite {
                context: "2d normalization",
            });
        }
        let inv = 1.0 / norm;
        for a in &mut self.amplitudes {
            *a *= inv;
        }
        Ok(())
    }

    /// Marginal density of the second coordinate: `int |psi|^2 dq_a`.
    pub fn marginal_b(&self) -> Vec<f64> {
        let (na, nb) = (self.grid.grid_a.len(), self.grid.grid_b.len());
        let mut out = vec![0.0; nb];
        for ia in 0..na {
            let row = &self.amplitudes[ia * nb..(ia + 1) * nb];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.norm_sqr();
            }
        }
        let da = self.grid.grid_a.spacing();
        for o in &mut out {
            *o *= da;
        }
        out
    }

    /// Normalized conditional slice along `q_a` at the column `ib`.
    pub fn slice_at_b(&self, ib: usize) -> Result<WaveFunction> {
        let (na, nb) = (self.grid.grid_a.len(), self.grid.grid_b.len());
        let column: Vec<Complex64> = (0..na).map(|ia| self.amplitudes[ia * nb + ib]).collect();
        WaveFunction::normalized(column, self.grid.grid_a.clone(), self.hbar)
    }

    pub fn max_deviation_up_to_phase(&self, other: &WaveFunction2D) -> f64 {
        let overlap: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a * phase - b).norm())
            .fold(0.0, f64::max)
    }
}
