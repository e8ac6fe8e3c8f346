//! Phase-space observables quadratic in momentum and their quantum
//! expectation values.
//!
//! An observable is `O(q, p) = A(q) + B(q) p + C(q) p^2`. Its quantum
//! counterpart uses symmetric ordering for the linear term, `(B p + p B)/2`,
//! and the sandwich `p C(q) p` for the quadratic term; the momentum operator
//! acts spectrally.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::SpectralOps;
use crate::grid::{Boundary, Grid1D};
use crate::wavefunction::WaveFunction;

/// Boundary clearance (in grid spacings) required for position moments and
/// the commutator on periodic grids.
pub const BOUNDARY_CLEARANCE: usize = 5;

#[derive(Debug, Clone)]
pub struct Observable {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl Observable {
    pub fn from_fields(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || b.len() != c.len() {
            return Err(Error::ShapeMismatch {
                expected: a.len(),
                got: b.len().max(c.len()),
            });
        }
        if a.iter().chain(&b).chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "observable coefficients",
            });
        }
        Ok(Observable { a, b, c })
    }

    pub fn from_fns(
        grid: &Grid1D,
        a: impl Fn(f64) -> f64,
        b: impl Fn(f64) -> f64,
        c: impl Fn(f64) -> f64,
    ) -> Self {
        let pts = grid.points();
        Observable {
            a: pts.iter().map(|&q| a(q)).collect(),
            b: pts.iter().map(|&q| b(q)).collect(),
            c: pts.iter().map(|&q| c(q)).collect(),
        }
    }

    pub fn unit(grid: &Grid1D) -> Self {
        Self::from_fns(grid, |_| 1.0, |_| 0.0, |_| 0.0)
    }

    pub fn position(grid: &Grid1D) -> Self {
        Self::from_fns(grid, |q| q, |_| 0.0, |_| 0.0)
    }

    pub fn position_squared(grid: &Grid1D) -> Self {
        Self::from_fns(grid, |q| q * q, |_| 0.0, |_| 0.0)
    }

    pub fn momentum(grid: &Grid1D) -> Self {
        Self::from_fns(grid, |_| 0.0, |_| 1.0, |_| 0.0)
    }

    pub fn momentum_squared(grid: &Grid1D) -> Self {
        Self::from_fns(grid, |_| 0.0, |_| 0.0, |_| 1.0)
    }

    /// `(q p + p q) / 2` as the classical monomial `q * p`.
    pub fn symmetrized_position_momentum(grid: &Grid1D) -> Self {
        Self::from_fns(grid, |_| 0.0, |q| q, |_| 0.0)
    }

    /// `p q^2 p` as the classical monomial `q^2 p^2`.
    pub fn momentum_position_squared_momentum(grid: &Grid1D) -> Self {
        Self::from_fns(grid, |_| 0.0, |_| 0.0, |q| q * q)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Classical value `O(q, p)` with coefficients linearly interpolated at `q`.
    pub fn classical_value(&self, grid: &Grid1D, q: f64, p: f64) -> Result<f64> {
        if self.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: self.len(),
            });
        }
        let (cell, frac) = grid.locate(q)?;
        let right = grid.right_neighbor(cell);
        let lerp = |f: &[f64]| f[cell] * (1.0 - frac) + f[right] * frac;
        Ok(lerp(&self.a) + lerp(&self.b) * p + lerp(&self.c) * p * p)
    }
}

/// `<A(q)> + <(B p + p B)/2> + <p C(q) p>` with spectral momentum.
pub fn quantum_expectation(psi: &WaveFunction, obs: &Observable) -> Result<f64> {
    psi.assert_normalized()?;
    let grid = psi.grid();
    if obs.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            got: obs.len(),
        });
    }
    let dq = grid.spacing();
    let rho = psi.density();
    let a_term: f64 = obs.a.iter().zip(&rho).map(|(a, r)| a * r).sum::<f64>() * dq;

    let needs_momentum = obs.b.iter().any(|&v| v != 0.0) || obs.c.iter().any(|&v| v != 0.0);
    if !needs_momentum {
        return Ok(a_term);
    }

    let ops = SpectralOps::new(grid);
    let p_psi = ops.apply_momentum(psi.amplitudes(), psi.hbar());
    let b_term: f64 = psi
        .amplitudes()
        .iter()
        .zip(&p_psi)
        .zip(&obs.b)
        .map(|((amp, ppsi), b)| b * (amp.conj() * ppsi).re)
        .sum::<f64>()
        * dq;
    let c_term: f64 = p_psi
        .iter()
        .zip(&obs.c)
        .map(|(ppsi, c)| c * ppsi.norm_sqr())
        .sum::<f64>()
        * dq;
    Ok(a_term + b_term + c_term)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    Position,
    Momentum,
}

fn require_boundary_clearance(psi: &WaveFunction) -> Result<()> {
    if !psi.clears_boundary(BOUNDARY_CLEARANCE) {
        return Err(Error::BoundarySupport {
            spacings: BOUNDARY_CLEARANCE,
        });
    }
    Ok(())
}

/// Variance of position or momentum.
///
/// Position moments use the grid coordinate; on periodic grids that
/// coordinate is only meaningful for states clear of the wrap-around point,
/// so such support is required there.
pub fn quantum_variance(psi: &WaveFunction, which: Moment) -> Result<f64> {
    psi.assert_normalized()?;
    let grid = psi.grid();
    let dq = grid.spacing();
    match which {
        Moment::Position => {
            if grid.boundary() == Boundary::Periodic {
                require_boundary_clearance(psi)?;
            }
            let rho = psi.density();
            let mean: f64 = rho
                .iter()
                .enumerate()
                .map(|(j, r)| grid.point(j) * r)
                .sum::<f64>()
                * dq;
            let second: f64 = rho
                .iter()
                .enumerate()
                .map(|(j, r)| {
                    let q = grid.point(j);
                    q * q * r
                })
                .sum::<f64>()
                * dq;
            Ok(second - mean * mean)
        }
        Moment::Momentum => {
            let ops = SpectralOps::new(grid);
            let p_psi = ops.apply_momentum(psi.amplitudes(), psi.hbar());
            let mean: f64 = psi
                .amplitudes()
                .iter()
                .zip(&p_psi)
                .map(|(amp, ppsi)| (amp.conj() * ppsi).re)
                .sum::<f64>()
                * dq;
            let second: f64 = p_psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * dq;
            Ok(second - mean * mean)
        }
    }
}

/// Discretized `<[q, p]>`; equals `i hbar` up to truncation for smooth states
/// supported away from the boundary.
pub fn commutator_expectation(psi: &WaveFunction) -> Result<Complex64> {
    psi.assert_normalized()?;
    require_boundary_clearance(psi)?;
    let grid = psi.grid();
    let dq = grid.spacing();
    let ops = SpectralOps::new(grid);
    let p_psi = ops.apply_momentum(psi.amplitudes(), psi.hbar());
    let q_psi: Vec<Complex64> = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(j, amp)| amp * grid.point(j))
        .collect();
    let p_q_psi = ops.apply_momentum(&q_psi, psi.hbar());
    let sum: Complex64 = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(j, amp)| {
            let qp = grid.point(j) * p_psi[j];
            amp.conj() * (qp - p_q_psi[j])
        })
        .sum();
    Ok(sum * dq)
}
