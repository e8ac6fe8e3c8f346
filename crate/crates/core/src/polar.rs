//! Polar decomposition of wavefunctions into density and phase fields.
//!
//! `PolarFields` carries the density `rho`, an unwrapped action field
//! `s_action`, and the two derivative fields the estimation machinery runs
//! on: the momentum estimate `grad_s = dS/dq` and the error generator
//! `grad_log_rho = d(ln rho)/dq`. Points where the density sinks below a
//! floor are masked as nodes; derivative fields are not trusted there.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::SpectralOps;
use crate::grid::{Boundary, Grid1D, Grid2D};
use crate::wavefunction::{WaveFunction, WaveFunction2D};

/// Default node floor relative to the peak density.
pub const RHO_FLOOR_REL: f64 = 1e-12;

/// Differentiation backend for the derivative fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffScheme {
    /// Fourier differentiation; the default on periodic grids.
    Spectral,
    /// Second-order central differences on the log-density and action
    /// fields; the default on truncated grids.
    CentralDifference,
}

impl DiffScheme {
    pub fn default_for(boundary: Boundary) -> Self {
        match boundary {
            Boundary::Periodic => DiffScheme::Spectral,
            Boundary::Truncated => DiffScheme::CentralDifference,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolarFields {
    grid: Grid1D,
    hbar: f64,
    scheme: DiffScheme,
    rho: Vec<f64>,
    s_action: Vec<f64>,
    grad_s: Vec<f64>,
    grad_log_rho: Vec<f64>,
    node_mask: Vec<bool>,
    /// Second derivative of rho; supplies the finite limit of the Fisher
    /// integrand at quadratic nodes.
    rho_curvature: Vec<f64>,
    rho_floor: f64,
}

/// Wrap an angle increment into `(-pi, pi]`.
fn wrap_angle(d: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = d % two_pi;
    if w > std::f64::consts::PI {
        w -= two_pi;
    } else if w <= -std::f64::consts::PI {
        w += two_pi;
    }
    w
}

/// Sequential 1D unwrap of `hbar * arg(psi)` along the grid.
fn unwrap_phase(amplitudes: &[Complex64], hbar: f64) -> Vec<f64> {
    let mut s = Vec::with_capacity(amplitudes.len());
    let mut prev = amplitudes[0].arg();
    let mut acc = prev;
    s.push(hbar * acc);
    for a in &amplitudes[1..] {
        let theta = a.arg();
        acc += wrap_angle(theta - prev);
        prev = theta;
        s.push(hbar * acc);
    }
    s
}

/// Central differences with one-sided fallbacks next to masked points.
///
/// Returns the derivative and the set of points whose stencil could not
/// avoid masked values (these get masked in turn).
fn fd_derivative(
    values: &[f64],
    mask: &[bool],
    grid: &Grid1D,
) -> (Vec<f64>, Vec<bool>) {
    let n = values.len();
    let h = grid.spacing();
    let periodic = grid.boundary() == Boundary::Periodic;
    let idx = |j: isize| -> Option<usize> {
        if periodic {
            Some(j.rem_euclid(n as isize) as usize)
        } else if (0..n as isize).contains(&j) {
            Some(j as usize)
        } else {
            None
        }
    };
    let usable = |j: isize| idx(j).map(|u| !mask[u]).unwrap_or(false);

    let mut out = vec![0.0; n];
    let mut extra_mask = vec![false; n];
    for j in 0..n {
        if mask[j] {
            extra_mask[j] = true;
            continue;
        }
        let ji = j as isize;
        if usable(ji - 1) && usable(ji + 1) {
            let l = idx(ji - 1).unwrap();
            let r = idx(ji + 1).unwrap();
            out[j] = (values[r] - values[l]) / (2.0 * h);
        } else if usable(ji + 1) && usable(ji + 2) {
            let a = idx(ji + 1).unwrap();
            let b = idx(ji + 2).unwrap();
            out[j] = (-3.0 * values[j] + 4.0 * values[a] - values[b]) / (2.0 * h);
        } else if usable(ji - 1) && usable(ji - 2) {
            let a = idx(ji - 1).unwrap();
            let b = idx(ji - 2).unwrap();
            out[j] = (3.0 * values[j] - 4.0 * values[a] + values[b]) / (2.0 * h);
        } else {
            extra_mask[j] = true;
        }
    }
    (out, extra_mask)
}

fn fd_second_derivative(values: &[f64], grid: &Grid1D) -> Vec<f64> {
    let n = values.len();
    let h2 = grid.spacing() * grid.spacing();
    let periodic = grid.boundary() == Boundary::Periodic;
    (0..n)
        .map(|j| {
            let (l, r) = if periodic {
                ((j + n - 1) % n, (j + 1) % n)
            } else if j == 0 {
                (0, 1)
            } else if j == n - 1 {
                (n - 2, n - 1)
            } else {
                (j - 1, j + 1)
            };
            if l == j || r == j {
                // One-sided second difference at a truncated end.
                let (a, b, c) = if j == 0 {
                    (values[0], values[1], values[2])
                } else {
                    (values[n - 1], values[n - 2], values[n - 3])
                };
                (a - 2.0 * b + c) / h2
            } else {
                (values[l] - 2.0 * values[j] + values[r]) / h2
            }
        })
        .collect()
}

/// Decompose `psi` with the grid's default differentiation scheme and the
/// default node floor.
pub fn polar_decompose(psi: &WaveFunction, rho_floor_rel: Option<f64>) -> Result<PolarFields> {
    polar_decompose_with(
        psi,
        DiffScheme::default_for(psi.grid().boundary()),
        rho_floor_rel,
    )
}

pub fn polar_decompose_with(
    psi: &WaveFunction,
    scheme: DiffScheme,
    rho_floor_rel: Option<f64>,
) -> Result<PolarFields> {
    psi.assert_normalized()?;
    let grid = psi.grid().clone();
    let hbar = psi.hbar();
    let rho = psi.density();
    let peak = rho.iter().cloned().fold(0.0, f64::max);
    let rho_floor = rho_floor_rel.unwrap_or(RHO_FLOOR_REL) * peak;
    let mut node_mask: Vec<bool> = rho.iter().map(|&r| r < rho_floor).collect();
    if node_mask.iter().all(|&m| m) {
        return Err(Error::AllPointsMasked);
    }

    let s_action = unwrap_phase(psi.amplitudes(), hbar);

    let (grad_s, grad_log_rho, rho_curvature) = match scheme {
        DiffScheme::Spectral => {
            let ops = SpectralOps::new(&grid);
            let dpsi = ops.derivative(psi.amplitudes());
            let d2psi = ops.second_derivative(psi.amplitudes());
            let mut grad_s = vec![0.0; grid.len()];
            let mut grad_log_rho = vec![0.0; grid.len()];
            let mut curvature = vec![0.0; grid.len()];
            for j in 0..grid.len() {
                let cross = psi.amplitudes()[j].conj() * dpsi[j];
                curvature[j] =
                    2.0 * (psi.amplitudes()[j].conj() * d2psi[j]).re + 2.0 * dpsi[j].norm_sqr();
                if !node_mask[j] {
                    grad_s[j] = hbar * cross.im / rho[j];
                    grad_log_rho[j] = 2.0 * cross.re / rho[j];
                }
            }
            (grad_s, grad_log_rho, curvature)
        }
        DiffScheme::CentralDifference => {
            let ln_rho: Vec<f64> = rho.iter().map(|&r| r.max(f64::MIN_POSITIVE).ln()).collect();
            let (grad_log_rho, mask_a) = fd_derivative(&ln_rho, &node_mask, &grid);
            let (grad_s, mask_b) = fd_derivative(&s_action, &node_mask, &grid);
            for j in 0..grid.len() {
                node_mask[j] = node_mask[j] || mask_a[j] || mask_b[j];
            }
            let curvature = fd_second_derivative(&rho, &grid);
            (grad_s, grad_log_rho, curvature)
        }
    };

    if node_mask.iter().all(|&m| m) {
        return Err(Error::AllPointsMasked);
    }
    for j in 0..grid.len() {
        if !node_mask[j] && (!grad_s[j].is_finite() || !grad_log_rho[j].is_finite()) {
            return Err(Error::NonFinite {
                context: "polar derivative fields",
            });
        }
    }

    Ok(PolarFields {
        grid,
        hbar,
        scheme,
        rho,
        s_action,
        grad_s,
        grad_log_rho,
        node_mask,
        rho_curvature,
        rho_floor,
    })
}

impl PolarFields {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn scheme(&self) -> DiffScheme {
        self.scheme
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn s_action(&self) -> &[f64] {
        &self.s_action
    }

    pub fn grad_s(&self) -> &[f64] {
        &self.grad_s
    }

    pub fn grad_log_rho(&self) -> &[f64] {
        &self.grad_log_rho
    }

    pub fn node_mask(&self) -> &[bool] {
        &self.node_mask
    }

    pub fn rho_floor(&self) -> f64 {
        self.rho_floor
    }

    pub fn rho_curvature(&self) -> &[f64] {
        &self.rho_curvature
    }

    /// `sqrt(rho) * exp(i S / hbar)` as a wavefunction.
    pub fn reconstruct(&self) -> Result<WaveFunction> {
        let amplitudes = self
            .rho
            .iter()
            .zip(&self.s_action)
            .map(|(&r, &s)| Complex64::from_polar(r.sqrt(), s / self.hbar))
            .collect();
        WaveFunction::new(amplitudes, self.grid.clone(), self.hbar)
    }

    /// Rectangle-rule integral of per-point values.
    pub fn integrate(&self, values: impl Iterator<Item = f64>) -> f64 {
        values.sum::<f64>() * self.grid.spacing()
    }

    /// Rectangle-rule integral of `f(j) * rho_j` over unmasked points.
    pub fn integrate_density_weighted(&self, f: impl Fn(usize) -> f64) -> f64 {
        let sum: f64 = (0..self.grid.len())
            .filter(|&j| !self.node_mask[j])
            .map(|j| f(j) * self.rho[j])
            .sum();
        sum * self.grid.spacing()
    }

    /// Pointwise Fisher integrand `(d ln rho / dq)^2 rho`.
    ///
    /// At masked points the raw ratio is 0/0; for a quadratic node the limit
    /// is `2 rho''`, which keeps the quadrature consistent when nodes land
    /// exactly on grid points. Deep tails have `rho'' ~ 0` and contribute
    /// nothing, matching their vanishing mass.
    pub fn fisher_integrand(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|j| {
                if self.node_mask[j] {
                    (2.0 * self.rho_curvature[j]).max(0.0)
                } else {
                    self.grad_log_rho[j] * self.grad_log_rho[j] * self.rho[j]
                }
            })
            .collect()
    }

    fn interpolate(&self, field: &[f64], q: f64) -> Result<f64> {
        let (cell, frac) = self.grid.locate(q)?;
        let right = self.grid.right_neighbor(cell);
        if self.node_mask[cell] || self.node_mask[right] {
            return Err(Error::NodeRegionQuery { q });
        }
        Ok(field[cell] * (1.0 - frac) + field[right] * frac)
    }

    pub fn grad_s_at(&self, q: f64) -> Result<f64> {
        self.interpolate(&self.grad_s, q)
    }

    pub fn grad_log_rho_at(&self, q: f64) -> Result<f64> {
        self.interpolate(&self.grad_log_rho, q)
    }

    pub fn rho_at(&self, q: f64) -> Result<f64> {
        self.interpolate(&self.rho, q)
    }

    /// Mean position under rho (grid coordinate).
    pub fn mean_position(&self) -> f64 {
        (0..self.grid.len())
            .map(|j| self.grid.point(j) * self.rho[j])
            .sum::<f64>()
            * self.grid.spacing()
    }

    /// True when the density at the domain edges exceeds `1e-6` of the peak,
    /// in which case position moments only lower-bound the continuum values.
    pub fn grid_limited(&self) -> bool {
        let peak = self.rho.iter().cloned().fold(0.0, f64::max);
        let n = self.grid.len();
        self.rho[0].max(self.rho[n - 1]) > 1e-6 * peak
    }
}

/// Polar fields on a configuration plane. Phase unwrapping runs along rows
/// first, then down columns; a nonzero consistency residual marks phase
/// winding around nodes.
#[derive(Debug, Clone)]
pub struct PolarFields2D {
    pub rho: Vec<f64>,
    pub s_action: Vec<f64>,
    pub node_mask: Vec<bool>,
    pub unwrap_residual: f64,
    pub winding_flagged: bool,
}

pub fn polar_decompose_2d(psi: &WaveFunction2D, rho_floor_rel: Option<f64>) -> Result<PolarFields2D> {
    let grid: &Grid2D = psi.grid();
    let (na, nb) = (grid.grid_a.len(), grid.grid_b.len());
    let hbar = psi.hbar();
    let amps = psi.amplitudes();
    let rho: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    let peak = rho.iter().cloned().fold(0.0, f64::max);
    let floor = rho_floor_rel.unwrap_or(RHO_FLOOR_REL) * peak;
    let node_mask: Vec<bool> = rho.iter().map(|&r| r < floor).collect();
    if node_mask.iter().all(|&m| m) {
        return Err(Error::AllPointsMasked);
    }

    let mut s = vec![0.0; na * nb];
    // First row left to right.
    let first_row: Vec<Complex64> = amps[..nb].to_vec();
    s[..nb].copy_from_slice(&unwrap_phase(&first_row, hbar));
    // Then each column downward from its first-row anchor.
    for ib in 0..nb {
        let mut prev_theta = amps[ib].arg();
        let mut acc = s[ib];
        for ia in 1..na {
            let theta = amps[ia * nb + ib].arg();
            acc += hbar * wrap_angle(theta - prev_theta);
            prev_theta = theta;
            s[ia * nb + ib] = acc;
        }
    }

    // Horizontal increments in later rows must match the wrapped raw
    // increments up to rounding; a 2*pi*hbar mismatch is winding.
    let mut residual = 0.0_f64;
    for ia in 1..na {
        for ib in 0..nb - 1 {
            let j = ia * nb + ib;
            if node_mask[j] || node_mask[j + 1] {
                continue;
            }
            let raw = hbar * wrap_angle(amps[j + 1].arg() - amps[j].arg());
            residual = residual.max((s[j + 1] - s[j] - raw).abs());
        }
    }
    let winding_flagged = residual > std::f64::consts::PI * hbar;

    Ok(PolarFields2D {
        rho,
        s_action: s,
        node_mask,
        unwrap_residual: residual,
        winding_flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::StateSpec;

    #[test]
    fn plane_wave_fields() {
        let grid = Grid1D::periodic(128, -10.0, 20.0).unwrap();
        let hbar = 1.0;
        let p0 = grid.snap_momentum(1.0, hbar);
        let psi = StateSpec::plane_wave(p0).build(&grid, hbar).unwrap();
        let fields = polar_decompose(&psi, None).unwrap();
        for j in 0..grid.len() {
            assert!(!fields.node_mask()[j]);
            assert!((fields.grad_s()[j] - p0).abs() < 1e-9);
            assert!(fields.grad_log_rho()[j].abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_fields_match_closed_form_spectral() {
        let grid = Grid1D::periodic(512, -20.0, 40.0).unwrap();
        let (q0, sigma, p0) = (0.5, 1.2, 0.0);
        let psi = StateSpec::gaussian(q0, sigma, p0).build(&grid, 1.0).unwrap();
        let fields = polar_decompose(&psi, None).unwrap();
        for (j, &q) in grid.points().iter().enumerate() {
            if fields.node_mask()[j] || fields.rho()[j] < 1e-8 {
                continue;
            }
            let expect = -(q - q0) / (sigma * sigma);
            assert!(
                (fields.grad_log_rho()[j] - expect).abs() < 1e-6,
                "q={q} got {} expect {expect}",
                fields.grad_log_rho()[j]
            );
            assert!(fields.grad_s()[j].abs() < 1e-8);
        }
    }

    #[test]
    fn gaussian_fields_match_closed_form_central() {
        let grid = Grid1D::truncated(512, -12.0, 24.0).unwrap();
        let (q0, sigma, p0) = (0.0, 1.0, 0.7);
        let psi = StateSpec::gaussian(q0, sigma, p0).build(&grid, 1.0).unwrap();
        let fields = polar_decompose(&psi, None).unwrap();
        for (j, &q) in grid.points().iter().enumerate() {
            if fields.node_mask()[j] {
                continue;
            }
            // Central differences are exact on the quadratic log-density and
            // the linear phase, up to rounding noise amplified by 1/h.
            let expect = -(q - q0) / (sigma * sigma);
            assert!((fields.grad_log_rho()[j] - expect).abs() < 1e-9);
            assert!((fields.grad_s()[j] - 0.7).abs() < 1e-9);
        }
    }

    #[test]
    fn cosine_masks_nodes_and_zeroes_grad_s() {
        let grid = Grid1D::periodic(256, -10.0, 20.0).unwrap();
        let hbar = 1.0;
        let p0 = grid.snap_momentum(1.2, hbar);
        let psi = StateSpec::cosine(p0).build(&grid, hbar).unwrap();
        let fields = polar_decompose(&psi, None).unwrap();
        let masked = fields.node_mask().iter().filter(|&&m| m).count();
        assert!(masked > 0, "cosine nodes land on this grid");
        for j in 0..grid.len() {
            if !fields.node_mask()[j] {
                assert!(fields.grad_s()[j].abs() < 1e-6);
            }
        }
    }

    #[test]
    fn reconstruct_roundtrip() {
        let grid = Grid1D::periodic(256, -15.0, 30.0).unwrap();
        let psi = StateSpec::gaussian(-1.0, 2.0, 0.9).build(&grid, 1.0).unwrap();
        let fields = polar_decompose(&psi, None).unwrap();
        let back = fields.reconstruct().unwrap();
        assert!(back.max_deviation_up_to_phase(&psi) < 1e-12);
    }

    #[test]
    fn all_masked_is_an_error() {
        let grid = Grid1D::periodic(32, 0.0, 10.0).unwrap();
        let psi = StateSpec::gaussian(5.0, 0.5, 0.0).build(&grid, 1.0).unwrap();
        assert!(matches!(
            polar_decompose(&psi, Some(10.0)),
            Err(Error::AllPointsMasked)
        ));
    }

    #[test]
    fn non_normalized_rejected() {
        let grid = Grid1D::periodic(32, 0.0, 10.0).unwrap();
        let amps = vec![Complex64::new(1.0, 0.0); 32];
        let psi = WaveFunction::new(amps, grid, 1.0).unwrap();
        assert!(polar_decompose(&psi, None).is_err());
    }

    #[test]
    fn product_state_unwraps_cleanly_in_2d() {
        let ga = Grid1D::periodic(32, -8.0, 16.0).unwrap();
        let gb = Grid1D::periodic(32, -8.0, 16.0).unwrap();
        let psi_a = StateSpec::gaussian(0.0, 1.0, 0.5).build(&ga, 1.0).unwrap();
        let psi_b = StateSpec::gaussian(0.0, 1.5, -0.25).build(&gb, 1.0).unwrap();
        let joint = WaveFunction2D::product(&psi_a, &psi_b).unwrap();
        let fields = polar_decompose_2d(&joint, None).unwrap();
        assert!(!fields.winding_flagged, "residual {}", fields.unwrap_residual);
        assert!(fields.unwrap_residual < 1e-9);
    }
}
