//! Shared generators for the integration suites.

use erps_core::grid::Grid1D;
use erps_core::wavefunction::WaveFunction;

pub fn random_smooth_state(grid: &Grid1D, hbar: f64, seed: u64) -> WaveFunction {
    erps_core::families::random_smooth_state(grid, hbar, seed).unwrap()
}

pub fn perturbed_gaussian(
    grid: &Grid1D,
    hbar: f64,
    sigma: f64,
    delta: f64,
    seed: u64,
) -> WaveFunction {
    erps_core::families::perturbed_gaussian(grid, hbar, sigma, delta, seed).unwrap()
}

pub fn standard_grid() -> Grid1D {
    Grid1D::periodic(512, -20.0, 40.0).unwrap()
}
