//! Seeded families of preparations used by property checks and the
//! experiment runner.

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::Grid1D;
use crate::rng::IndexRng;
use crate::wavefunction::WaveFunction;

/// Band-limited random state under a wide envelope centered mid-domain.
///
/// Low Fourier modes get complex Gaussian coefficients with a smooth
/// spectral falloff; the envelope keeps the support clear of the boundary so
/// position moments and commutators stay valid.
pub fn random_smooth_state(grid: &Grid1D, hbar: f64, seed: u64) -> Result<WaveFunction> {
    let mut rng = IndexRng::new(seed, 0x00A1_1CE5);
    let extent = grid.extent();
    let center = grid.origin() + 0.5 * extent;
    let envelope_width = extent / 14.0;
    let max_mode: i32 = 6;

    let coeffs: Vec<(f64, Complex64)> = (-max_mode..=max_mode)
        .map(|m| {
            let k = 2.0 * std::f64::consts::PI * m as f64 / extent;
            let falloff = (-((m as f64) / 3.0).powi(2)).exp();
            let c = Complex64::new(rng.standard_normal(), rng.standard_normal()) * falloff;
            (k, c)
        })
        .collect();

    let amplitudes: Vec<Complex64> = grid
        .points()
        .iter()
        .map(|&q| {
            let wave: Complex64 = coeffs
                .iter()
                .map(|&(k, c)| c * Complex64::from_polar(1.0, k * (q - center)))
                .sum();
            let d = (q - center) / envelope_width;
            wave * (-0.5 * d * d).exp()
        })
        .collect();
    WaveFunction::normalized(amplitudes, grid.clone(), hbar)
}

/// Real density-perturbed Gaussian:
/// `rho ~ exp(-(q-center)^2/(2 sigma^2) + delta g(q))` with a smooth random
/// `g`. At `delta = 0` this is exactly Gaussian, so it probes how sharply
/// the Gaussian family saturates the position bound.
pub fn perturbed_gaussian(
    grid: &Grid1D,
    hbar: f64,
    sigma: f64,
    delta: f64,
    seed: u64,
) -> Result<WaveFunction> {
    let mut rng = IndexRng::new(seed, 0xBEE);
    let extent = grid.extent();
    let center = grid.origin() + 0.5 * extent;
    let modes: Vec<(f64, f64, f64)> = (1..=4)
        .map(|m| {
            let k = 2.0 * std::f64::consts::PI * m as f64 / extent;
            (k, rng.standard_normal(), rng.uniform() * std::f64::consts::TAU)
        })
        .collect();
    let amplitudes: Vec<Complex64> = grid
        .points()
        .iter()
        .map(|&q| {
            let d = q - center;
            let g: f64 = modes
                .iter()
                .map(|&(k, a, ph)| a * (k * d + ph).cos())
                .sum();
            let log_amp = -d * d / (4.0 * sigma * sigma) + 0.5 * delta * g;
            Complex64::new(log_amp.exp(), 0.0)
        })
        .collect();
    WaveFunction::normalized(amplitudes, grid.clone(), hbar)
}
