//! Unitary propagation and trajectory transport.
//!
//! The propagator is split-step spectral: a half-step potential phase, a full
//! kinetic step in the momentum representation, and another half-step
//! potential phase. On periodic grids every factor is exactly unitary, so
//! norm is preserved to rounding and running the same steps with `-dt`
//! inverts the evolution.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::SpectralOps;
use crate::grid::{Boundary, Grid1D};
use crate::polar::{polar_decompose, PolarFields};
use crate::states::StateSpec;
use crate::wavefunction::WaveFunction;

#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    pub mass: f64,
    pub potential: Vec<f64>,
}

impl HamiltonianSpec {
    pub fn new(mass: f64, potential: Vec<f64>) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "potential field",
            });
        }
        Ok(HamiltonianSpec { mass, potential })
    }

    pub fn free(grid: &Grid1D, mass: f64) -> Result<Self> {
        Self::new(mass, vec![0.0; grid.len()])
    }

    pub fn harmonic(grid: &Grid1D, mass: f64, omega: f64) -> Result<Self> {
        let potential = grid
            .points()
            .iter()
            .map(|&q| 0.5 * mass * omega * omega * q * q)
            .collect();
        Self::new(mass, potential)
    }
}

struct SplitStep {
    ops: SpectralOps,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
}

impl SplitStep {
    fn new(psi: &WaveFunction, ham: &HamiltonianSpec, dt: f64) -> Result<Self> {
        let grid = psi.grid();
        if ham.potential.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: ham.potential.len(),
            });
        }
        let hbar = psi.hbar();
        let cfl = ham.mass * grid.spacing() * grid.spacing() / hbar * 10.0;
        if dt.abs() >= cfl {
            log::warn!(
                "time step {dt} exceeds the sanity bound {cfl:.3e} for this grid; \
                 accuracy may suffer"
            );
        }
        if grid.boundary() == Boundary::Truncated {
            log::warn!(
                "propagating on a truncated grid treats it as periodic; keep support \
                 clear of the edges"
            );
        }
        let ops = SpectralOps::new(grid);
        let half_potential = ham
            .potential
            .iter()
            .map(|&v| Complex64::from_polar(1.0, -v * dt / (2.0 * hbar)))
            .collect();
        let kinetic = ops
            .wavenumbers()
            .iter()
            .map(|&k| Complex64::from_polar(1.0, -hbar * k * k * dt / (2.0 * ham.mass)))
            .collect();
        Ok(SplitStep {
            ops,
            half_potential,
            kinetic,
        })
    }

    fn step(&self, amps: &mut Vec<Complex64>) {
        for (a, ph) in amps.iter_mut().zip(&self.half_potential) {
            *a *= ph;
        }
        let mut buf = self.ops.forward(amps);
        for (v, ph) in buf.iter_mut().zip(&self.kinetic) {
            *v *= ph;
        }
        self.ops.inverse_in_place(&mut buf);
        *amps = buf;
        for (a, ph) in amps.iter_mut().zip(&self.half_potential) {
            *a *= ph;
        }
    }
}

pub fn propagate(
    psi: &WaveFunction,
    ham: &HamiltonianSpec,
    dt: f64,
    n_steps: usize,
) -> Result<WaveFunction> {
    psi.assert_normalized()?;
    let stepper = SplitStep::new(psi, ham, dt)?;
    let mut amps = psi.amplitudes().to_vec();
    for _ in 0..n_steps {
        stepper.step(&mut amps);
    }
    WaveFunction::new(amps, psi.grid().clone(), psi.hbar())
}

/// Propagate and keep every `record_every`-th state, including the initial
/// one. Returns `(time, state)` pairs.
pub fn propagate_with_snapshots(
    psi: &WaveFunction,
    ham: &HamiltonianSpec,
    dt: f64,
    n_steps: usize,
    record_every: usize,
) -> Result<Vec<(f64, WaveFunction)>> {
    psi.assert_normalized()?;
    let every = record_every.max(1);
    let stepper = SplitStep::new(psi, ham, dt)?;
    let mut amps = psi.amplitudes().to_vec();
    let mut out = vec![(0.0, psi.clone())];
    for step in 1..=n_steps {
        stepper.step(&mut amps);
        if step % every == 0 || step == n_steps {
            let snap = WaveFunction::new(amps.clone(), psi.grid().clone(), psi.hbar())?;
            out.push((step as f64 * dt, snap));
        }
    }
    Ok(out)
}

/// `<H> = <p^2>/2m + <V>` with the kinetic part evaluated spectrally.
pub fn average_energy(psi: &WaveFunction, ham: &HamiltonianSpec) -> Result<f64> {
    psi.assert_normalized()?;
    let grid = psi.grid();
    if ham.potential.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            got: ham.potential.len(),
        });
    }
    let ops = SpectralOps::new(grid);
    let p_psi = ops.apply_momentum(psi.amplitudes(), psi.hbar());
    let kinetic: f64 =
        p_psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.spacing() / (2.0 * ham.mass);
    let potential: f64 = psi
        .density()
        .iter()
        .zip(&ham.potential)
        .map(|(r, v)| r * v)
        .sum::<f64>()
        * grid.spacing();
    Ok(kinetic + potential)
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityResidual {
    /// Residual field at the middle interior snapshot.
    pub field: Vec<f64>,
    /// L2 norms of the residual at each interior snapshot.
    pub l2_per_snapshot: Vec<f64>,
    pub max_l2: f64,
}

/// Residual of `d rho / dt + d(rho v)/dq` with `v = dS/dq / m`, using central
/// differences in time across consecutive snapshots spaced `dt` apart.
pub fn continuity_residual(
    snapshots: &[WaveFunction],
    mass: f64,
    dt: f64,
) -> Result<ContinuityResidual> {
    if snapshots.len() < 3 {
        return Err(Error::TooFewSnapshots(snapshots.len()));
    }
    let grid = snapshots[0].grid().clone();
    let ops = SpectralOps::new(&grid);
    let n = grid.len();
    let mut l2s = Vec::new();
    let mut mid_field = vec![0.0; n];
    let mid = snapshots.len() / 2;
    for i in 1..snapshots.len() - 1 {
        let fields = polar_decompose(&snapshots[i], None)?;
        // Masked tails are harmless (no current there), but interior nodes
        // sit next to real density and poison the divergence term.
        let peak = fields.rho().iter().cloned().fold(0.0, f64::max);
        let interior_nodes = (0..n)
            .filter(|&j| {
                if !fields.node_mask()[j] {
                    return false;
                }
                let left = (j + n - 1) % n;
                let right = (j + 1) % n;
                let near = |k: usize| !fields.node_mask()[k] && fields.rho()[k] > 1e-6 * peak;
                near(left) || near(right)
            })
            .count();
        if interior_nodes > 0 {
            return Err(Error::DegenerateDensity);
        }
        let rho_prev = snapshots[i - 1].density();
        let rho_next = snapshots[i + 1].density();
        // Current rho*v, with v = grad_s / m; masked points carry no current.
        let current: Vec<Complex64> = (0..n)
            .map(|j| {
                let v = if fields.node_mask()[j] {
                    0.0
                } else {
                    fields.grad_s()[j] / mass
                };
                Complex64::new(fields.rho()[j] * v, 0.0)
            })
            .collect();
        let div = ops.derivative(&current);
        let residual: Vec<f64> = (0..n)
            .map(|j| (rho_next[j] - rho_prev[j]) / (2.0 * dt) + div[j].re)
            .collect();
        let l2 = (residual.iter().map(|r| r * r).sum::<f64>() * grid.spacing()).sqrt();
        l2s.push(l2);
        if i == mid {
            mid_field = residual;
        }
    }
    let max_l2 = l2s.iter().cloned().fold(0.0, f64::max);
    Ok(ContinuityResidual {
        field: mid_field,
        l2_per_snapshot: l2s,
        max_l2,
    })
}

#[derive(Debug, Clone)]
pub struct TrajectoryBundle {
    /// Recorded positions, indexed `[trajectory][record]`.
    pub positions: Vec<Vec<f64>>,
    /// Times of the records.
    pub times: Vec<f64>,
    /// Trajectories that entered a masked node region and were frozen there.
    pub stopped: usize,
}

impl TrajectoryBundle {
    pub fn final_positions(&self) -> Vec<f64> {
        self.positions.iter().map(|t| *t.last().unwrap()).collect()
    }

    /// CSV export with columns `traj_id,t,q`.
    pub fn write_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "traj_id,t,q")?;
        for (id, traj) in self.positions.iter().enumerate() {
            for (t, q) in self.times.iter().zip(traj) {
                writeln!(out, "{id},{t:.12e},{q:.17e}")?;
            }
        }
        Ok(())
    }
}

fn sample_initial_positions(fields: &PolarFields, n_traj: usize, seed: u64) -> Result<Vec<f64>> {
    let ens = crate::ensemble::sample_ensemble(
        fields,
        &crate::xi::XiModel::two_point(fields.hbar()),
        n_traj,
        seed,
        "trajectory seeds",
    )?;
    Ok(ens.positions())
}

/// Transport `n_traj` samples of `|psi_0|^2` along the velocity field
/// `v = dS/dq / m` of the propagating state, with the explicit midpoint rule
/// in time and linear field interpolation in space.
///
/// Equivariance contract: the empirical density tracks `|psi(t)|^2`.
pub fn integrate_trajectories(
    psi0: &WaveFunction,
    ham: &HamiltonianSpec,
    dt: f64,
    n_steps: usize,
    n_traj: usize,
    seed: u64,
    record_every: usize,
) -> Result<TrajectoryBundle> {
    psi0.assert_normalized()?;
    if n_traj == 0 {
        return Err(Error::ZeroSampleCount);
    }
    let every = record_every.max(1);
    let fields0 = polar_decompose(psi0, None)?;
    let mut positions = sample_initial_positions(&fields0, n_traj, seed)?;
    let mut alive: Vec<bool> = vec![true; n_traj];

    let stepper = SplitStep::new(psi0, ham, dt)?;
    let mut amps = psi0.amplitudes().to_vec();
    let mut fields_now = fields0;

    let mut records: Vec<Vec<f64>> = positions.iter().map(|&q| vec![q]).collect();
    let mut times = vec![0.0];

    for step in 1..=n_steps {
        stepper.step(&mut amps);
        let psi_next = WaveFunction::new(amps.clone(), psi0.grid().clone(), psi0.hbar())?;
        let fields_next = polar_decompose(&psi_next, None)?;

        let mass = ham.mass;
        let moved: Vec<(f64, bool)> = positions
            .par_iter()
            .zip(alive.par_iter())
            .map(|(&q, &is_alive)| {
                if !is_alive {
                    return (q, false);
                }
                let v_now = match fields_now.grad_s_at(q) {
                    Ok(v) => v / mass,
                    Err(_) => return (q, false),
                };
                let q_half = q + 0.5 * dt * v_now;
                // Midpoint velocity: average the fields bracketing t + dt/2.
                let v_half_now = fields_now.grad_s_at(q_half);
                let v_half_next = fields_next.grad_s_at(q_half);
                match (v_half_now, v_half_next) {
                    (Ok(a), Ok(b)) => (q + dt * 0.5 * (a + b) / mass, true),
                    _ => (q, false),
                }
            })
            .collect();
        for (i, (q, ok)) in moved.into_iter().enumerate() {
            positions[i] = q;
            if !ok && alive[i] {
                alive[i] = false;
            }
        }
        fields_now = fields_next;

        if step % every == 0 || step == n_steps {
            times.push(step as f64 * dt);
            for (rec, &q) in records.iter_mut().zip(&positions) {
                rec.push(q);
            }
        }
    }

    let stopped = alive.iter().filter(|&&a| !a).count();
    if stopped > 0 {
        log::warn!("{stopped} of {n_traj} trajectories entered masked node regions and were frozen");
    }
    Ok(TrajectoryBundle {
        positions: records,
        times,
        stopped,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalLimitReport {
    pub hbar_values: Vec<f64>,
    /// RMS estimation error over RMS estimator, one entry per `hbar_eff`.
    pub ratios: Vec<f64>,
    /// Log-log slope of ratio against `hbar_eff`; absent when the state is
    /// exactly classical (zero error at every noise strength).
    pub slope: Option<f64>,
    pub exactly_classical: bool,
}

/// Scan the error-to-estimator ratio across noise strengths. The ratio
/// scales linearly in `hbar_eff` (slope one on a log-log axis); states with
/// vanishing error are reported as exactly classical, and states with a
/// vanishing estimator field leave the ratio undefined.
pub fn classical_limit_scan(
    spec: &StateSpec,
    grid: &Grid1D,
    hbar_values: &[f64],
) -> Result<ClassicalLimitReport> {
    if hbar_values.is_empty() {
        return Err(Error::InvalidParameter("empty hbar_eff scan".into()));
    }
    let mut ratios = Vec::with_capacity(hbar_values.len());
    let mut any_error = false;
    for &hbar_eff in hbar_values {
        let psi = spec.build(grid, hbar_eff)?;
        let fields = polar_decompose(&psi, None)?;
        let rms_error = crate::estimation::ms_error_p(&fields).sqrt();
        let rms_estimator = fields
            .integrate_density_weighted(|j| {
                let s = fields.grad_s()[j];
                s * s
            })
            .sqrt();
        if rms_estimator < 1e-12 * (1.0 + rms_error) {
            return Err(Error::UndefinedRatio);
        }
        if rms_error > 1e-12 * rms_estimator {
            any_error = true;
        }
        ratios.push(rms_error / rms_estimator);
    }
    if !any_error {
        return Ok(ClassicalLimitReport {
            hbar_values: hbar_values.to_vec(),
            ratios,
            slope: None,
            exactly_classical: true,
        });
    }
    let slope = crate::stats::log_log_slope(hbar_values, &ratios);
    Ok(ClassicalLimitReport {
        hbar_values: hbar_values.to_vec(),
        ratios,
        slope: Some(slope),
        exactly_classical: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::{quantum_variance, Moment};
    use crate::stats::grid_tv_distance;

    fn grid() -> Grid1D {
        Grid1D::periodic(512, -20.0, 40.0).unwrap()
    }

    #[test]
    fn free_gaussian_spreads_at_the_analytic_rate() {
        let g = grid();
        let (sigma, mass, hbar) = (1.0, 1.0, 1.0);
        let psi = StateSpec::gaussian(0.0, sigma, 0.0).build(&g, hbar).unwrap();
        let ham = HamiltonianSpec::free(&g, mass).unwrap();
        let t = 2.0;
        let n_steps = 200;
        let out = propagate(&psi, &ham, t / n_steps as f64, n_steps).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);
        let var = quantum_variance(&out, Moment::Position).unwrap();
        let expect = sigma * sigma + (hbar * t / (2.0 * mass * sigma)).powi(2);
        assert!((var - expect).abs() < 1e-6, "var {var} expect {expect}");
    }

    #[test]
    fn plane_wave_is_stationary_under_free_flight() {
        let g = grid();
        let p0 = g.snap_momentum(1.0, 1.0);
        let psi = StateSpec::plane_wave(p0).build(&g, 1.0).unwrap();
        let ham = HamiltonianSpec::free(&g, 1.0).unwrap();
        let out = propagate(&psi, &ham, 0.01, 100).unwrap();
        assert!(out.max_deviation_up_to_phase(&psi) < 1e-10);
    }

    #[test]
    fn coherent_state_center_follows_the_classical_orbit() {
        let g = grid();
        let (mass, omega, hbar, q0): (f64, f64, f64, f64) = (1.0, 1.0, 1.0, 3.0);
        let sigma = (hbar / (2.0 * mass * omega)).sqrt();
        let psi = StateSpec::gaussian(q0, sigma, 0.0).build(&g, hbar).unwrap();
        let ham = HamiltonianSpec::harmonic(&g, mass, omega).unwrap();
        let quarter = std::f64::consts::FRAC_PI_2 / omega;
        let n_steps = 4000;
        let out = propagate(&psi, &ham, quarter / n_steps as f64, n_steps).unwrap();
        // At a quarter period the center sits at q = 0 and the width is
        // unchanged.
        let rho = out.density();
        let mean: f64 = rho
            .iter()
            .enumerate()
            .map(|(j, r)| g.point(j) * r)
            .sum::<f64>()
            * g.spacing();
        assert!(mean.abs() < 1e-6, "center {mean}");
        let var = quantum_variance(&out, Moment::Position).unwrap();
        assert!((var - sigma * sigma).abs() < 1e-6);
    }

    #[test]
    fn time_reversal_restores_the_state() {
        let g = grid();
        let psi = StateSpec::gaussian(1.0, 1.2, 0.8).build(&g, 1.0).unwrap();
        let ham = HamiltonianSpec::harmonic(&g, 1.0, 0.7).unwrap();
        let forward = propagate(&psi, &ham, 1e-3, 500).unwrap();
        let back = propagate(&forward, &ham, -1e-3, 500).unwrap();
        assert!(back.max_deviation_up_to_phase(&psi) < 1e-10);
    }

    #[test]
    fn energy_values_and_conservation() {
        let g = grid();
        let (mass, hbar) = (1.0, 1.0);
        let p0 = g.snap_momentum(1.5, hbar);
        let psi = StateSpec::plane_wave(p0).build(&g, hbar).unwrap();
        let ham = HamiltonianSpec::free(&g, mass).unwrap();
        let e = average_energy(&psi, &ham).unwrap();
        assert!((e - p0 * p0 / (2.0 * mass)).abs() < 1e-10);

        let (sigma, p0g) = (1.0, 0.5);
        let psi = StateSpec::gaussian(0.0, sigma, p0g).build(&g, hbar).unwrap();
        let e = average_energy(&psi, &ham).unwrap();
        let expect = p0g * p0g / (2.0 * mass) + hbar * hbar / (8.0 * mass * sigma * sigma);
        assert!((e - expect).abs() < 1e-8, "e {e} expect {expect}");

        // Coherent-state energy drift across 1000 small steps.
        let omega = 1.0;
        let sigma_c = (hbar / (2.0 * mass * omega)).sqrt();
        let psi = StateSpec::gaussian(2.0, sigma_c, 0.0).build(&g, hbar).unwrap();
        let ham = HamiltonianSpec::harmonic(&g, mass, omega).unwrap();
        let e0 = average_energy(&psi, &ham).unwrap();
        let out = propagate(&psi, &ham, 2e-5, 1000).unwrap();
        let e1 = average_energy(&out, &ham).unwrap();
        assert!(((e1 - e0) / e0).abs() < 1e-8, "drift {}", ((e1 - e0) / e0).abs());
    }

    #[test]
    fn continuity_residual_converges_at_second_order() {
        let g = grid();
        let psi = StateSpec::gaussian(0.0, 1.0, 0.5).build(&g, 1.0).unwrap();
        let ham = HamiltonianSpec::free(&g, 1.0).unwrap();
        let mut l2 = Vec::new();
        for &dt in &[4e-3, 2e-3] {
            let snaps: Vec<WaveFunction> = propagate_with_snapshots(&psi, &ham, dt, 4, 1)
                .unwrap()
                .into_iter()
                .map(|(_, s)| s)
                .collect();
            let res = continuity_residual(&snaps, 1.0, dt).unwrap();
            l2.push(res.max_l2);
        }
        let ratio = l2[0] / l2[1];
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }

    #[test]
    fn stationary_ground_state_has_vanishing_residual() {
        let g = grid();
        let (mass, omega, hbar): (f64, f64, f64) = (1.0, 1.0, 1.0);
        let sigma = (hbar / (2.0 * mass * omega)).sqrt();
        let ground = StateSpec::gaussian(0.0, sigma, 0.0).build(&g, hbar).unwrap();
        let ham = HamiltonianSpec::harmonic(&g, mass, omega).unwrap();
        let snaps: Vec<WaveFunction> = propagate_with_snapshots(&ground, &ham, 1e-3, 4, 1)
            .unwrap()
            .into_iter()
            .map(|(_, s)| s)
            .collect();
        let res = continuity_residual(&snaps, mass, 1e-3).unwrap();
        assert!(res.max_l2 < 1e-10, "ground-state residual {}", res.max_l2);
    }

    #[test]
    fn coherent_energy_is_constant_over_a_period() {
        let g = grid();
        let (mass, omega, hbar): (f64, f64, f64) = (1.0, 1.0, 1.0);
        let sigma = (hbar / (2.0 * mass * omega)).sqrt();
        let psi = StateSpec::gaussian(2.0, sigma, 0.0).build(&g, hbar).unwrap();
        let ham = HamiltonianSpec::harmonic(&g, mass, omega).unwrap();
        let e0 = average_energy(&psi, &ham).unwrap();
        let dt = 1e-4;
        let n = (2.0 * std::f64::consts::PI / omega / dt).round() as usize;
        let snaps = propagate_with_snapshots(&psi, &ham, dt, n, n / 8).unwrap();
        for (t, snap) in &snaps {
            let drift = ((average_energy(snap, &ham).unwrap() - e0) / e0).abs();
            assert!(drift < 1e-8, "t={t}: energy drift {drift}");
        }
    }

    #[test]
    fn harmonic_trajectory_centroid_traces_the_classical_orbit() {
        let g = grid();
        let (mass, omega, hbar): (f64, f64, f64) = (1.0, 1.0, 1.0);
        let sigma = (hbar / (2.0 * mass * omega)).sqrt();
        let q0 = 3.0;
        let psi = StateSpec::gaussian(q0, sigma, 0.0).build(&g, hbar).unwrap();
        let ham = HamiltonianSpec::harmonic(&g, mass, omega).unwrap();
        let period = 2.0 * std::f64::consts::PI / omega;
        let n_steps = 400;
        let dt = 0.5 * period / n_steps as f64;
        let bundle =
            integrate_trajectories(&psi, &ham, dt, n_steps, 2000, 21, n_steps / 8).unwrap();
        // The coherent velocity field is spatially uniform, so the centroid
        // displacement follows the classical orbit exactly; comparing
        // displacements removes the finite-sample offset of the start.
        let centroid = |i: usize| -> f64 {
            bundle.positions.iter().map(|traj| traj[i]).sum::<f64>() / 2000.0
        };
        let start = centroid(0);
        for (i, &t) in bundle.times.iter().enumerate() {
            let expect = q0 * ((omega * t).cos() - 1.0);
            assert!(
                (centroid(i) - start - expect).abs() < 1e-3 * q0,
                "t={t}: displacement {}, classical {expect}",
                centroid(i) - start
            );
        }
    }

    #[test]
    fn continuity_residual_trivial_cases() {
        let g = grid();
        let p0 = g.snap_momentum(1.0, 1.0);
        let psi = StateSpec::plane_wave(p0).build(&g, 1.0).unwrap();
        let ham = HamiltonianSpec::free(&g, 1.0).unwrap();
        let snaps: Vec<WaveFunction> = propagate_with_snapshots(&psi, &ham, 1e-3, 2, 1)
            .unwrap()
            .into_iter()
            .map(|(_, s)| s)
            .collect();
        let res = continuity_residual(&snaps, 1.0, 1e-3).unwrap();
        assert!(res.max_l2 < 1e-12, "plane-wave residual {}", res.max_l2);

        assert!(matches!(
            continuity_residual(&snaps[..2], 1.0, 1e-3),
            Err(Error::TooFewSnapshots(2))
        ));
    }

    #[test]
    fn trajectories_translate_uniformly_under_a_plane_wave() {
        let g = grid();
        let (mass, hbar) = (1.0, 1.0);
        let p0 = g.snap_momentum(1.0, hbar);
        let psi = StateSpec::plane_wave(p0).build(&g, hbar).unwrap();
        let ham = HamiltonianSpec::free(&g, mass).unwrap();
        let dt = 1e-2;
        let n_steps = 50;
        let bundle = integrate_trajectories(&psi, &ham, dt, n_steps, 64, 9, n_steps).unwrap();
        assert_eq!(bundle.stopped, 0);
        let shift = p0 / mass * dt * n_steps as f64;
        for traj in &bundle.positions {
            let moved = traj.last().unwrap() - traj.first().unwrap();
            assert!((moved - shift).abs() < 1e-8, "moved {moved} expect {shift}");
        }
    }

    #[test]
    fn free_gaussian_trajectories_track_the_density() {
        let g = grid();
        let psi = StateSpec::gaussian(0.0, 1.0, 0.0).build(&g, 1.0).unwrap();
        let ham = HamiltonianSpec::free(&g, 1.0).unwrap();
        let (dt, n_steps, n_traj) = (0.02, 100, 20_000);
        let bundle = integrate_trajectories(&psi, &ham, dt, n_steps, n_traj, 4, n_steps).unwrap();
        let out = propagate(&psi, &ham, dt, n_steps).unwrap();
        let tv = grid_tv_distance(&bundle.final_positions(), &out.density(), &g, 16);
        assert!(tv < 0.02, "tv {tv}");
    }

    #[test]
    fn classical_limit_scaling_is_linear_in_hbar() {
        let g = grid();
        let spec = StateSpec::gaussian(0.0, 1.0, 1.0);
        let hbars = [1.0, 0.5, 0.25, 0.125, 0.0625];
        let report = classical_limit_scan(&spec, &g, &hbars).unwrap();
        let slope = report.slope.unwrap();
        assert!((slope - 1.0).abs() < 0.01, "slope {slope}");
        // r = hbar / (2 sigma p0).
        assert!((report.ratios[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn classical_limit_degenerate_families() {
        let g = grid();
        let p0 = g.snap_momentum(1.0, 1.0);
        let report = classical_limit_scan(&StateSpec::plane_wave(p0), &g, &[1.0, 0.5]).unwrap();
        assert!(report.exactly_classical);
        assert!(report.slope.is_none());

        assert!(matches!(
            classical_limit_scan(&StateSpec::cosine(p0), &g, &[1.0, 0.5]),
            Err(Error::UndefinedRatio)
        ));
    }
}
