//! Phase-space ensembles drawn from the epistemically restricted
//! distribution.
//!
//! Positions are drawn from `rho` by inverse CDF on the grid, the noise `xi`
//! from its model law, and the momentum is then fixed deterministically by
//! the restriction `p = dS/dq + (xi/2) d(ln rho)/dq`. Sample `i` of a run is
//! a pure function of `(seed, i)`, so partitioning across workers cannot
//! change the ensemble.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::observable::{quantum_expectation, Observable};
use crate::polar::PolarFields;
use crate::rng::IndexRng;
use crate::states::StateSpec;
use crate::stats::mean_and_std_error;
use crate::wavefunction::WaveFunction;
use crate::xi::XiModel;

/// The restricted momentum value at `q` for noise realization `xi`, with the
/// fields linearly interpolated between grid points.
pub fn momentum_field(fields: &PolarFields, xi: f64, q: f64) -> Result<f64> {
    let p_bar = fields.grad_s_at(q)?;
    let eps_scale = fields.grad_log_rho_at(q)?;
    Ok(p_bar + 0.5 * xi * eps_scale)
}

/// The two fields an agent reads off a preparation: the best momentum
/// estimate per position and the error scale multiplying `xi/2`.
#[derive(Debug, Clone)]
pub struct EstimateField {
    pub p_bar: Vec<f64>,
    pub eps_scale: Vec<f64>,
}

impl EstimateField {
    pub fn from_fields(fields: &PolarFields) -> Self {
        EstimateField {
            p_bar: fields.grad_s().to_vec(),
            eps_scale: fields.grad_log_rho().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSpaceSample {
    pub q: f64,
    pub p: f64,
    pub xi: f64,
}

#[derive(Debug, Clone)]
pub struct PhaseSpaceEnsemble {
    samples: Vec<PhaseSpaceSample>,
    grid: Grid1D,
    source_state: String,
    seed: u64,
}

/// Inverse-CDF sampler over grid cells with linear interpolation inside each
/// cell. Cells touching a masked point carry zero mass, so node regions are
/// never sampled.
struct DensitySampler {
    cum: Vec<f64>,
    rho_left: Vec<f64>,
    rho_right: Vec<f64>,
    total: f64,
    grid: Grid1D,
}

impl DensitySampler {
    fn new(fields: &PolarFields) -> Result<Self> {
        let grid = fields.grid().clone();
        let n = grid.len();
        let n_cells = match grid.boundary() {
            crate::grid::Boundary::Periodic => n,
            crate::grid::Boundary::Truncated => n - 1,
        };
        let mut cum = Vec::with_capacity(n_cells);
        let mut rho_left = Vec::with_capacity(n_cells);
        let mut rho_right = Vec::with_capacity(n_cells);
        let mut total = 0.0;
        for j in 0..n_cells {
            let r = grid.right_neighbor(j);
            let (a, b) = if fields.node_mask()[j] || fields.node_mask()[r] {
                (0.0, 0.0)
            } else {
                (fields.rho()[j], fields.rho()[r])
            };
            total += 0.5 * (a + b) * grid.spacing();
            cum.push(total);
            rho_left.push(a);
            rho_right.push(b);
        }
        if !(total > 0.0) {
            return Err(Error::DegenerateDensity);
        }
        Ok(DensitySampler {
            cum,
            rho_left,
            rho_right,
            total,
            grid,
        })
    }

    fn sample(&self, u: f64) -> f64 {
        let target = u * self.total;
        let cell = self.cum.partition_point(|&c| c <= target);
        let cell = cell.min(self.cum.len() - 1);
        let below = if cell == 0 { 0.0 } else { self.cum[cell - 1] };
        let mass = self.cum[cell] - below;
        let a = self.rho_left[cell];
        let b = self.rho_right[cell];
        // Invert the linear density a + (b - a) t on [0, 1).
        let v = if mass > 0.0 { (target - below) / mass } else { 0.5 };
        let t = if (b - a).abs() < 1e-14 * (a + b).max(f64::MIN_POSITIVE) {
            v
        } else {
            let disc = (a * a + v * (b * b - a * a)).max(0.0);
            ((disc.sqrt() - a) / (b - a)).clamp(0.0, 1.0)
        };
        self.grid.point(cell) + t * self.grid.spacing()
    }
}

/// Draw `n` samples `(q, p, xi)` from the restricted phase-space
/// distribution of `fields` under the noise law `xi_model`.
pub fn sample_ensemble(
    fields: &PolarFields,
    xi_model: &XiModel,
    n: usize,
    seed: u64,
    source_state: impl Into<String>,
) -> Result<PhaseSpaceEnsemble> {
    if n == 0 {
        return Err(Error::ZeroSampleCount);
    }
    let sampler = DensitySampler::new(fields)?;
    let samples: Result<Vec<PhaseSpaceSample>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = IndexRng::new(seed, i);
            let q = sampler.sample(rng.uniform());
            let xi = xi_model.sample(&mut rng);
            let p = momentum_field(fields, xi, q)?;
            Ok(PhaseSpaceSample { q, p, xi })
        })
        .collect();
    Ok(PhaseSpaceEnsemble {
        samples: samples?,
        grid: fields.grid().clone(),
        source_state: source_state.into(),
        seed,
    })
}

impl PhaseSpaceEnsemble {
    pub fn samples(&self) -> &[PhaseSpaceSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn source_state(&self) -> &str {
        &self.source_state
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn positions(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.q).collect()
    }

    /// CSV export with columns `q,p,xi`.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "q,p,xi")?;
        for s in &self.samples {
            writeln!(out, "{:.17e},{:.17e},{:.17e}", s.q, s.p, s.xi)?;
        }
        Ok(())
    }
}

/// Monte-Carlo mean of `O(q, p)` over the ensemble, with its standard error.
pub fn ensemble_average(ens: &PhaseSpaceEnsemble, obs: &Observable) -> Result<(f64, f64)> {
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let values: Result<Vec<f64>> = ens
        .samples
        .iter()
        .map(|s| obs.classical_value(&ens.grid, s.q, s.p))
        .collect();
    Ok(mean_and_std_error(&values?))
}

/// Monte-Carlo estimate of the momentum MS error: the mean of
/// `(p - dS/dq(q))^2` over the ensemble.
pub fn ensemble_ms_error_p(ens: &PhaseSpaceEnsemble, fields: &PolarFields) -> Result<(f64, f64)> {
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let values: Result<Vec<f64>> = ens
        .samples
        .iter()
        .map(|s| {
            let err = s.p - fields.grad_s_at(s.q)?;
            Ok(err * err)
        })
        .collect();
    Ok(mean_and_std_error(&values?))
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub mc_mean: f64,
    pub std_error: f64,
    pub quantum_value: f64,
    pub z_score: f64,
    pub pass: bool,
}

/// Compare the ensemble average of an observable against the spectral
/// quantum expectation; passes when the discrepancy stays under 4 standard
/// errors.
pub fn optical_equivalence_check(
    spec: &StateSpec,
    grid: &Grid1D,
    hbar: f64,
    obs: &Observable,
    xi_model: &XiModel,
    n: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    let psi = spec.build(grid, hbar)?;
    let fields = crate::polar::polar_decompose(&psi, None)?;
    let ens = sample_ensemble(&fields, xi_model, n, seed, spec.label())?;
    let (mc_mean, std_error) = ensemble_average(&ens, obs)?;
    let quantum_value = quantum_expectation(&psi, obs)?;
    Ok(equivalence_report(mc_mean, std_error, quantum_value))
}

pub fn equivalence_report(mc_mean: f64, std_error: f64, quantum_value: f64) -> EquivalenceReport {
    let diff = (mc_mean - quantum_value).abs();
    // Agreement at rounding level counts as exact regardless of the sample
    // spread (a zero-variance integrand still wiggles in the last few ulps).
    let z_score = if diff <= 1e-9 * (1.0 + quantum_value.abs()) {
        0.0
    } else if std_error > 0.0 {
        diff / std_error
    } else {
        f64::INFINITY
    };
    EquivalenceReport {
        mc_mean,
        std_error,
        quantum_value,
        z_score,
        pass: z_score < 4.0,
    }
}

/// Reference wavefunction builder used by checks that need both the state
/// and its fields.
pub fn build_fields(spec: &StateSpec, grid: &Grid1D, hbar: f64) -> Result<(WaveFunction, PolarFields)> {
    let psi = spec.build(grid, hbar)?;
    let fields = crate::polar::polar_decompose(&psi, None)?;
    Ok((psi, fields))
}
