//! Estimation-theoretic quantities of a preparation: MS errors, Fisher
//! information, Cramer-Rao checks, the momentum variance decomposition,
//! uncertainty products, and weak values.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::SpectralOps;
use crate::grid::Grid1D;
use crate::observable::{quantum_variance, Moment};
use crate::polar::{polar_decompose, PolarFields};
use crate::states::StateSpec;
use crate::stats::linear_fit;
use crate::wavefunction::WaveFunction;

/// Fisher information about the mean position: `int (d ln rho / dq)^2 rho dq`.
pub fn fisher_q(fields: &PolarFields) -> f64 {
    fields.integrate(fields.fisher_integrand().into_iter())
}

/// Momentum MS error `(hbar^2 / 4) * J_q`. Shares its quadrature with
/// `fisher_q`, so the identity between the two holds to rounding.
pub fn ms_error_p(fields: &PolarFields) -> f64 {
    0.25 * fields.hbar() * fields.hbar() * fisher_q(fields)
}

/// Density-weighted mean of the estimator field `dS/dq`.
pub fn mean_grad_s(fields: &PolarFields) -> f64 {
    fields.integrate_density_weighted(|j| fields.grad_s()[j])
}

/// Dispersion of the estimator: `int (dS/dq - <dS/dq>)^2 rho dq`.
pub fn dispersion_p(fields: &PolarFields) -> f64 {
    let mean = mean_grad_s(fields);
    fields.integrate_density_weighted(|j| {
        let d = fields.grad_s()[j] - mean;
        d * d
    })
}

/// Position MS error with `q` as the unbiased estimator of the mean
/// position. The flag marks grid-limited values: when the density reaches
/// the domain edge the number only lower-bounds the continuum MS error,
/// which may be unbounded.
pub fn ms_error_q(fields: &PolarFields) -> (f64, bool) {
    let q0 = fields.mean_position();
    let grid = fields.grid();
    let value = (0..grid.len())
        .map(|j| {
            let d = grid.point(j) - q0;
            d * d * fields.rho()[j]
        })
        .sum::<f64>()
        * grid.spacing();
    (value, fields.grid_limited())
}

#[derive(Debug, Clone, Serialize)]
pub struct PositionCramerRaoReport {
    pub ms_error_q: f64,
    pub inv_fisher_q: f64,
    pub ratio: f64,
}

/// Position Cramer-Rao check: `ms_error_q * fisher_q >= 1`, with equality
/// only for Gaussian densities.
pub fn cramer_rao_position_check(fields: &PolarFields) -> Result<PositionCramerRaoReport> {
    let (eq2, grid_limited) = ms_error_q(fields);
    if grid_limited {
        return Err(Error::GridLimited);
    }
    let jq = fisher_q(fields);
    Ok(PositionCramerRaoReport {
        ms_error_q: eq2,
        inv_fisher_q: 1.0 / jq,
        ratio: eq2 * jq,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussianMomentumCramerRaoReport {
    pub per_xi_ms: f64,
    pub inv_fisher_p: f64,
    pub ratio: f64,
    pub error_slope: f64,
    pub max_affine_residual: f64,
}

/// Per-noise-realization momentum Cramer-Rao check for the Gaussian family.
///
/// For a Gaussian of width `sigma_q` the estimation error is linear in
/// position, the efficiency constant is `a = -xi^2 / (4 sigma_q^2)`, and the
/// corresponding Fisher information is `J_p = -1/a`; the quadrature MS error
/// must saturate `1/J_p` exactly. Only this family admits a closed-form
/// `J_p`, so the check constructs its own Gaussian state.
pub fn cramer_rao_momentum_gaussian_check(
    sigma_q: f64,
    xi: f64,
    hbar: f64,
) -> Result<GaussianMomentumCramerRaoReport> {
    if xi == 0.0 {
        return Err(Error::ZeroXi);
    }
    if !(sigma_q > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma_q must be positive, got {sigma_q}"
        )));
    }
    let grid = Grid1D::truncated(2048, -10.0 * sigma_q, 20.0 * sigma_q)?;
    let psi = StateSpec::gaussian(0.0, sigma_q, 0.0).build(&grid, hbar)?;
    let fields = polar_decompose(&psi, None)?;

    let per_xi_ms = 0.25 * xi * xi * fisher_q(&fields);
    let inv_fisher_p = xi * xi / (4.0 * sigma_q * sigma_q);

    // Witness that the error field (xi/2) d(ln rho)/dq is affine in q with
    // slope -xi / (2 sigma_q^2).
    let mut qs = Vec::new();
    let mut errs = Vec::new();
    for j in 0..grid.len() {
        if !fields.node_mask()[j] {
            qs.push(grid.point(j));
            errs.push(0.5 * xi * fields.grad_log_rho()[j]);
        }
    }
    let (slope, intercept) = linear_fit(&qs, &errs);
    let max_affine_residual = qs
        .iter()
        .zip(&errs)
        .map(|(&q, &e)| (e - (slope * q + intercept)).abs())
        .fold(0.0, f64::max);

    Ok(GaussianMomentumCramerRaoReport {
        per_xi_ms,
        inv_fisher_p,
        ratio: per_xi_ms / inv_fisher_p,
        error_slope: slope,
        max_affine_residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceDecomposition {
    pub ms_error_p: f64,
    pub dispersion_p: f64,
    pub var_p: f64,
}

/// Split the quantum momentum variance into estimation inaccuracy and
/// estimator dispersion; `var_p` comes independently from the spectral
/// variance.
pub fn variance_decomposition(psi: &WaveFunction) -> Result<VarianceDecomposition> {
    let fields = polar_decompose(psi, None)?;
    Ok(VarianceDecomposition {
        ms_error_p: ms_error_p(&fields),
        dispersion_p: dispersion_p(&fields),
        var_p: quantum_variance(psi, Moment::Momentum)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UncertaintyReport {
    pub ms_error_p: f64,
    pub ms_error_q: f64,
    pub product_pq: f64,
    pub var_p: f64,
    pub var_q: f64,
    pub hk_product: f64,
    pub robertson_rhs: f64,
}

/// The uncertainty battery on one state: the MS-error trade-off product, the
/// variance (Heisenberg-Kennard) product, and the commutator-based
/// Robertson bound.
pub fn uncertainty_suite(psi: &WaveFunction) -> Result<UncertaintyReport> {
    let fields = polar_decompose(psi, None)?;
    let (eq2, grid_limited) = ms_error_q(&fields);
    if grid_limited {
        return Err(Error::GridLimited);
    }
    let ep2 = ms_error_p(&fields);
    let var_p = quantum_variance(psi, Moment::Momentum)?;
    // The position variance and the position MS error are the same integral.
    let var_q = eq2;
    let commutator = crate::observable::commutator_expectation(psi)?;
    Ok(UncertaintyReport {
        ms_error_p: ep2,
        ms_error_q: eq2,
        product_pq: ep2 * eq2,
        var_p,
        var_q,
        hk_product: var_p * var_q,
        robertson_rhs: 0.25 * commutator.norm_sqr(),
    })
}

/// Flat summary of the estimation quantities of one preparation.
#[derive(Debug, Clone, Serialize)]
pub struct EstimationReport {
    pub ms_error_p: f64,
    pub ms_error_q: f64,
    pub fisher_q: f64,
    pub dispersion_p: f64,
    pub var_p: f64,
    pub var_q: f64,
    pub product_pq: f64,
    pub hk_product: f64,
    pub grid_limited: bool,
}

pub fn estimation_report(psi: &WaveFunction) -> Result<EstimationReport> {
    let fields = polar_decompose(psi, None)?;
    let (eq2, grid_limited) = ms_error_q(&fields);
    let ep2 = ms_error_p(&fields);
    let var_p = quantum_variance(psi, Moment::Momentum)?;
    Ok(EstimationReport {
        ms_error_p: ep2,
        ms_error_q: eq2,
        fisher_q: fisher_q(&fields),
        dispersion_p: dispersion_p(&fields),
        var_p,
        var_q: eq2,
        product_pq: ep2 * eq2,
        hk_product: var_p * eq2,
        grid_limited,
    })
}

/// Weak value field `(p psi)(q) / psi(q)` on the grid, with the node mask of
/// the underlying fields.
#[derive(Debug, Clone)]
pub struct WeakValueField {
    pub values: Vec<Complex64>,
    pub node_mask: Vec<bool>,
}

pub fn weak_value_field(psi: &WaveFunction) -> Result<WeakValueField> {
    psi.assert_normalized()?;
    let fields = polar_decompose(psi, None)?;
    let ops = SpectralOps::new(psi.grid());
    let p_psi = ops.apply_momentum(psi.amplitudes(), psi.hbar());
    let values = psi
        .amplitudes()
        .iter()
        .zip(&p_psi)
        .zip(fields.node_mask())
        .map(|((amp, ppsi), &masked)| {
            if masked {
                Complex64::new(0.0, 0.0)
            } else {
                ppsi / amp
            }
        })
        .collect();
    Ok(WeakValueField {
        values,
        node_mask: fields.node_mask().to_vec(),
    })
}

/// Weak momentum value at one position, by linear interpolation of the
/// weak-value field (smooth away from nodes).
pub fn weak_value(psi: &WaveFunction, q: f64) -> Result<Complex64> {
    let field = weak_value_field(psi)?;
    let grid = psi.grid();
    let (cell, frac) = grid.locate(q)?;
    let right = grid.right_neighbor(cell);
    if field.node_mask[cell] || field.node_mask[right] {
        return Err(Error::NodeRegionQuery { q });
    }
    Ok(field.values[cell] * (1.0 - frac) + field.values[right] * frac)
}

/// Momentum MS error recovered from the imaginary part of the weak value:
/// `int (Im w)^2 rho dq`, using the same node-limit handling as the Fisher
/// quadrature.
pub fn weak_ms_error_p(psi: &WaveFunction) -> Result<f64> {
    let fields = polar_decompose(psi, None)?;
    let weak = weak_value_field(psi)?;
    let quarter_h2 = 0.25 * psi.hbar() * psi.hbar();
    let integrand = (0..psi.grid().len()).map(|j| {
        if weak.node_mask[j] {
            quarter_h2 * (2.0 * fields.rho_curvature()[j]).max(0.0)
        } else {
            let im = weak.values[j].im;
            im * im * fields.rho()[j]
        }
    });
    Ok(fields.integrate(integrand))
}

/// Bohmian velocity field `v = dS/dq / m`, equal to the real part of the
/// weak value over the mass.
#[derive(Debug, Clone)]
pub struct BohmianVelocityField {
    pub velocity: Vec<f64>,
    pub node_mask: Vec<bool>,
}

pub fn bohmian_velocity_field(psi: &WaveFunction, mass: f64) -> Result<BohmianVelocityField> {
    if !(mass > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mass must be positive, got {mass}"
        )));
    }
    let weak = weak_value_field(psi)?;
    Ok(BohmianVelocityField {
        velocity: weak.values.iter().map(|w| w.re / mass).collect(),
        node_mask: weak.node_mask,
    })
}
