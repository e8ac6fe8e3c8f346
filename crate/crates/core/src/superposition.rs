//! Estimator and error fields of two-branch superpositions.
//!
//! The combined fields follow from the closed forms for `psi = w1 psi1 +
//! w2 psi2` written in each branch's density and action: the branch weights
//! are absorbed as `rho_j -> |w_j|^2 rho_j` and `S_j -> S_j + hbar arg(w_j)`.
//! On disjoint supports the fields reduce to the branch fields; on
//! overlapping supports the interference denominator couples them.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{dispersion_p, ms_error_p};
use crate::grid::Grid1D;
use crate::polar::{polar_decompose, PolarFields};
use crate::states::StateSpec;
use crate::wavefunction::WaveFunction;

/// Default support threshold relative to the peak of `rho_1 + rho_2`.
pub const OVERLAP_THRESHOLD_REL: f64 = 1e-10;

/// A prepared two-branch superposition: normalized branch states, their
/// polar fields, and the complex weights.
pub struct SuperpositionPair {
    w1: Complex64,
    w2: Complex64,
    psi1: WaveFunction,
    psi2: WaveFunction,
    fields1: PolarFields,
    fields2: PolarFields,
    hbar: f64,
}

impl SuperpositionPair {
    pub fn new(w1: Complex64, psi1: WaveFunction, w2: Complex64, psi2: WaveFunction) -> Result<Self> {
        if psi1.grid() != psi2.grid() {
            return Err(Error::ShapeMismatch {
                expected: psi1.grid().len(),
                got: psi2.grid().len(),
            });
        }
        if w1.norm() == 0.0 && w2.norm() == 0.0 {
            return Err(Error::InvalidParameter(
                "superposition weights must not both vanish".into(),
            ));
        }
        psi1.assert_normalized()?;
        psi2.assert_normalized()?;
        let fields1 = polar_decompose(&psi1, None)?;
        let fields2 = polar_decompose(&psi2, None)?;
        let hbar = psi1.hbar();
        Ok(SuperpositionPair {
            w1,
            w2,
            psi1,
            psi2,
            fields1,
            fields2,
            hbar,
        })
    }

    pub fn from_spec(spec: &StateSpec, grid: &Grid1D, hbar: f64) -> Result<Self> {
        let branches = spec.branches(grid, hbar)?.ok_or_else(|| {
            Error::InvalidParameter("state spec is not a two-branch superposition".into())
        })?;
        let [(w1, psi1), (w2, psi2)] = branches;
        Self::new(w1, psi1, w2, psi2)
    }

    pub fn grid(&self) -> &Grid1D {
        self.psi1.grid()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn branch_states(&self) -> (&WaveFunction, &WaveFunction) {
        (&self.psi1, &self.psi2)
    }

    pub fn branch_fields(&self) -> (&PolarFields, &PolarFields) {
        (&self.fields1, &self.fields2)
    }

    /// The normalized combined state `(w1 psi1 + w2 psi2) / Z`.
    pub fn combined(&self) -> Result<WaveFunction> {
        let amps: Vec<Complex64> = self
            .psi1
            .amplitudes()
            .iter()
            .zip(self.psi2.amplitudes())
            .map(|(a, b)| self.w1 * a + self.w2 * b)
            .collect();
        WaveFunction::normalized(amps, self.grid().clone(), self.hbar)
    }

    /// Branch mass fractions `|w_j|^2 / Z^2` in the combined state.
    pub fn mass_weights(&self) -> Result<(f64, f64)> {
        let amps: Vec<Complex64> = self
            .psi1
            .amplitudes()
            .iter()
            .zip(self.psi2.amplitudes())
            .map(|(a, b)| self.w1 * a + self.w2 * b)
            .collect();
        let z2 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid().spacing();
        if !(z2 > 0.0) {
            return Err(Error::DegenerateDensity);
        }
        Ok((self.w1.norm_sqr() / z2, self.w2.norm_sqr() / z2))
    }

    /// Weighted branch densities and phase-shifted actions used by the
    /// closed forms.
    fn weighted_fields(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.grid().len();
        let (a1, a2) = (self.w1.norm_sqr(), self.w2.norm_sqr());
        let (ph1, ph2) = (self.w1.arg() * self.hbar, self.w2.arg() * self.hbar);
        let mut rho1 = Vec::with_capacity(n);
        let mut rho2 = Vec::with_capacity(n);
        let mut s1 = Vec::with_capacity(n);
        let mut s2 = Vec::with_capacity(n);
        for j in 0..n {
            rho1.push(a1 * self.fields1.rho()[j]);
            rho2.push(a2 * self.fields2.rho()[j]);
            s1.push(self.fields1.s_action()[j] + ph1);
            s2.push(self.fields2.s_action()[j] + ph2);
        }
        (rho1, rho2, s1, s2)
    }
}

/// Combined estimator and error-scale fields of a superposition, from the
/// branch fields alone.
#[derive(Debug, Clone)]
pub struct SuperposedFields {
    pub p_bar: Vec<f64>,
    pub eps_scale: Vec<f64>,
    pub node_mask: Vec<bool>,
}

pub fn superposed_estimate_fields(pair: &SuperpositionPair) -> Result<SuperposedFields> {
    let grid = pair.grid();
    let n = grid.len();
    let hbar = pair.hbar();
    let (rho1, rho2, s1, s2) = pair.weighted_fields();
    let (f1, f2) = pair.branch_fields();

    let mut denominator = Vec::with_capacity(n);
    let mut p_bar = vec![0.0; n];
    let mut eps_scale = vec![0.0; n];
    for j in 0..n {
        let delta = (s1[j] - s2[j]) / hbar;
        let cross = (rho1[j] * rho2[j]).sqrt();
        denominator.push(rho1[j] + rho2[j] + 2.0 * cross * delta.cos());
    }
    let peak = denominator.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::DegenerateDensity);
    }
    let floor = crate::polar::RHO_FLOOR_REL * peak;
    let mut node_mask = vec![false; n];

    for j in 0..n {
        // A masked branch contributes cross terms of order
        // sqrt(rho_small/rho_big); when that ratio is not yet negligible the
        // closed form cannot be evaluated there and the point is masked.
        let unresolved = (f1.node_mask()[j] && rho1[j] > 1e-20 * rho2[j])
            || (f2.node_mask()[j] && rho2[j] > 1e-20 * rho1[j]);
        if denominator[j] < floor || unresolved {
            node_mask[j] = true;
            continue;
        }
        let delta = (s1[j] - s2[j]) / hbar;
        let (sin_d, cos_d) = delta.sin_cos();
        let cross = (rho1[j] * rho2[j]).sqrt();
        // Branch derivative fields vanish under their own masks, which is
        // the correct limit: each term carries a branch density factor.
        let ds1 = f1.grad_s()[j];
        let ds2 = f2.grad_s()[j];
        let l1 = f1.grad_log_rho()[j];
        let l2 = f2.grad_log_rho()[j];

        p_bar[j] = (rho1[j] * ds1
            + rho2[j] * ds2
            + cross * cos_d * (ds1 + ds2)
            - 0.5 * hbar * cross * (l2 - l1) * sin_d)
            / denominator[j];
        eps_scale[j] = (rho1[j] * l1
            + rho2[j] * l2
            + cross * (l1 + l2) * cos_d
            - 2.0 / hbar * cross * sin_d * (ds1 - ds2))
            / denominator[j];
    }

    Ok(SuperposedFields {
        p_bar,
        eps_scale,
        node_mask,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OverlapReport {
    /// Grid indices where each weighted branch density clears the threshold.
    pub support_1: Vec<usize>,
    pub support_2: Vec<usize>,
    pub overlap_set: Vec<usize>,
    /// `rho - rho_1 - rho_2` on the grid (weighted branch densities).
    pub interference_field: Vec<f64>,
    pub interference_max_abs: f64,
    pub interference_l1: f64,
    pub ms_error_combined: f64,
    /// MS errors of the individually re-normalized branches.
    pub branch_ms_errors: [f64; 2],
    /// Branch mass fractions in the combined state.
    pub branch_mass_weights: [f64; 2],
    /// `E_p^2[psi] - mu_1 E_p^2[psi_1] - mu_2 E_p^2[psi_2]`.
    pub ms_additivity_gap: f64,
    /// Estimator dispersion of the combined state, reported alongside the
    /// error bookkeeping.
    pub dispersion_p_combined: f64,
    pub overlap_threshold: f64,
}

pub fn overlap_analysis(
    pair: &SuperpositionPair,
    threshold_rel: Option<f64>,
) -> Result<OverlapReport> {
    let grid = pair.grid();
    let n = grid.len();
    let combined = pair.combined()?;
    let combined_fields = polar_decompose(&combined, None)?;
    let (mu1, mu2) = pair.mass_weights()?;
    let (f1, f2) = pair.branch_fields();

    // Weighted branch densities normalized against the combined state.
    let rho1: Vec<f64> = f1.rho().iter().map(|&r| mu1 * r).collect();
    let rho2: Vec<f64> = f2.rho().iter().map(|&r| mu2 * r).collect();

    let pair_peak = rho1
        .iter()
        .zip(&rho2)
        .map(|(a, b)| a + b)
        .fold(0.0, f64::max);
    let threshold = threshold_rel.unwrap_or(OVERLAP_THRESHOLD_REL) * pair_peak;

    let support_1: Vec<usize> = (0..n).filter(|&j| rho1[j] > threshold).collect();
    let support_2: Vec<usize> = (0..n).filter(|&j| rho2[j] > threshold).collect();
    let overlap_set: Vec<usize> = (0..n)
        .filter(|&j| rho1[j] > threshold && rho2[j] > threshold)
        .collect();

    let interference_field: Vec<f64> = (0..n)
        .map(|j| combined_fields.rho()[j] - rho1[j] - rho2[j])
        .collect();
    let interference_max_abs = interference_field
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let interference_l1 = interference_field
        .iter()
        .map(|v| v.abs())
        .sum::<f64>()
        * grid.spacing();

    let ms_error_combined = ms_error_p(&combined_fields);
    let branch_ms_errors = [ms_error_p(f1), ms_error_p(f2)];
    let ms_additivity_gap =
        ms_error_combined - mu1 * branch_ms_errors[0] - mu2 * branch_ms_errors[1];

    Ok(OverlapReport {
        support_1,
        support_2,
        overlap_set,
        interference_field,
        interference_max_abs,
        interference_l1,
        ms_error_combined,
        branch_ms_errors,
        branch_mass_weights: [mu1, mu2],
        ms_additivity_gap,
        dispersion_p_combined: dispersion_p(&combined_fields),
        overlap_threshold: threshold,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub overlap_empty: bool,
    /// Max over the overlap set of the momentum-field deviation from each
    /// branch's field, at the given noise value.
    pub max_dev_branch_1: f64,
    pub max_dev_branch_2: f64,
    pub compatible: bool,
}

/// Compare the combined momentum field against each branch's on the overlap
/// set: disjoint branches are compatible (every trajectory belongs to one
/// branch field), overlapping branches with distinct phases are not.
pub fn momentum_field_compatibility(pair: &SuperpositionPair, xi: f64) -> Result<CompatibilityReport> {
    let report = overlap_analysis(pair, None)?;
    let fields = superposed_estimate_fields(pair)?;
    let (f1, f2) = pair.branch_fields();

    if report.overlap_set.is_empty() {
        return Ok(CompatibilityReport {
            overlap_empty: true,
            max_dev_branch_1: 0.0,
            max_dev_branch_2: 0.0,
            compatible: true,
        });
    }

    let mut dev1 = 0.0_f64;
    let mut dev2 = 0.0_f64;
    let mut scale = 0.0_f64;
    for &j in &report.overlap_set {
        if fields.node_mask[j] || f1.node_mask()[j] || f2.node_mask()[j] {
            continue;
        }
        let p_combined = fields.p_bar[j] + 0.5 * xi * fields.eps_scale[j];
        let p1 = f1.grad_s()[j] + 0.5 * xi * f1.grad_log_rho()[j];
        let p2 = f2.grad_s()[j] + 0.5 * xi * f2.grad_log_rho()[j];
        dev1 = dev1.max((p_combined - p1).abs());
        dev2 = dev2.max((p_combined - p2).abs());
        scale = scale.max(p1.abs()).max(p2.abs()).max(p_combined.abs());
    }
    let tol = 1e-9 * (1.0 + scale);
    Ok(CompatibilityReport {
        overlap_empty: false,
        max_dev_branch_1: dev1,
        max_dev_branch_2: dev2,
        compatible: dev1 < tol && dev2 < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid1D {
        Grid1D::periodic(1024, -24.0, 48.0).unwrap()
    }

    fn pair_from(spec: &StateSpec, g: &Grid1D) -> SuperpositionPair {
        SuperpositionPair::from_spec(spec, g, 1.0).unwrap()
    }

    fn two_gaussians(d: f64, sigma: f64) -> StateSpec {
        StateSpec::superposition(
            Complex64::new(1.0, 0.0),
            StateSpec::gaussian(-d, sigma, 0.0),
            Complex64::new(1.0, 0.0),
            StateSpec::gaussian(d, sigma, 0.0),
        )
    }

    #[test]
    fn disjoint_branches_reduce_to_branch_fields() {
        let g = grid();
        let pair = pair_from(&two_gaussians(8.0, 1.0), &g);
        let fields = superposed_estimate_fields(&pair).unwrap();
        let (f1, f2) = pair.branch_fields();
        for j in 0..g.len() {
            if fields.node_mask[j] {
                continue;
            }
            let q = g.point(j);
            let (expect_p, expect_l, branch) = if q < 0.0 {
                (f1.grad_s()[j], f1.grad_log_rho()[j], f1)
            } else {
                (f2.grad_s()[j], f2.grad_log_rho()[j], f2)
            };
            if branch.node_mask()[j] || branch.rho()[j] < 1e-5 {
                continue;
            }
            assert!((fields.p_bar[j] - expect_p).abs() < 1e-8);
            assert!((fields.eps_scale[j] - expect_l).abs() < 1e-8,
                "q={q}: {} vs {expect_l}", fields.eps_scale[j]);
        }
    }

    #[test]
    fn counter_propagating_plane_waves_give_the_cosine_fields() {
        let g = grid();
        let hbar = 1.0;
        let p0 = g.snap_momentum(1.0, hbar);
        let spec = StateSpec::superposition(
            Complex64::new(1.0, 0.0),
            StateSpec::plane_wave(p0),
            Complex64::new(1.0, 0.0),
            StateSpec::plane_wave(-p0),
        );
        let pair = pair_from(&spec, &g);
        let fields = superposed_estimate_fields(&pair).unwrap();
        for (j, &q) in g.points().iter().enumerate() {
            if fields.node_mask[j] {
                continue;
            }
            let expect = -(2.0 * p0 / hbar) * (p0 * q / hbar).tan();
            if expect.abs() > 1e3 {
                continue;
            }
            assert!(fields.p_bar[j].abs() < 1e-6);
            assert!(
                (fields.eps_scale[j] - expect).abs() < 1e-5 * (1.0 + expect.abs()),
                "q={q}: {} vs {expect}",
                fields.eps_scale[j]
            );
        }
    }

    #[test]
    fn identical_branches_are_idempotent() {
        let g = grid();
        let spec = StateSpec::superposition(
            Complex64::new(1.0, 0.0),
            StateSpec::gaussian(0.0, 1.0, 0.5),
            Complex64::new(1.0, 0.0),
            StateSpec::gaussian(0.0, 1.0, 0.5),
        );
        let pair = pair_from(&spec, &g);
        let fields = superposed_estimate_fields(&pair).unwrap();
        let (f1, _) = pair.branch_fields();
        for j in 0..g.len() {
            if fields.node_mask[j] || f1.node_mask()[j] {
                continue;
            }
            assert!((fields.p_bar[j] - f1.grad_s()[j]).abs() < 1e-9);
            assert!((fields.eps_scale[j] - f1.grad_log_rho()[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_forms_match_direct_decomposition() {
        let g = grid();
        let spec = StateSpec::superposition(
            Complex64::new(0.8, 0.1),
            StateSpec::gaussian(-1.0, 1.2, 0.6),
            Complex64::new(0.5, -0.3),
            StateSpec::gaussian(1.5, 0.9, -0.4),
        );
        let pair = pair_from(&spec, &g);
        let fields = superposed_estimate_fields(&pair).unwrap();
        let combined = pair.combined().unwrap();
        let direct = polar_decompose(&combined, None).unwrap();
        let peak = direct.rho().iter().cloned().fold(0.0, f64::max);
        for j in 0..g.len() {
            // Deep tails amplify spectral rounding by 1/rho in the direct
            // route; compare where the density carries real mass.
            if fields.node_mask[j] || direct.node_mask()[j] || direct.rho()[j] < 1e-5 * peak {
                continue;
            }
            let dp = (fields.p_bar[j] - direct.grad_s()[j]).abs();
            let dl = (fields.eps_scale[j] - direct.grad_log_rho()[j]).abs();
            let scale_p = 1.0 + direct.grad_s()[j].abs();
            let scale_l = 1.0 + direct.grad_log_rho()[j].abs();
            assert!(dp < 1e-8 * scale_p, "j={j} dp={dp}");
            assert!(dl < 1e-8 * scale_l, "j={j} dl={dl}");
        }
    }

    #[test]
    fn separated_gaussians_are_additive() {
        let g = grid();
        let pair = pair_from(&two_gaussians(8.0, 1.0), &g);
        let report = overlap_analysis(&pair, None).unwrap();
        assert!(report.overlap_set.is_empty());
        assert!(report.interference_max_abs < 1e-9);
        let branch_avg = 0.5 * (report.branch_ms_errors[0] + report.branch_ms_errors[1]);
        assert!(
            report.ms_additivity_gap.abs() < 1e-6 * branch_avg,
            "gap {}",
            report.ms_additivity_gap
        );
    }

    #[test]
    fn counter_propagating_plane_waves_gap_is_p0_squared() {
        let g = grid();
        let p0 = g.snap_momentum(1.0, 1.0);
        let spec = StateSpec::superposition(
            Complex64::new(1.0, 0.0),
            StateSpec::plane_wave(p0),
            Complex64::new(1.0, 0.0),
            StateSpec::plane_wave(-p0),
        );
        let pair = pair_from(&spec, &g);
        let report = overlap_analysis(&pair, None).unwrap();
        assert!(report.branch_ms_errors[0].abs() < 1e-12);
        assert!(report.branch_ms_errors[1].abs() < 1e-12);
        assert!(
            (report.ms_additivity_gap - p0 * p0).abs() < 1e-8 * p0 * p0,
            "gap {}",
            report.ms_additivity_gap
        );
    }

    #[test]
    fn close_gaussians_interfere_and_violate_total_probability() {
        let g = grid();
        let pair = pair_from(&two_gaussians(0.5, 1.0), &g);
        let report = overlap_analysis(&pair, None).unwrap();
        assert!(!report.overlap_set.is_empty());
        assert!(report.interference_max_abs > 1e-3);
        assert!(report.interference_l1 > 0.1, "L1 {}", report.interference_l1);
    }

    #[test]
    fn compatibility_verdicts() {
        let g = grid();
        let xi = 1.0;

        let disjoint = pair_from(&two_gaussians(8.0, 1.0), &g);
        let report = momentum_field_compatibility(&disjoint, xi).unwrap();
        assert!(report.compatible);

        let p0 = g.snap_momentum(1.0, 1.0);
        let spec = StateSpec::superposition(
            Complex64::new(1.0, 0.0),
            StateSpec::plane_wave(p0),
            Complex64::new(1.0, 0.0),
            StateSpec::plane_wave(-p0),
        );
        let overlapping = pair_from(&spec, &g);
        let report = momentum_field_compatibility(&overlapping, xi).unwrap();
        assert!(!report.compatible);
        assert!(report.max_dev_branch_1 > 1.0);
        assert!(report.max_dev_branch_2 > 1.0);

        let same = pair_from(
            &StateSpec::superposition(
                Complex64::new(1.0, 0.0),
                StateSpec::gaussian(0.0, 1.0, 0.3),
                Complex64::new(1.0, 0.0),
                StateSpec::gaussian(0.0, 1.0, 0.3),
            ),
            &g,
        );
        let report = momentum_field_compatibility(&same, xi).unwrap();
        assert!(report.compatible);
    }
}
