//! Impulsive momentum measurement on a two-axis configuration plane.
//!
//! The system couples to a pointer through `H = g p_A p_B`, applied exactly
//! in the double-momentum representation (no time-stepping error). For a
//! two-momentum-mode system state the pointer splits into two packets
//! shifted by `+/- g p0 T`; recording the pointer position selects one
//! branch, the conditional slice is the collapsed system state, and its
//! momentum estimate is sharp.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::ms_error_p;
use crate::fourier::{fft2_in_place, wavenumbers};
use crate::grid::{Grid1D, Grid2D};
use crate::polar::polar_decompose;
use crate::rng::IndexRng;
use crate::states::StateSpec;
use crate::wavefunction::{WaveFunction, WaveFunction2D};
use crate::xi::{XiKind, XiModel};

/// Pointer-sampling threshold below which a column counts as dead zone.
pub const DEAD_ZONE_THRESHOLD: f64 = 1e-10;
const DEAD_ZONE_RETRIES: usize = 64;

#[derive(Debug, Clone)]
pub struct MeasurementConfig {
    pub grid: Grid2D,
    pub system_state: StateSpec,
    pub pointer_sigma: f64,
    pub coupling_g: f64,
    pub duration_t: f64,
    pub separation_factor: f64,
    pub hbar: f64,
}

/// The two momentum modes `(weight, momentum)` of a measurable system state,
/// with `|w_1|^2 + |w_2|^2 = 1`.
pub type SystemModes = [(Complex64, f64); 2];

impl MeasurementConfig {
    pub fn new(
        grid: Grid2D,
        system_state: StateSpec,
        pointer_sigma: f64,
        coupling_g: f64,
        duration_t: f64,
        separation_factor: f64,
        hbar: f64,
    ) -> Result<Self> {
        let config = MeasurementConfig {
            grid,
            system_state,
            pointer_sigma,
            coupling_g,
            duration_t,
            separation_factor,
            hbar,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.separation_factor < 6.0 {
            return Err(Error::InvalidMeasurementConfig(format!(
                "separation_factor must be at least 6, got {}",
                self.separation_factor
            )));
        }
        if !(self.pointer_sigma > 0.0) {
            return Err(Error::InvalidMeasurementConfig(format!(
                "pointer_sigma must be positive, got {}",
                self.pointer_sigma
            )));
        }
        if !(self.hbar > 0.0) {
            return Err(Error::InvalidMeasurementConfig(format!(
                "hbar must be positive, got {}",
                self.hbar
            )));
        }
        let p0 = self.system_momentum()?;
        let shift = self.pointer_shift()?;
        if shift < self.separation_factor * self.pointer_sigma {
            return Err(Error::InvalidMeasurementConfig(format!(
                "g*p0*T = {shift:.6} does not separate the packets by \
                 {} pointer widths (p0 = {p0:.6})",
                self.separation_factor
            )));
        }
        // Packets must fit on the pointer axis with tail clearance.
        let needed = shift + 8.0 * self.pointer_sigma;
        let available = 0.5 * self.grid.grid_b.extent();
        if needed > available {
            return Err(Error::PointerOffGrid { needed, available });
        }
        Ok(())
    }

    /// Magnitude of the measured momentum, snapped to the system lattice.
    pub fn system_momentum(&self) -> Result<f64> {
        let modes = self.system_modes()?;
        Ok(modes[0].1.abs())
    }

    /// Pointer displacement `g p0 T` of the positive branch.
    pub fn pointer_shift(&self) -> Result<f64> {
        Ok(self.coupling_g * self.system_momentum()? * self.duration_t)
    }

    /// Decompose the system spec into its two momentum modes.
    pub fn system_modes(&self) -> Result<SystemModes> {
        system_modes(&self.system_state, &self.grid.grid_a, self.hbar)
    }

    /// Center of the pointer axis; packets split symmetrically around it.
    pub fn pointer_center(&self) -> f64 {
        self.grid.grid_b.origin() + 0.5 * self.grid.grid_b.extent()
    }

    fn pointer_state(&self) -> Result<WaveFunction> {
        StateSpec::gaussian(self.pointer_center(), self.pointer_sigma, 0.0)
            .build(&self.grid.grid_b, self.hbar)
    }

    fn system_wavefunction(&self) -> Result<WaveFunction> {
        self.system_state.build(&self.grid.grid_a, self.hbar)
    }
}

/// Momentum-mode decomposition of the admissible system states: a plane
/// wave, a standing cosine, or a two-plane-wave superposition.
pub fn system_modes(spec: &StateSpec, grid: &Grid1D, hbar: f64) -> Result<SystemModes> {
    let snap = |p: f64| grid.snap_momentum(p, hbar);
    match spec {
        StateSpec::PlaneWave { p0 } => Ok([
            (Complex64::new(1.0, 0.0), snap(*p0)),
            (Complex64::new(0.0, 0.0), -snap(*p0)),
        ]),
        StateSpec::Cosine { p0, phase } => {
            let w = std::f64::consts::FRAC_1_SQRT_2;
            Ok([
                (Complex64::from_polar(w, *phase), snap(*p0)),
                (Complex64::from_polar(w, -*phase), -snap(*p0)),
            ])
        }
        StateSpec::Superposition { branch_1, branch_2 } => {
            let p1 = match branch_1.state {
                StateSpec::PlaneWave { p0 } => snap(p0),
                _ => {
                    return Err(Error::InvalidMeasurementConfig(
                        "system state must decompose into two plane-wave modes".into(),
                    ))
                }
            };
            let p2 = match branch_2.state {
                StateSpec::PlaneWave { p0 } => snap(p0),
                _ => {
                    return Err(Error::InvalidMeasurementConfig(
                        "system state must decompose into two plane-wave modes".into(),
                    ))
                }
            };
            if (p1 + p2).abs() > 1e-12 * (p1.abs() + p2.abs()) || p1 <= 0.0 {
                return Err(Error::InvalidMeasurementConfig(
                    "system modes must be opposite momenta with the positive one first".into(),
                ));
            }
            let (w1, w2) = (branch_1.weight(), branch_2.weight());
            let norm = (w1.norm_sqr() + w2.norm_sqr()).sqrt();
            if !(norm > 0.0) {
                return Err(Error::InvalidMeasurementConfig(
                    "system mode weights must not both vanish".into(),
                ));
            }
            Ok([(w1 / norm, p1), (w2 / norm, p2)])
        }
        _ => Err(Error::InvalidMeasurementConfig(
            "system state must decompose into two plane-wave modes".into(),
        )),
    }
}

/// Entangle an arbitrary system state with the configured pointer by
/// applying `exp(-i g p_A p_B T / hbar)` in the double-momentum
/// representation.
pub fn entangle_with_pointer(
    psi_system: &WaveFunction,
    config: &MeasurementConfig,
) -> Result<WaveFunction2D> {
    let pointer = config.pointer_state()?;
    let mut joint = WaveFunction2D::product(psi_system, &pointer)?;
    let grid = config.grid.clone();
    let ka = wavenumbers(grid.grid_a.len(), grid.grid_a.spacing());
    let kb = wavenumbers(grid.grid_b.len(), grid.grid_b.spacing());
    let factor = -config.coupling_g * config.duration_t * config.hbar;

    let mut amps = joint.amplitudes().to_vec();
    fft2_in_place(&mut amps, &grid, false);
    let nb = grid.grid_b.len();
    for (ia, &kav) in ka.iter().enumerate() {
        for (ib, &kbv) in kb.iter().enumerate() {
            amps[ia * nb + ib] *= Complex64::from_polar(1.0, factor * kav * kbv);
        }
    }
    fft2_in_place(&mut amps, &grid, true);
    for (dst, src) in joint.amplitudes_mut().iter_mut().zip(&amps) {
        *dst = *src;
    }
    Ok(joint)
}

/// Entangle the configured system state with the pointer.
pub fn entangling_propagate(config: &MeasurementConfig) -> Result<WaveFunction2D> {
    config.validate()?;
    entangle_with_pointer(&config.system_wavefunction()?, config)
}

/// Closed form of the entangled state for a two-mode system: each momentum
/// mode drags the pointer packet by `g p T`.
pub fn closed_form_entangled(config: &MeasurementConfig) -> Result<WaveFunction2D> {
    let modes = config.system_modes()?;
    let ga = &config.grid.grid_a;
    let gb = &config.grid.grid_b;
    let hbar = config.hbar;
    let sigma = config.pointer_sigma;
    let center = config.pointer_center();
    let pointer_norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma).powf(0.25);
    let system_norm = 1.0 / ga.extent().sqrt();

    let nb = gb.len();
    let mut amps = vec![Complex64::new(0.0, 0.0); config.grid.len()];
    for (weight, p) in modes {
        if weight.norm() == 0.0 {
            continue;
        }
        let shift = config.coupling_g * p * config.duration_t;
        let k = p / hbar;
        for (ia, &qa) in ga.points().iter().enumerate() {
            let sys = weight * Complex64::from_polar(system_norm, k * qa);
            for (ib, &qb) in gb.points().iter().enumerate() {
                let d = qb - center - shift;
                let env = pointer_norm * (-d * d / (4.0 * sigma * sigma)).exp();
                amps[ia * nb + ib] += sys * env;
            }
        }
    }
    let mut psi = WaveFunction2D::new(amps, config.grid.clone(), hbar)?;
    psi.normalize()?;
    Ok(psi)
}

#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    /// `+p0` or `-p0`, by packet membership of the pointer reading.
    pub outcome: f64,
    pub pointer_reading: f64,
    pub post_state: WaveFunction,
    pub post_ms_error_p: f64,
}

fn check_packets_disjoint(marginal: &[f64], center_index: usize) -> Result<()> {
    let peak = marginal.iter().cloned().fold(0.0, f64::max);
    if marginal[center_index] > DEAD_ZONE_THRESHOLD * peak {
        return Err(Error::PacketsOverlap);
    }
    Ok(())
}

/// Sample the pointer position from its marginal (Born rule), assign the
/// outcome by which side of the midpoint it fell on, and collapse to the
/// conditional system slice at the recorded column.
pub fn readout_and_collapse(
    entangled: &WaveFunction2D,
    config: &MeasurementConfig,
    seed: u64,
) -> Result<MeasurementRecord> {
    let marginal = entangled.marginal_b();
    readout_from_marginal(entangled, &marginal, config, seed)
}

fn sample_pointer_column(
    marginal: &[f64],
    config: &MeasurementConfig,
    seed: u64,
) -> Result<usize> {
    let gb = &config.grid.grid_b;
    let masses: Vec<f64> = marginal.iter().map(|&m| m * gb.spacing()).collect();
    let total: f64 = masses.iter().sum();
    let peak = marginal.iter().cloned().fold(0.0, f64::max);
    for attempt in 0..DEAD_ZONE_RETRIES {
        let mut rng = IndexRng::new(seed, attempt as u64);
        let mut target = rng.uniform() * total;
        let mut column = masses.len() - 1;
        for (j, &m) in masses.iter().enumerate() {
            if target < m {
                column = j;
                break;
            }
            target -= m;
        }
        if marginal[column] > DEAD_ZONE_THRESHOLD * peak {
            return Ok(column);
        }
        log::info!("pointer readout landed in the dead zone (attempt {attempt}); retrying");
    }
    Err(Error::DeadZoneExhausted {
        attempts: DEAD_ZONE_RETRIES,
    })
}

fn readout_from_marginal(
    entangled: &WaveFunction2D,
    marginal: &[f64],
    config: &MeasurementConfig,
    seed: u64,
) -> Result<MeasurementRecord> {
    let gb = &config.grid.grid_b;
    let center = config.pointer_center();
    let (center_cell, _) = gb.locate(center)?;
    check_packets_disjoint(marginal, center_cell)?;

    let column = sample_pointer_column(marginal, config, seed)?;
    let pointer_reading = gb.point(column);
    let p0 = config.system_momentum()?;
    let outcome = if pointer_reading > center { p0 } else { -p0 };

    let post_state = entangled.slice_at_b(column)?;
    let post_fields = polar_decompose(&post_state, None)?;
    Ok(MeasurementRecord {
        outcome,
        pointer_reading,
        post_state,
        post_ms_error_p: ms_error_p(&post_fields),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RepeatabilityReport {
    pub trials: usize,
    pub agreements: usize,
    pub pass: bool,
}

/// Re-measure the collapsed state with a fresh pointer: every repetition
/// must reproduce the recorded outcome.
pub fn repeatability_check(
    record: &MeasurementRecord,
    config: &MeasurementConfig,
    seed: u64,
    trials: usize,
) -> Result<RepeatabilityReport> {
    let entangled = entangle_with_pointer(&record.post_state, config)?;
    let marginal = entangled.marginal_b();
    let outcomes: Result<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let rec = readout_from_marginal(
                &entangled,
                &marginal,
                config,
                seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(trial + 1)),
            )?;
            Ok(rec.outcome)
        })
        .collect();
    let outcomes = outcomes?;
    let agreements = outcomes
        .iter()
        .filter(|&&o| o == record.outcome)
        .count();
    Ok(RepeatabilityReport {
        trials,
        agreements,
        pass: agreements == trials,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BornStatisticsReport {
    pub n_runs: usize,
    pub count_plus: usize,
    pub count_minus: usize,
    pub freq_plus: f64,
    pub expected_plus: f64,
    pub binomial_std_error: f64,
    pub chi_square: f64,
    pub pass: bool,
}

/// Outcome frequencies over repeated measurements against the mode weights.
pub fn born_statistics(
    config: &MeasurementConfig,
    n_runs: usize,
    seed: u64,
) -> Result<BornStatisticsReport> {
    if n_runs == 0 {
        return Err(Error::ZeroSampleCount);
    }
    config.validate()?;
    let entangled = entangling_propagate(config)?;
    let marginal = entangled.marginal_b();
    let gb = &config.grid.grid_b;
    let center = config.pointer_center();
    let (center_cell, _) = gb.locate(center)?;
    check_packets_disjoint(&marginal, center_cell)?;

    let outcomes: Result<Vec<bool>> = (0..n_runs as u64)
        .into_par_iter()
        .map(|run| {
            let column = sample_pointer_column(&marginal, config, seed ^ run.wrapping_mul(0xD134_2543_DE82_EF95).wrapping_add(1))?;
            Ok(gb.point(column) > center)
        })
        .collect();
    let outcomes = outcomes?;
    let count_plus = outcomes.iter().filter(|&&b| b).count();
    let count_minus = n_runs - count_plus;
    let freq_plus = count_plus as f64 / n_runs as f64;

    let modes = config.system_modes()?;
    let expected_plus = modes[0].0.norm_sqr();
    let binomial_std_error = (expected_plus * (1.0 - expected_plus) / n_runs as f64).sqrt();
    let diff = (freq_plus - expected_plus).abs();
    let pass = if binomial_std_error > 0.0 {
        diff <= 4.0 * binomial_std_error
    } else {
        diff == 0.0
    };
    let chi_square = crate::stats::chi_square(
        &[count_plus as u64, count_minus as u64],
        &[expected_plus, 1.0 - expected_plus],
    );
    Ok(BornStatisticsReport {
        n_runs,
        count_plus,
        count_minus,
        freq_plus,
        expected_plus,
        binomial_std_error,
        chi_square,
        pass,
    })
}

/// Whether the two subsystems share one noise draw or own independent ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum XiCoupling {
    Global,
    Separable,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentumAtom {
    pub p_a: f64,
    pub p_b: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PreparationIndependenceReport {
    pub mode: XiCoupling,
    pub tv_distance: f64,
    pub joint_atoms: Vec<MomentumAtom>,
    pub product_atoms: Vec<MomentumAtom>,
}

fn merge_atoms(atoms: Vec<MomentumAtom>) -> Vec<MomentumAtom> {
    let mut merged: Vec<MomentumAtom> = Vec::new();
    for atom in atoms {
        if let Some(existing) = merged
            .iter_mut()
            .find(|m| m.p_a == atom.p_a && m.p_b == atom.p_b)
        {
            existing.prob += atom.prob;
        } else {
            merged.push(atom);
        }
    }
    merged.sort_by(|x, y| x.p_a.total_cmp(&y.p_a).then(x.p_b.total_cmp(&y.p_b)));
    merged
}

fn atom_tv(a: &[MomentumAtom], b: &[MomentumAtom]) -> f64 {
    let mut keys: Vec<(f64, f64)> = a
        .iter()
        .chain(b)
        .map(|m| (m.p_a, m.p_b))
        .collect();
    keys.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    keys.dedup();
    let lookup = |set: &[MomentumAtom], key: (f64, f64)| {
        set.iter()
            .find(|m| m.p_a == key.0 && m.p_b == key.1)
            .map(|m| m.prob)
            .unwrap_or(0.0)
    };
    0.5 * keys
        .iter()
        .map(|&k| (lookup(a, k) - lookup(b, k)).abs())
        .sum::<f64>()
}

/// Conditional joint distribution of the two momenta at fixed positions,
/// against the product of its marginals.
///
/// With a shared (global) noise draw the two momentum values move together
/// and the joint cannot factorize; with separable draws it factorizes
/// exactly. Requires the two-point noise model so the distributions are
/// finite sets of atoms.
#[allow(clippy::too_many_arguments)]
pub fn preparation_independence_diagnostic(
    state_a: &StateSpec,
    grid_a: &Grid1D,
    state_b: &StateSpec,
    grid_b: &Grid1D,
    hbar: f64,
    xi_model: &XiModel,
    mode: XiCoupling,
    q_a: f64,
    q_b: f64,
) -> Result<PreparationIndependenceReport> {
    if xi_model.kind != XiKind::TwoPoint {
        return Err(Error::XiModelUnsupported);
    }
    let atoms = xi_model.atoms().expect("two-point model has atoms");

    let psi_a = state_a.build(grid_a, hbar)?;
    let psi_b = state_b.build(grid_b, hbar)?;
    let fields_a = polar_decompose(&psi_a, None)?;
    let fields_b = polar_decompose(&psi_b, None)?;
    let p_bar_a = fields_a.grad_s_at(q_a)?;
    let p_bar_b = fields_b.grad_s_at(q_b)?;
    let l_a = fields_a.grad_log_rho_at(q_a)?;
    let l_b = fields_b.grad_log_rho_at(q_b)?;
    let scale_a = fields_a
        .grad_log_rho()
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let scale_b = fields_b
        .grad_log_rho()
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    if l_a.abs() < 1e-12 * scale_a.max(1.0) || l_b.abs() < 1e-12 * scale_b.max(1.0) {
        return Err(Error::DegenerateConditioning);
    }

    let p_a = |xi: f64| p_bar_a + 0.5 * xi * l_a;
    let p_b = |xi: f64| p_bar_b + 0.5 * xi * l_b;

    let joint = match mode {
        XiCoupling::Global => merge_atoms(
            atoms
                .iter()
                .map(|&(xi, prob)| MomentumAtom {
                    p_a: p_a(xi),
                    p_b: p_b(xi),
                    prob,
                })
                .collect(),
        ),
        XiCoupling::Separable => {
            let mut out = Vec::new();
            for &(xa, wa) in &atoms {
                for &(xb, wb) in &atoms {
                    out.push(MomentumAtom {
                        p_a: p_a(xa),
                        p_b: p_b(xb),
                        prob: wa * wb,
                    });
                }
            }
            merge_atoms(out)
        }
    };

    // Product of marginals.
    let marginal = |project: &dyn Fn(&MomentumAtom) -> f64| {
        let mut vals: Vec<(f64, f64)> = Vec::new();
        for atom in &joint {
            let key = project(atom);
            if let Some(v) = vals.iter_mut().find(|(k, _)| *k == key) {
                v.1 += atom.prob;
            } else {
                vals.push((key, atom.prob));
            }
        }
        vals
    };
    let marg_a = marginal(&|m: &MomentumAtom| m.p_a);
    let marg_b = marginal(&|m: &MomentumAtom| m.p_b);
    let mut product = Vec::new();
    for &(pa, wa) in &marg_a {
        for &(pb, wb) in &marg_b {
            product.push(MomentumAtom {
                p_a: pa,
                p_b: pb,
                prob: wa * wb,
            });
        }
    }
    let product = merge_atoms(product);
    let tv_distance = atom_tv(&joint, &product);

    Ok(PreparationIndependenceReport {
        mode,
        tv_distance,
        joint_atoms: joint,
        product_atoms: product,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_config() -> MeasurementConfig {
        let grid = Grid2D::new(
            Grid1D::periodic(128, -16.0, 32.0).unwrap(),
            Grid1D::periodic(256, -16.0, 32.0).unwrap(),
        );
        let p0 = grid.grid_a.snap_momentum(2.0, 1.0);
        MeasurementConfig::new(
            grid,
            StateSpec::cosine(p0),
            0.5,
            1.0,
            2.0,
            6.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn entangled_state_matches_the_closed_form() {
        let config = test_config();
        let numeric = entangling_propagate(&config).unwrap();
        let closed = closed_form_entangled(&config).unwrap();
        let dev = numeric.max_deviation_up_to_phase(&closed);
        assert!(dev < 1e-8, "deviation {dev}");
    }

    #[test]
    fn zero_coupling_is_the_identity() {
        let grid = Grid2D::new(
            Grid1D::periodic(64, -16.0, 32.0).unwrap(),
            Grid1D::periodic(64, -16.0, 32.0).unwrap(),
        );
        let p0 = grid.grid_a.snap_momentum(2.0, 1.0);
        let config = MeasurementConfig {
            grid,
            system_state: StateSpec::cosine(p0),
            pointer_sigma: 0.5,
            coupling_g: 0.0,
            duration_t: 2.0,
            separation_factor: 6.0,
            hbar: 1.0,
        };
        let sys = config.system_wavefunction().unwrap();
        let pointer = config.pointer_state().unwrap();
        let product = WaveFunction2D::product(&sys, &pointer).unwrap();
        let evolved = entangle_with_pointer(&sys, &config).unwrap();
        assert!(evolved.max_deviation_up_to_phase(&product) < 1e-12);
    }

    #[test]
    fn plane_wave_system_shifts_a_single_packet() {
        let mut config = test_config();
        let p0 = config.system_momentum().unwrap();
        config.system_state = StateSpec::plane_wave(p0);
        let numeric = entangling_propagate(&config).unwrap();
        let closed = closed_form_entangled(&config).unwrap();
        assert!(numeric.max_deviation_up_to_phase(&closed) < 1e-8);
        // Product state: the conditional slice is the system state everywhere
        // the marginal has support.
        let marginal = numeric.marginal_b();
        let peak = marginal.iter().cloned().fold(0.0, f64::max);
        let col = marginal.iter().position(|&m| m > 0.5 * peak).unwrap();
        let slice = numeric.slice_at_b(col).unwrap();
        let sys = config.system_wavefunction().unwrap();
        assert!(slice.max_deviation_up_to_phase(&sys) < 1e-8);
    }

    #[test]
    fn collapse_sharpens_the_estimate() {
        let config = test_config();
        let p0 = config.system_momentum().unwrap();
        let entangled = entangling_propagate(&config).unwrap();
        let record = readout_and_collapse(&entangled, &config, 11).unwrap();
        assert!(record.outcome == p0 || record.outcome == -p0);
        assert!(
            record.post_ms_error_p <= 1e-4 * p0 * p0,
            "post MS error {}",
            record.post_ms_error_p
        );
        // The post state is the matching plane wave.
        let expect = StateSpec::plane_wave(record.outcome)
            .build(&config.grid.grid_a, config.hbar)
            .unwrap();
        assert!(record.post_state.max_deviation_up_to_phase(&expect) < 1e-3);
        // Post-measurement position estimate is grid-limited.
        let fields = polar_decompose(&record.post_state, None).unwrap();
        let (_, limited) = crate::estimation::ms_error_q(&fields);
        assert!(limited);
    }

    #[test]
    fn repeated_measurement_yields_the_same_outcome_for_both_branches() {
        let config = test_config();
        let p0 = config.system_momentum().unwrap();
        let entangled = entangling_propagate(&config).unwrap();
        let mut seen = Vec::new();
        for seed in 0..16 {
            let record = readout_and_collapse(&entangled, &config, seed).unwrap();
            if seen.contains(&record.outcome) {
                continue;
            }
            seen.push(record.outcome);
            let report = repeatability_check(&record, &config, 99 + seed, 200).unwrap();
            assert!(
                report.pass,
                "outcome {}: {} / {}",
                record.outcome, report.agreements, report.trials
            );
        }
        assert!(seen.contains(&p0) && seen.contains(&-p0), "saw {seen:?}");
    }

    #[test]
    fn fresh_states_split_roughly_evenly() {
        let config = test_config();
        let report = born_statistics(&config, 2000, 17).unwrap();
        assert!(report.pass, "freq {}", report.freq_plus);
        assert!((report.freq_plus - 0.5).abs() < 0.05);
    }

    #[test]
    fn biased_weights_follow_the_born_rule() {
        let grid = Grid2D::new(
            Grid1D::periodic(128, -16.0, 32.0).unwrap(),
            Grid1D::periodic(256, -16.0, 32.0).unwrap(),
        );
        let p0 = grid.grid_a.snap_momentum(2.0, 1.0);
        // |alpha|^2 = 0.8.
        let spec = StateSpec::superposition(
            Complex64::new(0.8f64.sqrt(), 0.0),
            StateSpec::plane_wave(p0),
            Complex64::new(0.2f64.sqrt(), 0.0),
            StateSpec::plane_wave(-p0),
        );
        let config =
            MeasurementConfig::new(grid, spec, 0.5, 1.0, 2.0, 6.0, 1.0).unwrap();
        let report = born_statistics(&config, 4000, 23).unwrap();
        assert!((report.expected_plus - 0.8).abs() < 1e-12);
        assert!(report.pass, "freq {}", report.freq_plus);

        // Single branch: all outcomes positive.
        let single = MeasurementConfig::new(
            config.grid.clone(),
            StateSpec::plane_wave(p0),
            0.5,
            1.0,
            2.0,
            6.0,
            1.0,
        )
        .unwrap();
        let report = born_statistics(&single, 500, 3).unwrap();
        assert_eq!(report.count_minus, 0);
    }

    #[test]
    fn config_validation_rejects_bad_setups() {
        let grid = Grid2D::new(
            Grid1D::periodic(64, -16.0, 32.0).unwrap(),
            Grid1D::periodic(64, -16.0, 32.0).unwrap(),
        );
        let p0 = grid.grid_a.snap_momentum(2.0, 1.0);
        // Separation factor below 6.
        assert!(MeasurementConfig::new(
            grid.clone(),
            StateSpec::cosine(p0),
            0.5,
            1.0,
            2.0,
            2.0,
            1.0
        )
        .is_err());
        // Packets would leave the pointer axis.
        assert!(matches!(
            MeasurementConfig::new(
                grid,
                StateSpec::cosine(p0),
                0.5,
                10.0,
                2.0,
                6.0,
                1.0
            ),
            Err(Error::PointerOffGrid { .. })
        ));
    }

    #[test]
    fn preparation_independence_dichotomy() {
        let grid = Grid1D::periodic(256, -16.0, 32.0).unwrap();
        let a = StateSpec::gaussian(0.0, 1.0, 0.0);
        let b = StateSpec::gaussian(0.5, 1.5, 0.0);
        let xi = XiModel::two_point(1.0);
        // Conditioning one width away from each center.
        let global = preparation_independence_diagnostic(
            &a,
            &grid,
            &b,
            &grid,
            1.0,
            &xi,
            XiCoupling::Global,
            1.0,
            2.0,
        )
        .unwrap();
        assert!((global.tv_distance - 0.5).abs() < 1e-12, "tv {}", global.tv_distance);

        let separable = preparation_independence_diagnostic(
            &a,
            &grid,
            &b,
            &grid,
            1.0,
            &xi,
            XiCoupling::Separable,
            1.0,
            2.0,
        )
        .unwrap();
        assert!(separable.tv_distance < 1e-12);

        // Zero-gradient conditioning point degenerates.
        assert!(matches!(
            preparation_independence_diagnostic(
                &a,
                &grid,
                &b,
                &grid,
                1.0,
                &xi,
                XiCoupling::Global,
                0.0,
                2.0,
            ),
            Err(Error::DegenerateConditioning)
        ));

        // Gaussian noise law is refused.
        assert!(matches!(
            preparation_independence_diagnostic(
                &a,
                &grid,
                &b,
                &grid,
                1.0,
                &XiModel::gaussian(1.0),
                XiCoupling::Global,
                1.0,
                2.0,
            ),
            Err(Error::XiModelUnsupported)
        ));
    }
}
