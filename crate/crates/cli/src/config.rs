//! Experiment configuration: a flat, human-editable TOML schema with
//! explicit units and a mandatory seed.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use erps_core::grid::{Boundary, Grid1D};
use erps_core::states::StateSpec;
use erps_core::xi::{XiKind, XiModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    OpticalEquivalence,
    BornRule,
    UncertaintySuite,
    CramerRao,
    Superposition,
    Dynamics,
    Measurement,
    PrepIndependence,
    ClassicalLimit,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::OpticalEquivalence => "optical_equivalence",
            Experiment::BornRule => "born_rule",
            Experiment::UncertaintySuite => "uncertainty_suite",
            Experiment::CramerRao => "cramer_rao",
            Experiment::Superposition => "superposition",
            Experiment::Dynamics => "dynamics",
            Experiment::Measurement => "measurement",
            Experiment::PrepIndependence => "prep_independence",
            Experiment::ClassicalLimit => "classical_limit",
        }
    }

    pub fn all() -> [Experiment; 9] {
        [
            Experiment::OpticalEquivalence,
            Experiment::BornRule,
            Experiment::UncertaintySuite,
            Experiment::CramerRao,
            Experiment::Superposition,
            Experiment::Dynamics,
            Experiment::Measurement,
            Experiment::PrepIndependence,
            Experiment::ClassicalLimit,
        ]
    }

    pub fn description(&self) -> &'static str {
        match self {
            Experiment::OpticalEquivalence => {
                "Monte-Carlo phase-space averages against spectral quantum expectations \
                 for a battery of states and observables quadratic in momentum"
            }
            Experiment::BornRule => {
                "sampled position histograms against |psi|^2 for Gaussian and standing-wave states"
            }
            Experiment::UncertaintySuite => {
                "MS-error and variance uncertainty products, the momentum variance \
                 decomposition, commutator values, and weak-value identities on random states"
            }
            Experiment::CramerRao => {
                "Fisher-information identities, position-bound saturation by Gaussians, \
                 and per-noise-value momentum bound saturation"
            }
            Experiment::Superposition => {
                "two-branch estimator fields, interference, and MS-error (non-)additivity"
            }
            Experiment::Dynamics => {
                "split-step propagation: unitarity, energy conservation, wave-packet \
                 closed forms, continuity residual, and trajectory equivariance"
            }
            Experiment::Measurement => {
                "impulsive pointer measurement: entanglement closed form, outcome \
                 statistics, collapse sharpening, and repeatability"
            }
            Experiment::PrepIndependence => {
                "factorization of the conditional two-party momentum distribution under \
                 shared versus independent noise draws"
            }
            Experiment::ClassicalLimit => {
                "scaling of the estimation-error to estimator ratio with the noise strength"
            }
        }
    }
}

fn default_n_samples() -> usize {
    1_000_000
}

fn default_n_states() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_points: usize,
    pub q_min: f64,
    pub extent: f64,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_boundary() -> Boundary {
    Boundary::Periodic
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            n_points: 512,
            q_min: -20.0,
            extent: 40.0,
            boundary: Boundary::Periodic,
        }
    }
}

impl GridSection {
    pub fn build(&self) -> anyhow::Result<Grid1D> {
        Ok(Grid1D::new(
            self.n_points,
            self.extent / self.n_points as f64,
            self.q_min,
            self.boundary,
        )?)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsSection {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for UnitsSection {
    fn default() -> Self {
        UnitsSection {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    #[serde(default = "default_pointer_points")]
    pub pointer_points: usize,
    #[serde(default = "default_pointer_sigma")]
    pub pointer_sigma: f64,
    #[serde(default = "one")]
    pub coupling_g: f64,
    #[serde(default = "two")]
    pub duration_t: f64,
    #[serde(default = "six")]
    pub separation_factor: f64,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default = "default_repeat_trials")]
    pub repeat_trials: usize,
}

fn default_pointer_points() -> usize {
    1024
}
fn default_pointer_sigma() -> f64 {
    0.5
}
fn two() -> f64 {
    2.0
}
fn six() -> f64 {
    6.0
}
fn default_runs() -> usize {
    10_000
}
fn default_repeat_trials() -> usize {
    1000
}

impl Default for MeasurementSection {
    fn default() -> Self {
        MeasurementSection {
            pointer_points: default_pointer_points(),
            pointer_sigma: default_pointer_sigma(),
            coupling_g: 1.0,
            duration_t: 2.0,
            separation_factor: 6.0,
            n_runs: default_runs(),
            repeat_trials: default_repeat_trials(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    /// Step for the energy-conservation propagation; the drift scales as
    /// `(omega dt)^2`, so the default holds the 1e-8 budget with margin.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default = "default_trajectories")]
    pub n_trajectories: usize,
    /// Harmonic trap frequency for the coherent-state checks.
    #[serde(default = "one")]
    pub omega: f64,
}

fn default_dt() -> f64 {
    2e-5
}
fn default_steps() -> usize {
    1000
}
fn default_trajectories() -> usize {
    100_000
}

impl Default for DynamicsSection {
    fn default() -> Self {
        DynamicsSection {
            dt: default_dt(),
            n_steps: default_steps(),
            n_trajectories: default_trajectories(),
            omega: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepIndependenceSection {
    pub state_a: StateSpec,
    pub state_b: StateSpec,
    pub q_a: f64,
    pub q_b: f64,
}

impl Default for PrepIndependenceSection {
    fn default() -> Self {
        PrepIndependenceSection {
            state_a: StateSpec::gaussian(0.0, 1.0, 0.0),
            state_b: StateSpec::gaussian(0.5, 1.5, 0.0),
            q_a: 1.0,
            q_b: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalLimitSection {
    #[serde(default = "default_hbar_values")]
    pub hbar_values: Vec<f64>,
    #[serde(default = "default_scan_state")]
    pub state: StateSpec,
}

fn default_hbar_values() -> Vec<f64> {
    vec![1.0, 0.5, 0.25, 0.125, 0.0625]
}

fn default_scan_state() -> StateSpec {
    StateSpec::gaussian(0.0, 1.0, 1.0)
}

impl Default for ClassicalLimitSection {
    fn default() -> Self {
        ClassicalLimitSection {
            hbar_values: default_hbar_values(),
            state: default_scan_state(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Root seed for every stochastic step; runs are pure functions of the
    /// config, so the seed is mandatory (no wall-clock defaults).
    pub seed: u64,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    /// Random-state count for the suite-style experiments.
    #[serde(default = "default_n_states")]
    pub n_states: usize,
    /// Destination for reports and artifacts; environmental, so it is left
    /// out of the report's config echo.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub units: UnitsSection,
    #[serde(default = "default_xi")]
    pub xi: XiKind,
    /// Optional state override for the single-state experiments.
    #[serde(default)]
    pub state: Option<StateSpec>,
    #[serde(default)]
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub prep_independence: PrepIndependenceSection,
    #[serde(default)]
    pub classical_limit: ClassicalLimitSection,
}

fn default_xi() -> XiKind {
    XiKind::TwoPoint
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| format!("config schema violation: {e}"))?;
        config.validate()?;
        Ok(config)
    }

    pub fn xi_model(&self) -> XiModel {
        XiModel {
            kind: self.xi.clone(),
            hbar: self.units.hbar,
        }
    }

    /// Semantic checks beyond the schema, reported with their key paths.
    pub fn validate(&self) -> Result<(), String> {
        let mut problems = Vec::new();
        if self.grid.n_points < 8 {
            problems.push(format!("grid.n_points: must be at least 8, got {}", self.grid.n_points));
        }
        if !(self.grid.extent > 0.0) {
            problems.push(format!("grid.extent: must be positive, got {}", self.grid.extent));
        }
        if !(self.units.hbar > 0.0) {
            problems.push(format!("units.hbar: must be positive, got {}", self.units.hbar));
        }
        if !(self.units.mass > 0.0) {
            problems.push(format!("units.mass: must be positive, got {}", self.units.mass));
        }
        if self.n_samples == 0 {
            problems.push("n_samples: must be at least 1".into());
        }
        if self.experiment == Experiment::Measurement {
            let m = &self.measurement;
            if m.separation_factor < 6.0 {
                problems.push(format!(
                    "measurement.separation_factor: must be at least 6, got {}",
                    m.separation_factor
                ));
            }
            if !(m.pointer_sigma > 0.0) {
                problems.push(format!(
                    "measurement.pointer_sigma: must be positive, got {}",
                    m.pointer_sigma
                ));
            }
            if m.n_runs == 0 {
                problems.push("measurement.n_runs: must be at least 1".into());
            }
        }
        if self.experiment == Experiment::ClassicalLimit {
            if self.classical_limit.hbar_values.len() < 2 {
                problems.push("classical_limit.hbar_values: need at least 2 values".into());
            }
            if self.classical_limit.hbar_values.iter().any(|&h| !(h > 0.0)) {
                problems.push("classical_limit.hbar_values: all values must be positive".into());
            }
        }
        if self.experiment == Experiment::PrepIndependence && self.xi != XiKind::TwoPoint {
            problems.push("xi.kind: prep_independence requires the two_point model".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("\n"))
        }
    }
}
