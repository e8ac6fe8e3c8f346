//! Declarative state constructors.
//!
//! A `StateSpec` is the small description language the rest of the crate (and
//! the experiment runner) uses to name preparations: plane waves, Gaussian
//! packets, standing cosines, and two-branch superpositions thereof.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid1D};
use crate::wavefunction::{WaveFunction, WaveFunction2D};

fn default_weight_re() -> f64 {
    1.0
}

/// One branch of a superposition with its complex weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedBranch {
    #[serde(default = "default_weight_re")]
    pub weight_re: f64,
    #[serde(default)]
    pub weight_im: f64,
    pub state: StateSpec,
}

impl WeightedBranch {
    pub fn new(weight: Complex64, state: StateSpec) -> Self {
        WeightedBranch {
            weight_re: weight.re,
            weight_im: weight.im,
            state,
        }
    }

    pub fn weight(&self) -> Complex64 {
        Complex64::new(self.weight_re, self.weight_im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    /// `exp(i p0 q / hbar)`; `p0` snaps to the nearest lattice momentum on
    /// periodic grids so the phase closes around the domain.
    PlaneWave { p0: f64 },
    /// Minimum-uncertainty packet centered at `q0` with width `sigma_q` and
    /// mean momentum `p0`.
    Gaussian { q0: f64, sigma_q: f64, p0: f64 },
    /// Standing wave `cos(p0 q / hbar + phase)`; `p0` snaps like a plane wave.
    Cosine {
        p0: f64,
        #[serde(default)]
        phase: f64,
    },
    Superposition {
        branch_1: Box<WeightedBranch>,
        branch_2: Box<WeightedBranch>,
    },
}

impl StateSpec {
    pub fn plane_wave(p0: f64) -> Self {
        StateSpec::PlaneWave { p0 }
    }

    pub fn gaussian(q0: f64, sigma_q: f64, p0: f64) -> Self {
        StateSpec::Gaussian { q0, sigma_q, p0 }
    }

    pub fn cosine(p0: f64) -> Self {
        StateSpec::Cosine { p0, phase: 0.0 }
    }

    pub fn superposition(w1: Complex64, s1: StateSpec, w2: Complex64, s2: StateSpec) -> Self {
        StateSpec::Superposition {
            branch_1: Box::new(WeightedBranch::new(w1, s1)),
            branch_2: Box::new(WeightedBranch::new(w2, s2)),
        }
    }

    /// Raw (unnormalized) amplitudes on the grid.
    fn raw_amplitudes(&self, grid: &Grid1D, hbar: f64) -> Result<Vec<Complex64>> {
        let snap = |p: f64| match grid.boundary() {
            Boundary::Periodic => grid.snap_momentum(p, hbar),
            Boundary::Truncated => p,
        };
        match self {
            StateSpec::PlaneWave { p0 } => {
                let k = snap(*p0) / hbar;
                Ok(grid
                    .points()
                    .iter()
                    .map(|&q| Complex64::from_polar(1.0, k * q))
                    .collect())
            }
            StateSpec::Gaussian { q0, sigma_q, p0 } => {
                if !(*sigma_q > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "gaussian width must be positive, got {sigma_q}"
                    )));
                }
                let k = p0 / hbar;
                Ok(grid
                    .points()
                    .iter()
                    .map(|&q| {
                        let d = q - q0;
                        let envelope = (-d * d / (4.0 * sigma_q * sigma_q)).exp();
                        Complex64::from_polar(envelope, k * q)
                    })
                    .collect())
            }
            StateSpec::Cosine { p0, phase } => {
                let k = snap(*p0) / hbar;
                Ok(grid
                    .points()
                    .iter()
                    .map(|&q| Complex64::new((k * q + phase).cos(), 0.0))
                    .collect())
            }
            StateSpec::Superposition { branch_1, branch_2 } => {
                let w1 = branch_1.weight();
                let w2 = branch_2.weight();
                if w1.norm() == 0.0 && w2.norm() == 0.0 {
                    return Err(Error::InvalidParameter(
                        "superposition weights must not both vanish".into(),
                    ));
                }
                let a1 = branch_1.state.normalized_branch(grid, hbar)?;
                let a2 = branch_2.state.normalized_branch(grid, hbar)?;
                Ok(a1
                    .iter()
                    .zip(&a2)
                    .map(|(x, y)| w1 * x + w2 * y)
                    .collect())
            }
        }
    }

    /// Amplitudes of one branch normalized to unit mass, so superposition
    /// weights carry the relative branch masses.
    fn normalized_branch(&self, grid: &Grid1D, hbar: f64) -> Result<Vec<Complex64>> {
        let raw = self.raw_amplitudes(grid, hbar)?;
        let norm = (raw.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.spacing()).sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter("branch has zero norm".into()));
        }
        Ok(raw.into_iter().map(|a| a / norm).collect())
    }

    /// Build the normalized wavefunction on `grid`.
    pub fn build(&self, grid: &Grid1D, hbar: f64) -> Result<WaveFunction> {
        let raw = self.raw_amplitudes(grid, hbar)?;
        WaveFunction::normalized(raw, grid.clone(), hbar)
    }

    /// Normalized branch states and weights when `self` is a superposition.
    pub fn branches(&self, grid: &Grid1D, hbar: f64) -> Result<Option<[(Complex64, WaveFunction); 2]>> {
        match self {
            StateSpec::Superposition { branch_1, branch_2 } => {
                let b1 = WaveFunction::new(
                    branch_1.state.normalized_branch(grid, hbar)?,
                    grid.clone(),
                    hbar,
                )?;
                let b2 = WaveFunction::new(
                    branch_2.state.normalized_branch(grid, hbar)?,
                    grid.clone(),
                    hbar,
                )?;
                Ok(Some([(branch_1.weight(), b1), (branch_2.weight(), b2)]))
            }
            _ => Ok(None),
        }
    }

    /// Short identifier used to tag ensembles and reports.
    pub fn label(&self) -> String {
        match self {
            StateSpec::PlaneWave { p0 } => format!("plane_wave(p0={p0})"),
            StateSpec::Gaussian { q0, sigma_q, p0 } => {
                format!("gaussian(q0={q0},sigma_q={sigma_q},p0={p0})")
            }
            StateSpec::Cosine { p0, phase } => format!("cosine(p0={p0},phase={phase})"),
            StateSpec::Superposition { branch_1, branch_2 } => format!(
                "superposition({}*{} + {}*{})",
                branch_1.weight(),
                branch_1.state.label(),
                branch_2.weight(),
                branch_2.state.label()
            ),
        }
    }
}

/// Product of two 1D specs on a configuration plane.
pub fn build_product(
    spec_a: &StateSpec,
    grid_a: &Grid1D,
    spec_b: &StateSpec,
    grid_b: &Grid1D,
    hbar: f64,
) -> Result<WaveFunction2D> {
    let psi_a = spec_a.build(grid_a, hbar)?;
    let psi_b = spec_b.build(grid_b, hbar)?;
    WaveFunction2D::product(&psi_a, &psi_b)
}
