//! The sub-quantum noise law: a distribution for the global random variable
//! with mean zero and variance `hbar^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::IndexRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XiKind {
    /// `xi = +/- hbar` with equal weight. The default: matches both required
    /// moments exactly and keeps discrete diagnostics exact.
    TwoPoint,
    /// Normal with standard deviation `hbar`.
    Gaussian,
    /// Arbitrary atoms and weights; moments are validated on construction.
    CustomDiscrete { atoms: Vec<f64>, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiModel {
    pub kind: XiKind,
    pub hbar: f64,
}

impl XiModel {
    pub fn two_point(hbar: f64) -> Self {
        XiModel {
            kind: XiKind::TwoPoint,
            hbar,
        }
    }

    pub fn gaussian(hbar: f64) -> Self {
        XiModel {
            kind: XiKind::Gaussian,
            hbar,
        }
    }

    pub fn custom_discrete(atoms: Vec<f64>, weights: Vec<f64>, hbar: f64) -> Result<Self> {
        if atoms.len() != weights.len() || atoms.is_empty() {
            return Err(Error::BadXiMoments(
                "atoms and weights must be non-empty and equal-length".into(),
            ));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::BadXiMoments("weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::BadXiMoments("weights must not all vanish".into()));
        }
        let mean: f64 = atoms.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>() / total;
        let second: f64 = atoms.iter().zip(&weights).map(|(a, w)| a * a * w).sum::<f64>() / total;
        if mean.abs() > 1e-14 * hbar {
            return Err(Error::BadXiMoments(format!("mean must be 0, got {mean:.3e}")));
        }
        if (second - hbar * hbar).abs() > 1e-12 * hbar * hbar {
            return Err(Error::BadXiMoments(format!(
                "variance must be hbar^2 = {:.6e}, got {:.6e}",
                hbar * hbar,
                second
            )));
        }
        Ok(XiModel {
            kind: XiKind::CustomDiscrete { atoms, weights },
            hbar,
        })
    }

    /// Same law with the noise strength rescaled to `hbar_eff`.
    pub fn with_hbar(&self, hbar_eff: f64) -> Self {
        let scale = hbar_eff / self.hbar;
        let kind = match &self.kind {
            XiKind::TwoPoint => XiKind::TwoPoint,
            XiKind::Gaussian => XiKind::Gaussian,
            XiKind::CustomDiscrete { atoms, weights } => XiKind::CustomDiscrete {
                atoms: atoms.iter().map(|a| a * scale).collect(),
                weights: weights.clone(),
            },
        };
        XiModel {
            kind,
            hbar: hbar_eff,
        }
    }

    pub fn mean(&self) -> f64 {
        0.0
    }

    pub fn variance(&self) -> f64 {
        self.hbar * self.hbar
    }

    pub fn sample(&self, rng: &mut IndexRng) -> f64 {
        match &self.kind {
            XiKind::TwoPoint => {
                if rng.uniform() < 0.5 {
                    self.hbar
                } else {
                    -self.hbar
                }
            }
            XiKind::Gaussian => self.hbar * rng.standard_normal(),
            XiKind::CustomDiscrete { atoms, weights } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.uniform() * total;
                for (a, w) in atoms.iter().zip(weights) {
                    if u < *w {
                        return *a;
                    }
                    u -= w;
                }
                *atoms.last().unwrap()
            }
        }
    }

    /// Atoms and probabilities when the law is discrete.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            XiKind::TwoPoint => Some(vec![(self.hbar, 0.5), (-self.hbar, 0.5)]),
            XiKind::Gaussian => None,
            XiKind::CustomDiscrete { atoms, weights } => {
                let total: f64 = weights.iter().sum();
                Some(
                    atoms
                        .iter()
                        .zip(weights)
                        .map(|(a, w)| (*a, w / total))
                        .collect(),
                )
            }
        }
    }
}
