//! Numerical laboratory for an epistemically restricted phase-space model of
//! quantum mechanics.
//!
//! The model postulates that the momentum value at position `q`, for a noise
//! realization `xi`, is `p = dS/dq + (xi/2) d(ln rho)/dq`, with the noise
//! carrying mean zero and variance `hbar^2`. The crate builds wavefunctions
//! on uniform grids, decomposes them into the `(rho, S)` fields above,
//! samples phase-space ensembles from the restricted distribution, and checks
//! the model's statistics against independent spectral quantum computations:
//! expectation equivalence, the Born rule, Fisher-information/MS-error
//! trade-offs, Cramer-Rao saturation, uncertainty relations, superposition
//! interference, unitary dynamics with Bohmian trajectories, and an
//! impulsive two-particle measurement protocol with collapse.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod estimation;
pub mod families;
pub mod fourier;
pub mod grid;
pub mod measurement;
pub mod observable;
pub mod polar;
pub mod rng;
pub mod states;
pub mod stats;
pub mod superposition;
pub mod wavefunction;
pub mod xi;

pub use error::{Error, Result};
pub use grid::{Boundary, Grid1D, Grid2D};
pub use observable::{Moment, Observable};
pub use polar::{polar_decompose, DiffScheme, PolarFields};
pub use states::StateSpec;
pub use wavefunction::{WaveFunction, WaveFunction2D};
pub use xi::{XiKind, XiModel};
