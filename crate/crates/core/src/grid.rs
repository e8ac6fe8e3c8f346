//! Uniform spatial lattices underlying every field in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the lattice treats its ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// The last point wraps onto the first; spectral calculus applies.
    Periodic,
    /// A finite window; fields are assumed negligible at the ends.
    Truncated,
}

/// Uniform 1D lattice: `n_points` sites starting at `origin`, spaced `spacing` apart.
///
/// The total extent is `n_points * spacing`; on a periodic grid the site after
/// the last one is the origin again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n_points: usize,
    spacing: f64,
    origin: f64,
    boundary: Boundary,
}

impl Grid1D {
    pub fn new(n_points: usize, spacing: f64, origin: f64, boundary: Boundary) -> Result<Self> {
        if n_points < 8 {
            return Err(Error::GridTooSmall(n_points));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::NonPositiveSpacing(spacing));
        }
        Ok(Grid1D {
            n_points,
            spacing,
            origin,
            boundary,
        })
    }

    /// Periodic grid covering `[q_min, q_min + extent)`.
    pub fn periodic(n_points: usize, q_min: f64, extent: f64) -> Result<Self> {
        Self::new(n_points, extent / n_points as f64, q_min, Boundary::Periodic)
    }

    /// Truncated grid covering `[q_min, q_min + extent)`.
    pub fn truncated(n_points: usize, q_min: f64, extent: f64) -> Result<Self> {
        Self::new(n_points, extent / n_points as f64, q_min, Boundary::Truncated)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn extent(&self) -> f64 {
        self.n_points as f64 * self.spacing
    }

    pub fn point(&self, index: usize) -> f64 {
        self.origin + index as f64 * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.point(j)).collect()
    }

    /// Snap a target momentum onto the nearest lattice mode `2*pi*hbar*n/L`.
    ///
    /// Plane-wave phases only close around a periodic grid at these values.
    pub fn snap_momentum(&self, p: f64, hbar: f64) -> f64 {
        let unit = 2.0 * std::f64::consts::PI * hbar / self.extent();
        (p / unit).round() * unit
    }

    /// Cell index and in-cell fraction for linear interpolation at `q`.
    ///
    /// On periodic grids the coordinate wraps; on truncated grids a query
    /// outside the extent is an error. The returned index is the left edge of
    /// the cell, with the right edge at `(index + 1) % n` for periodic grids.
    pub fn locate(&self, q: f64) -> Result<(usize, f64)> {
        let rel = (q - self.origin) / self.spacing;
        let rel = match self.boundary {
            Boundary::Periodic => rel.rem_euclid(self.n_points as f64),
            Boundary::Truncated => {
                if rel < 0.0 || rel >= self.n_points as f64 {
                    return Err(Error::OutOfDomain {
                        q,
                        min: self.origin,
                        max: self.origin + self.extent(),
                    });
                }
                rel
            }
        };
        let cell = (rel.floor() as usize).min(self.n_points - 1);
        Ok((cell, rel - cell as f64))
    }

    /// Index of the cell's right neighbor, respecting the boundary mode.
    pub fn right_neighbor(&self, index: usize) -> usize {
        match self.boundary {
            Boundary::Periodic => (index + 1) % self.n_points,
            Boundary::Truncated => (index + 1).min(self.n_points - 1),
        }
    }
}

/// Two independent 1D axes forming a configuration plane `(q_a, q_b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub grid_a: Grid1D,
    pub grid_b: Grid1D,
}

impl Grid2D {
    pub fn new(grid_a: Grid1D, grid_b: Grid1D) -> Self {
        Grid2D { grid_a, grid_b }
    }

    pub fn len(&self) -> usize {
        self.grid_a.len() * self.grid_b.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major flat index for site `(ia, ib)`.
    pub fn flat(&self, ia: usize, ib: usize) -> usize {
        ia * self.grid_b.len() + ib
    }
}
