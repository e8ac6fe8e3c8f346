//! Small statistics helpers shared by the sampling modules and tests.

use crate::grid::{Boundary, Grid1D};

/// Sample mean and standard error of the mean.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n > 0, "mean of empty slice");
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

/// Histogram of `samples` over `[lo, hi)` with equal bins, returned as counts.
pub fn histogram(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    let width = (hi - lo) / bins as f64;
    for &s in samples {
        if s >= lo && s < hi {
            let b = ((s - lo) / width) as usize;
            counts[b.min(bins - 1)] += 1;
        }
    }
    counts
}

/// Total-variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Total-variation distance between an empirical sample and a grid density,
/// binned into whole numbers of grid cells so the two discretizations agree.
///
/// The expected bin mass is the trapezoid mass of its cells, matching the
/// piecewise-linear law the inverse-CDF sampler draws from.
pub fn grid_tv_distance(samples: &[f64], rho: &[f64], grid: &Grid1D, cells_per_bin: usize) -> f64 {
    let n = grid.len();
    assert_eq!(rho.len(), n);
    let n_cells = match grid.boundary() {
        Boundary::Periodic => n,
        Boundary::Truncated => n - 1,
    };
    assert!(
        n_cells % cells_per_bin == 0,
        "cells_per_bin must divide the cell count"
    );
    let n_bins = n_cells / cells_per_bin;

    let mut expected = vec![0.0; n_bins];
    for cell in 0..n_cells {
        let right = grid.right_neighbor(cell);
        expected[cell / cells_per_bin] += 0.5 * (rho[cell] + rho[right]) * grid.spacing();
    }
    let total: f64 = expected.iter().sum();
    for e in &mut expected {
        *e /= total;
    }

    let mut counts = vec![0u64; n_bins];
    let mut kept = 0u64;
    let bin_width = cells_per_bin as f64 * grid.spacing();
    for &s in samples {
        let rel = (s - grid.origin()) / bin_width;
        if rel >= 0.0 && rel < n_bins as f64 {
            counts[rel as usize] += 1;
            kept += 1;
        }
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / kept as f64).collect();
    total_variation(&empirical, &expected)
}

/// Kolmogorov-Smirnov statistic of samples against the uniform law on `[lo, hi)`.
pub fn ks_statistic_uniform(samples: &[f64], lo: f64, hi: f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        let lower = i as f64 / n;
        let upper = (i as f64 + 1.0) / n;
        d = d.max((f - lower).abs()).max((upper - f).abs());
    }
    d
}

/// Pearson chi-square statistic of observed counts against expected probabilities.
pub fn chi_square(observed: &[u64], expected_probs: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected_probs.len());
    let n: u64 = observed.iter().sum();
    observed
        .iter()
        .zip(expected_probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e) * (o as f64 - e) / e
        })
        .sum()
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `ln y` against `ln x`; inputs must be positive.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}
