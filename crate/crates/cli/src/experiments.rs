//! The nine experiments: each consumes a validated config, writes its
//! artifacts under the output directory, and returns one record per check.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use num_complex::Complex64;

use erps_core::dynamics::{
    average_energy, classical_limit_scan, continuity_residual, integrate_trajectories, propagate,
    propagate_with_snapshots, HamiltonianSpec,
};
use erps_core::ensemble::{
    build_fields, ensemble_ms_error_p, optical_equivalence_check, sample_ensemble,
};
use erps_core::estimation::{
    cramer_rao_momentum_gaussian_check, cramer_rao_position_check, fisher_q, ms_error_p,
    ms_error_q, uncertainty_suite, variance_decomposition, weak_ms_error_p, weak_value_field,
};
use erps_core::families::{perturbed_gaussian, random_smooth_state};
use erps_core::grid::{Grid1D, Grid2D};
use erps_core::measurement::{
    born_statistics, closed_form_entangled, entangling_propagate,
    preparation_independence_diagnostic, readout_and_collapse, repeatability_check,
    MeasurementConfig, XiCoupling,
};
use erps_core::observable::{commutator_expectation, quantum_expectation, quantum_variance, Moment, Observable};
use erps_core::polar::polar_decompose;
use erps_core::states::StateSpec;
use erps_core::stats::grid_tv_distance;
use erps_core::superposition::{
    momentum_field_compatibility, overlap_analysis, superposed_estimate_fields, SuperpositionPair,
};

use crate::config::{Experiment, ExperimentConfig};
use crate::report::CheckRecord;

/// One-sided check: passes when `value <= bound + slack`.
fn at_most(name: impl Into<String>, value: f64, bound: f64, slack: f64) -> CheckRecord {
    CheckRecord {
        name: name.into(),
        value,
        expected: bound,
        tolerance: slack,
        pass: value <= bound + slack,
    }
}

/// One-sided check: passes when `value >= bound - slack`.
fn at_least(name: impl Into<String>, value: f64, bound: f64, slack: f64) -> CheckRecord {
    CheckRecord {
        name: name.into(),
        value,
        expected: bound,
        tolerance: slack,
        pass: value >= bound - slack,
    }
}

fn csv_writer(out_dir: &Path, file: &str) -> anyhow::Result<BufWriter<File>> {
    let path = out_dir.join(file);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<Vec<CheckRecord>> {
    match cfg.experiment {
        Experiment::OpticalEquivalence => optical_equivalence(cfg, out_dir),
        Experiment::BornRule => born_rule(cfg, out_dir),
        Experiment::UncertaintySuite => uncertainty(cfg, out_dir),
        Experiment::CramerRao => cramer_rao(cfg, out_dir),
        Experiment::Superposition => superposition(cfg, out_dir),
        Experiment::Dynamics => dynamics(cfg, out_dir),
        Experiment::Measurement => measurement(cfg, out_dir),
        Experiment::PrepIndependence => prep_independence(cfg, out_dir),
        Experiment::ClassicalLimit => classical_limit(cfg, out_dir),
    }
}

fn battery_states(cfg: &ExperimentConfig, grid: &Grid1D) -> Vec<(String, StateSpec)> {
    if let Some(state) = &cfg.state {
        return vec![("configured_state".into(), state.clone())];
    }
    let p0 = grid.snap_momentum(1.0, cfg.units.hbar);
    vec![
        ("plane_wave".into(), StateSpec::plane_wave(p0)),
        ("gaussian".into(), StateSpec::gaussian(0.0, 1.0, 0.8)),
        ("cosine".into(), StateSpec::cosine(p0)),
        (
            "two_gaussian_superposition".into(),
            StateSpec::superposition(
                Complex64::new(1.0, 0.0),
                StateSpec::gaussian(-1.5, 1.0, 0.5),
                Complex64::new(0.7, 0.3),
                StateSpec::gaussian(1.5, 1.2, -0.3),
            ),
        ),
    ]
}

fn battery_observables(grid: &Grid1D) -> Vec<(&'static str, Observable)> {
    vec![
        ("q", Observable::position(grid)),
        ("q^2", Observable::position_squared(grid)),
        ("p", Observable::momentum(grid)),
        ("p^2", Observable::momentum_squared(grid)),
        ("sym_qp", Observable::symmetrized_position_momentum(grid)),
        ("p_q2_p", Observable::momentum_position_squared_momentum(grid)),
    ]
}

fn optical_equivalence(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<Vec<CheckRecord>> {
    let grid = cfg.grid.build()?;
    let xi = cfg.xi_model();
    let mut checks = Vec::new();
    let mut csv = csv_writer(out_dir, "equivalence.csv")?;
    writeln!(csv, "state,observable,mc_mean,std_error,quantum_value,z_score")?;
    for (si, (state_name, spec)) in battery_states(cfg, &grid).iter().enumerate() {
        for (oi, (obs_name, obs)) in battery_observables(&grid).iter().enumerate() {
            let seed = cfg.seed ^ ((si * 16 + oi) as u64);
            let report = optical_equivalence_check(
                spec,
                &grid,
                cfg.units.hbar,
                obs,
                &xi,
                cfg.n_samples,
                seed,
            )?;
            writeln!(
                csv,
                "{state_name},{obs_name},{:.17e},{:.17e},{:.17e},{:.6}",
                report.mc_mean, report.std_error, report.quantum_value, report.z_score
            )?;
            checks.push(at_most(
                format!("equivalence/{state_name}/{obs_name}/z_score"),
                report.z_score,
                4.0,
                0.0,
            ));
        }
    }
    Ok(checks)
}

fn born_rule(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<Vec<CheckRecord>> {
    let grid = cfg.grid.build()?;
    let hbar = cfg.units.hbar;
    let xi = cfg.xi_model();
    let states: Vec<(String, StateSpec)> = if let Some(state) = &cfg.state {
        vec![("configured_state".into(), state.clone())]
    } else {
        let p0 = grid.snap_momentum(1.0, hbar);
        vec![
            ("gaussian".into(), StateSpec::gaussian(0.0, 1.0, 0.0)),
            ("cosine".into(), StateSpec::cosine(p0)),
        ]
    };
    let mut checks = Vec::new();
    for (name, spec) in &states {
        let (psi, fields) = build_fields(spec, &grid, hbar)?;
        let ens = sample_ensemble(&fields, &xi, cfg.n_samples, cfg.seed, name.clone())?;
        let tv = grid_tv_distance(&ens.positions(), &psi.density(), &grid, 16);
        checks.push(at_most(format!("born/{name}/tv_distance"), tv, 0.01, 0.0));

        let mut csv = csv_writer(out_dir, &format!("born_{name}.csv"))?;
        writeln!(csv, "q,rho")?;
        for (j, r) in psi.density().iter().enumerate() {
            writeln!(csv, "{:.17e},{:.17e}", grid.point(j), r)?;
        }
    }
    Ok(checks)
}

fn uncertainty(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<Vec<CheckRecord>> {
    let grid = cfg.grid.build()?;
    let hbar = cfg.units.hbar;
    let bound = 0.25 * hbar * hbar;
    let mut min_ms_product = f64::INFINITY;
    let mut min_var_product = f64::INFINITY;
    let mut max_robertson_violation = f64::NEG_INFINITY;
    let mut max_decomposition_residual = 0.0_f64;
    let mut max_commutator_dev = 0.0_f64;
    let mut max_weak_field_dev = 0.0_f64;
    let mut max_weak_ms_dev = 0.0_f64;

    let mut csv = csv_writer(out_dir, "uncertainty.csv")?;
    writeln!(csv, "state_seed,ms_error_p,ms_error_q,product_pq,var_p,var_q,hk_product,robertson_rhs")?;
    for i in 0..cfg.n_states {
        let seed = cfg.seed.wrapping_add(i as u64);
        let psi = random_smooth_state(&grid, hbar, seed)?;
        let report = uncertainty_suite(&psi)?;
        writeln!(
            csv,
            "{seed},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            report.ms_error_p,
            report.ms_error_q,
            report.product_pq,
            report.var_p,
            report.var_q,
            report.hk_product,
            report.robertson_rhs
        )?;
        min_ms_product = min_ms_product.min(report.product_pq);
        min_var_product = min_var_product.min(report.hk_product);
        max_robertson_violation =
            max_robertson_violation.max(report.robertson_rhs - report.product_pq);

        if i < 100 {
            let d = variance_decomposition(&psi)?;
            let residual =
                (d.var_p - (d.ms_error_p + d.dispersion_p)).abs() / d.var_p.abs().max(1e-30);
            max_decomposition_residual = max_decomposition_residual.max(residual);

            let c = commutator_expectation(&psi)?;
            max_commutator_dev =
                max_commutator_dev.max((c - Complex64::new(0.0, hbar)).norm() / hbar);

            let fields = polar_decompose(&psi, None)?;
            let weak = weak_value_field(&psi)?;
            for j in 0..grid.len() {
                if weak.node_mask[j] || fields.rho()[j] < 1e-7 {
                    continue;
                }
                let w = weak.values[j];
                max_weak_field_dev = max_weak_field_dev
                    .max((w.re - fields.grad_s()[j]).abs())
                    .max((w.im + 0.5 * hbar * fields.grad_log_rho()[j]).abs());
            }
            let rel = (weak_ms_error_p(&psi)? - ms_error_p(&fields)).abs()
                / ms_error_p(&fields).abs().max(1e-30);
            max_weak_ms_dev = max_weak_ms_dev.max(rel);
        }
    }

    Ok(vec![
        at_least("uncertainty/min_ms_error_product", min_ms_product, bound, 1e-8),
        at_least("uncertainty/min_variance_product", min_var_product, bound, 1e-8),
        at_most(
            "uncertainty/max_robertson_violation",
            max_robertson_violation,
            0.0,
            1e-8,
        ),
        at_most(
            "variance_decomposition/max_relative_residual",
            max_decomposition_residual,
            0.0,
            1e-8,
        ),
        at_most("commutator/max_relative_deviation", max_commutator_dev, 0.0, 1e-8),
        at_most("weak_value/max_field_deviation", max_weak_field_dev, 0.0, 1e-8),
        at_most("weak_value/max_ms_error_deviation", max_weak_ms_dev, 0.0, 1e-8),
    ])
}

fn cramer_rao(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<Vec<CheckRecord>> {
    let grid = cfg.grid.build()?;
    let hbar = cfg.units.hbar;
    let xi = cfg.xi_model();
    let mut checks = Vec::new();

    // Fisher identity across random states.
    let mut max_identity_dev = 0.0_f64;
    for i in 0..100u64 {
        let psi = random_smooth_state(&grid, hbar, cfg.seed.wrapping_add(i))?;
        let fields = polar_decompose(&psi, None)?;
        let lhs = ms_error_p(&fields);
        let rhs = 0.25 * hbar * hbar * fisher_q(&fields);
        max_identity_dev = max_identity_dev.max((lhs - rhs).abs() / rhs.abs().max(1e-30));
    }
    checks.push(at_most(
        "fisher_identity/max_relative_deviation",
        max_identity_dev,
        0.0,
        1e-12,
    ));

    // Monte-Carlo momentum MS error against the quadrature.
    let p0 = grid.snap_momentum(1.0, hbar);
    let mut max_z = 0.0_f64;
    for (name, spec) in [
        ("gaussian", StateSpec::gaussian(0.0, 1.0, 0.5)),
        ("cosine", StateSpec::cosine(p0)),
    ] {
        let (_, fields) = build_fields(&spec, &grid, hbar)?;
        let ens = sample_ensemble(&fields, &xi, cfg.n_samples, cfg.seed ^ 0xF155, name)?;
        let (mc, se) = ensemble_ms_error_p(&ens, &fields)?;
        let quad = ms_error_p(&fields);
        max_z = max_z.max((mc - quad).abs() / se);
    }
    checks.push(at_most("ms_error_mc/max_z_score", max_z, 4.0, 0.0));

    // Gaussian saturation of the position bound, perturbed families above it.
    let mut max_product_dev = 0.0_f64;
    for sigma in [0.7, 1.0, 1.6] {
        let (_, fields) = build_fields(&StateSpec::gaussian(0.0, sigma, 0.4), &grid, hbar)?;
        let ep2 = ms_error_p(&fields);
        let (eq2, _) = ms_error_q(&fields);
        max_product_dev = max_product_dev
            .max((ep2 * eq2 - 0.25 * hbar * hbar).abs() / (0.25 * hbar * hbar));
    }
    checks.push(at_most(
        "gaussian_saturation/max_relative_deviation",
        max_product_dev,
        0.0,
        1e-6,
    ));
    let mut min_excess = f64::INFINITY;
    for seed in [3u64, 11, 29] {
        for delta in [0.05, 0.1] {
            let psi = perturbed_gaussian(&grid, hbar, 1.0, delta, seed)?;
            let fields = polar_decompose(&psi, None)?;
            let report = cramer_rao_position_check(&fields)?;
            min_excess = min_excess.min(report.ratio - 1.0);
        }
    }
    checks.push(at_least(
        "gaussian_saturation/min_perturbed_excess",
        min_excess,
        1e-9,
        0.0,
    ));

    // Per-noise-value momentum bound over the (sigma, xi) grid.
    let mut csv = csv_writer(out_dir, "cramer_rao.csv")?;
    writeln!(csv, "sigma_q,xi,per_xi_ms,inv_fisher_p,ratio")?;
    let mut max_ratio_dev = 0.0_f64;
    for sigma in [0.5, 0.75, 1.0, 1.5, 2.0] {
        for xi_scale in [0.25, 0.5, 1.0, 1.5, 2.0] {
            let xi_value = xi_scale * hbar;
            let report = cramer_rao_momentum_gaussian_check(sigma, xi_value, hbar)?;
            writeln!(
                csv,
                "{sigma},{xi_value},{:.17e},{:.17e},{:.17e}",
                report.per_xi_ms, report.inv_fisher_p, report.ratio
            )?;
            max_ratio_dev = max_ratio_dev.max((report.ratio - 1.0).abs());
        }
    }
    checks.push(at_most(
        "per_xi_momentum/max_ratio_deviation",
        max_ratio_dev,
        0.0,
        1e-8,
    ));
    Ok(checks)
}

fn superposition(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<Vec<CheckRecord>> {
    let grid = cfg.grid.build()?;
    let hbar = cfg.units.hbar;
    let mut checks = Vec::new();

    // Closed-form fields against direct decomposition on an overlapping pair
    // (or the configured superposition).
    let overlapping = cfg.state.clone().unwrap_or_else(|| {
        StateSpec::superposition(
            Complex64::new(0.8, 0.1),
            StateSpec::gaussian(-1.0, 1.2, 0.6),
            Complex64::new(0.5, -0.3),
            StateSpec::gaussian(1.5, 0.9, -0.4),
        )
    });
    let pair = SuperpositionPair::from_spec(&overlapping, &grid, hbar)?;
    let fields = superposed_estimate_fields(&pair)?;
    let direct = polar_decompose(&pair.combined()?, None)?;
    let peak = direct.rho().iter().cloned().fold(0.0, f64::max);
    let mut worst = 0.0_f64;
    for j in 0..grid.len() {
        if fields.node_mask[j] || direct.node_mask()[j] || direct.rho()[j] < 1e-5 * peak {
            continue;
        }
        let dp = (fields.p_bar[j] - direct.grad_s()[j]).abs() / (1.0 + direct.grad_s()[j].abs());
        let dl = (fields.eps_scale[j] - direct.grad_log_rho()[j]).abs()
            / (1.0 + direct.grad_log_rho()[j].abs());
        worst = worst.max(dp).max(dl);
    }
    checks.push(at_most("closed_form/max_relative_deviation", worst, 0.0, 1e-8));

    let mut csv = csv_writer(out_dir, "superposed_fields.csv")?;
    writeln!(csv, "q,p_bar,eps_scale,masked")?;
    for j in 0..grid.len() {
        writeln!(
            csv,
            "{:.17e},{:.17e},{:.17e},{}",
            grid.point(j),
            fields.p_bar[j],
            fields.eps_scale[j],
            fields.node_mask[j] as u8
        )?;
    }

    // Disjoint supports: additivity and compatibility.
    let disjoint = StateSpec::superposition(
        Complex64::new(1.0, 0.0),
        StateSpec::gaussian(-8.0, 1.0, 0.5),
        Complex64::new(1.0, 0.0),
        StateSpec::gaussian(8.0, 1.0, -0.5),
    );
    let pair = SuperpositionPair::from_spec(&disjoint, &grid, hbar)?;
    let report = overlap_analysis(&pair, None)?;
    let scale = report.branch_ms_errors[0].max(report.branch_ms_errors[1]);
    checks.push(at_most(
        "disjoint/interference_max_abs",
        report.interference_max_abs,
        0.0,
        1e-9,
    ));
    checks.push(at_most(
        "disjoint/additivity_gap_relative",
        report.ms_additivity_gap.abs() / scale,
        0.0,
        1e-6,
    ));
    let compat = momentum_field_compatibility(&pair, hbar)?;
    checks.push(CheckRecord::new(
        "disjoint/fields_compatible",
        compat.compatible as u8 as f64,
        1.0,
        0.0,
    ));

    let mut csv = csv_writer(out_dir, "interference_field.csv")?;
    writeln!(csv, "q,interference")?;
    for (j, v) in report.interference_field.iter().enumerate() {
        writeln!(csv, "{:.17e},{:.17e}", grid.point(j), v)?;
    }
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(out_dir.join("overlap_report.json"), json + "\n")?;

    // Counter-propagating plane waves.
    let p0 = grid.snap_momentum(1.0, hbar);
    let waves = StateSpec::superposition(
        Complex64::new(1.0, 0.0),
        StateSpec::plane_wave(p0),
        Complex64::new(1.0, 0.0),
        StateSpec::plane_wave(-p0),
    );
    let pair = SuperpositionPair::from_spec(&waves, &grid, hbar)?;
    let report = overlap_analysis(&pair, None)?;
    checks.push(at_most(
        "plane_waves/ms_error_relative_deviation",
        (report.ms_error_combined - p0 * p0).abs() / (p0 * p0),
        0.0,
        1e-8,
    ));
    checks.push(at_most(
        "plane_waves/gap_relative_deviation",
        (report.ms_additivity_gap - p0 * p0).abs() / (p0 * p0),
        0.0,
        1e-8,
    ));
    let compat = momentum_field_compatibility(&pair, hbar)?;
    checks.push(CheckRecord::new(
        "plane_waves/fields_incompatible",
        (!compat.compatible) as u8 as f64,
        1.0,
        0.0,
    ));
    Ok(checks)
}

fn dynamics(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<Vec<CheckRecord>> {
    let grid = cfg.grid.build()?;
    let hbar = cfg.units.hbar;
    let mass = cfg.units.mass;
    let d = &cfg.dynamics;
    let mut checks = Vec::new();

    // Unitarity and energy conservation over the configured propagation.
    let omega = d.omega;
    let sigma_c = (hbar / (2.0 * mass * omega)).sqrt();
    let coherent = StateSpec::gaussian(2.0, sigma_c, 0.0).build(&grid, hbar)?;
    let harmonic = HamiltonianSpec::harmonic(&grid, mass, omega)?;
    let e0 = average_energy(&coherent, &harmonic)?;
    let evolved = propagate(&coherent, &harmonic, d.dt, d.n_steps)?;
    let e1 = average_energy(&evolved, &harmonic)?;
    checks.push(at_most(
        "propagation/norm_drift",
        (evolved.norm() - 1.0).abs(),
        0.0,
        1e-12 * d.n_steps as f64,
    ));
    checks.push(at_most(
        "propagation/energy_drift_per_1e3_steps",
        ((e1 - e0) / e0).abs() * 1000.0 / d.n_steps as f64,
        0.0,
        1e-8,
    ));

    // Free-Gaussian spreading against the closed form.
    let sigma = 1.0;
    let free = HamiltonianSpec::free(&grid, mass)?;
    let psi = StateSpec::gaussian(0.0, sigma, 0.0).build(&grid, hbar)?;
    let t = 2.0;
    let spread = propagate(&psi, &free, t / 400.0, 400)?;
    let var = quantum_variance(&spread, Moment::Position)?;
    let expect = sigma * sigma + (hbar * t / (2.0 * mass * sigma)).powi(2);
    checks.push(at_most(
        "free_gaussian/width_deviation",
        (var - expect).abs(),
        0.0,
        1e-6,
    ));

    // Coherent center after a quarter period.
    let quarter = std::f64::consts::FRAC_PI_2 / omega;
    let steps = 4000;
    let coherent_out = propagate(&coherent, &harmonic, quarter / steps as f64, steps)?;
    let center: f64 = coherent_out
        .density()
        .iter()
        .enumerate()
        .map(|(j, r)| grid.point(j) * r)
        .sum::<f64>()
        * grid.spacing();
    checks.push(at_most("coherent/center_deviation", center.abs(), 0.0, 1e-6));

    // Continuity residual refinement ratio.
    let mut l2 = Vec::new();
    for (n_points, dt) in [(grid.len() / 2, 4e-3), (grid.len(), 2e-3)] {
        let g = Grid1D::periodic(n_points, grid.origin(), grid.extent())?;
        let p = StateSpec::gaussian(0.0, 1.0, 0.5).build(&g, hbar)?;
        let h = HamiltonianSpec::free(&g, mass)?;
        let snaps: Vec<_> = propagate_with_snapshots(&p, &h, dt, 4, 1)?
            .into_iter()
            .map(|(_, s)| s)
            .collect();
        l2.push(continuity_residual(&snaps, mass, dt)?.max_l2);
    }
    checks.push(CheckRecord::new(
        "continuity/refinement_ratio",
        l2[0] / l2[1],
        4.0,
        1.0,
    ));

    // Trajectory equivariance, plus artifacts.
    let (traj_dt, traj_steps) = (0.02, 100);
    let bundle = integrate_trajectories(
        &psi,
        &free,
        traj_dt,
        traj_steps,
        d.n_trajectories,
        cfg.seed,
        traj_steps / 10,
    )?;
    let evolved = propagate(&psi, &free, traj_dt, traj_steps)?;
    let tv = grid_tv_distance(&bundle.final_positions(), &evolved.density(), &grid, 16);
    checks.push(at_most("trajectories/equivariance_tv", tv, 0.0, 0.02));

    let mut csv = csv_writer(out_dir, "trajectories.csv")?;
    writeln!(csv, "traj_id,t,q")?;
    for (id, traj) in bundle.positions.iter().take(1000).enumerate() {
        for (t, q) in bundle.times.iter().zip(traj) {
            writeln!(csv, "{id},{t:.12e},{q:.17e}")?;
        }
    }

    let snaps = propagate_with_snapshots(&psi, &free, traj_dt, traj_steps, traj_steps / 5)?;
    let mut csv = csv_writer(out_dir, "snapshots.csv")?;
    writeln!(csv, "t,q,re_psi,im_psi,rho,s_action")?;
    for (t, snap) in &snaps {
        let fields = polar_decompose(snap, None)?;
        for (j, amp) in snap.amplitudes().iter().enumerate() {
            writeln!(
                csv,
                "{t:.12e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                grid.point(j),
                amp.re,
                amp.im,
                fields.rho()[j],
                fields.s_action()[j]
            )?;
        }
    }
    Ok(checks)
}

fn measurement(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<Vec<CheckRecord>> {
    let grid_a = cfg.grid.build()?;
    let m = &cfg.measurement;
    let grid_b = Grid1D::periodic(m.pointer_points, cfg.grid.q_min, cfg.grid.extent)?;
    let hbar = cfg.units.hbar;
    let p0 = grid_a.snap_momentum(2.0, hbar);
    let system = cfg.state.clone().unwrap_or_else(|| StateSpec::cosine(p0));
    let config = MeasurementConfig::new(
        Grid2D::new(grid_a.clone(), grid_b),
        system,
        m.pointer_sigma,
        m.coupling_g,
        m.duration_t,
        m.separation_factor,
        hbar,
    )?;
    let p0 = config.system_momentum()?;
    let mut checks = Vec::new();

    let entangled = entangling_propagate(&config)?;
    let closed = closed_form_entangled(&config)?;
    checks.push(at_most(
        "entanglement/closed_form_deviation",
        entangled.max_deviation_up_to_phase(&closed),
        0.0,
        1e-8,
    ));

    // Full collapses with a run log.
    let mut csv = csv_writer(out_dir, "runs.csv")?;
    writeln!(csv, "run_id,pointer_reading,outcome,post_ms_error_p")?;
    let mut max_outcome_dev = 0.0_f64;
    let mut max_post_ms = 0.0_f64;
    let mut grid_limited_all = true;
    for run in 0..32u64 {
        let record = readout_and_collapse(&entangled, &config, cfg.seed ^ (run + 1))?;
        writeln!(
            csv,
            "{run},{:.17e},{:.17e},{:.17e}",
            record.pointer_reading, record.outcome, record.post_ms_error_p
        )?;
        let post_p = quantum_expectation(
            &record.post_state,
            &Observable::momentum(&config.grid.grid_a),
        )?;
        max_outcome_dev = max_outcome_dev.max((post_p - record.outcome).abs() / p0);
        max_post_ms = max_post_ms.max(record.post_ms_error_p);
        let fields = polar_decompose(&record.post_state, None)?;
        grid_limited_all &= ms_error_q(&fields).1;
    }
    checks.push(at_most(
        "collapse/max_outcome_deviation",
        max_outcome_dev,
        0.0,
        1e-6,
    ));
    checks.push(at_most(
        "collapse/max_post_ms_error",
        max_post_ms,
        0.0,
        1e-4 * p0 * p0,
    ));
    checks.push(CheckRecord::new(
        "collapse/post_position_grid_limited",
        grid_limited_all as u8 as f64,
        1.0,
        0.0,
    ));

    let born = born_statistics(&config, m.n_runs, cfg.seed ^ 0xB0B)?;
    let z = if born.binomial_std_error > 0.0 {
        (born.freq_plus - born.expected_plus).abs() / born.binomial_std_error
    } else if born.freq_plus == born.expected_plus {
        0.0
    } else {
        f64::INFINITY
    };
    checks.push(at_most("born_statistics/z_score", z, 4.0, 0.0));
    let json = serde_json::to_string_pretty(&born)?;
    std::fs::write(out_dir.join("born_statistics.json"), json + "\n")?;

    let record = readout_and_collapse(&entangled, &config, cfg.seed ^ 0xFEED)?;
    let rep = repeatability_check(&record, &config, cfg.seed ^ 0xD00D, m.repeat_trials)?;
    checks.push(CheckRecord::new(
        "repeatability/agreement_fraction",
        rep.agreements as f64 / rep.trials as f64,
        1.0,
        0.0,
    ));
    Ok(checks)
}

fn prep_independence(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<Vec<CheckRecord>> {
    let grid = cfg.grid.build()?;
    let hbar = cfg.units.hbar;
    let xi = cfg.xi_model();
    let p = &cfg.prep_independence;
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for (mode, name) in [(XiCoupling::Global, "global"), (XiCoupling::Separable, "separable")] {
        let report = preparation_independence_diagnostic(
            &p.state_a,
            &grid,
            &p.state_b,
            &grid,
            hbar,
            &xi,
            mode,
            p.q_a,
            p.q_b,
        )?;
        match mode {
            XiCoupling::Global => checks.push(CheckRecord::new(
                format!("prep_independence/{name}/tv_distance"),
                report.tv_distance,
                0.5,
                1e-3,
            )),
            XiCoupling::Separable => checks.push(at_most(
                format!("prep_independence/{name}/tv_distance"),
                report.tv_distance,
                0.0,
                1e-12,
            )),
        }
        reports.push(report);
    }
    let json = serde_json::to_string_pretty(&reports)?;
    std::fs::write(out_dir.join("prep_independence.json"), json + "\n")?;
    Ok(checks)
}

fn classical_limit(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<Vec<CheckRecord>> {
    let grid = cfg.grid.build()?;
    let section = &cfg.classical_limit;
    let report = classical_limit_scan(&section.state, &grid, &section.hbar_values)?;
    let mut csv = csv_writer(out_dir, "classical_limit.csv")?;
    writeln!(csv, "hbar_eff,error_to_estimator_ratio")?;
    for (h, r) in report.hbar_values.iter().zip(&report.ratios) {
        writeln!(csv, "{h:.17e},{r:.17e}")?;
    }
    let slope = report
        .slope
        .ok_or_else(|| anyhow::anyhow!("scan family is exactly classical; no slope to check"))?;
    Ok(vec![CheckRecord::new(
        "classical_limit/log_log_slope",
        slope,
        1.0,
        0.01,
    )])
}
