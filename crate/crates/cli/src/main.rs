//! Experiment runner: declarative configs in, deterministic reports and CSV
//! artifacts out.

// `!(x > 0.0)` is used on purpose in validation: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{Experiment, ExperimentConfig};
use report::RunReport;

#[derive(Parser)]
#[command(name = "erps", version, about = "Epistemic phase-space laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        /// Path to the config file.
        config: PathBuf,
        /// Where to write the report and artifacts (overrides the config).
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Replace the config's seed.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// List the available experiments.
    List,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for experiment in Experiment::all() {
                println!("{:<22} {}", experiment.name(), experiment.description());
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            output_dir,
            seed_override,
        } => run(config, output_dir, seed_override),
    }
}

fn run(config_path: PathBuf, output_dir: Option<PathBuf>, seed_override: Option<u64>) -> ExitCode {
    let text = match std::fs::read_to_string(&config_path) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match ExperimentConfig::from_toml(&text) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: invalid config {}:\n{e}", config_path.display());
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    if let Some(dir) = output_dir {
        cfg.output_dir = Some(dir);
    }
    let out_dir = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(cfg.experiment.name()));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return ExitCode::from(2);
    }

    let start = Instant::now();
    let checks = match experiments::run_experiment(&cfg, &out_dir) {
        Ok(checks) => checks,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let report = RunReport::new(cfg, checks);
    let report_path = out_dir.join("report.json");
    if let Err(e) = report.write_json(&report_path) {
        eprintln!("error: cannot write {}: {e:#}", report_path.display());
        return ExitCode::from(2);
    }
    report.print_summary();
    println!(
        "report: {} ({:.2} s)",
        report_path.display(),
        start.elapsed().as_secs_f64()
    );
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
