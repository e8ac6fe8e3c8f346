//! Run reports: per-check records plus a config echo, serialized as JSON
//! with a canonical check order so reruns are byte-identical.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// A check passes when `|value - expected| <= tolerance`.
    pub fn new(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (value - expected).abs() <= tolerance;
        CheckRecord {
            name: name.into(),
            value,
            expected,
            tolerance,
            pass,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub experiment: &'static str,
    pub config: ExperimentConfig,
    pub n_checks: usize,
    pub n_passed: usize,
    pub checks: Vec<CheckRecord>,
    pub versions: BTreeMap<&'static str, &'static str>,
}

impl RunReport {
    pub fn new(config: ExperimentConfig, mut checks: Vec<CheckRecord>) -> Self {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        let n_checks = checks.len();
        let n_passed = checks.iter().filter(|c| c.pass).count();
        let mut versions = BTreeMap::new();
        versions.insert("erps-core", erps_core_version());
        versions.insert("erps-cli", env!("CARGO_PKG_VERSION"));
        RunReport {
            experiment: config.experiment.name(),
            config,
            n_checks,
            n_passed,
            checks,
            versions,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.n_passed == self.n_checks
    }

    pub fn write_json(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn print_summary(&self) {
        for check in &self.checks {
            let status = if check.pass { "pass" } else { "FAIL" };
            println!(
                "  [{status}] {}: value {:.6e}, expected {:.6e} +- {:.1e}",
                check.name, check.value, check.expected, check.tolerance
            );
        }
        println!(
            "{}: {}/{} checks passed",
            self.experiment, self.n_passed, self.n_checks
        );
    }
}

fn erps_core_version() -> &'static str {
    // The workspace pins both crates to the same version.
    env!("CARGO_PKG_VERSION")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_are_sorted_and_counted() {
        let cfg = ExperimentConfig::from_toml("experiment = \"born_rule\"\nseed = 1\n").unwrap();
        let report = RunReport::new(
            cfg,
            vec![
                CheckRecord::new("b", 1.0, 1.0, 0.0),
                CheckRecord::new("a", 5.0, 1.0, 0.1),
            ],
        );
        assert_eq!(report.checks[0].name, "a");
        assert!(!report.checks[0].pass);
        assert!(report.checks[1].pass);
        assert_eq!(report.n_passed, 1);
        assert!(!report.all_passed());
    }
}
