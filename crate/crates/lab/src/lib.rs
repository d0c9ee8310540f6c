//! Experiment runner: configs in, CSV reports with TOML summaries out.

pub mod config;
pub mod report;
pub mod suites;

use std::path::PathBuf;

use anyhow::{anyhow, Result};

pub use config::ExperimentConfig;
pub use report::{check_report, Bound, CheckOutcome, Measurement, ReportRow, Summary};
pub use suites::{find, SuiteInfo, SUITES};

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub csv: PathBuf,
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
}

/// Runs the rows of a suite without writing anything.
pub fn evaluate(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    cfg.validate()?;
    let suite = find(&cfg.suite).ok_or_else(|| anyhow!("unknown suite '{}'", cfg.suite))?;
    let hash = cfg.hash();
    let rows = (suite.run)(cfg)?;
    Ok(rows.into_iter().map(|m| ReportRow::from_measurement(suite.name, &hash, cfg.seed, m)).collect())
}

/// Runs a suite and writes `<stem>.csv` and `<stem>.summary.toml`. Nothing is
/// written when the config is invalid or the suite fails.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let rows = evaluate(cfg)?;
    let summary = Summary::of(&rows, &cfg.suite, &cfg.hash(), cfg.seed);
    let csv = cfg.report_stem().with_extension("csv");
    report::write_report(&csv, &rows, &summary)?;
    Ok(RunOutcome { csv, rows, summary })
}

/// One line per suite: "name → theorems".
pub fn list_suites() -> Vec<String> {
    SUITES.iter().map(|s| format!("{} → {}", s.name, s.theorems)).collect()
}
