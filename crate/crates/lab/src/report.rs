use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Expected range of a measured quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Within(f64, f64),
    /// Holds when the measurement is 1 (a boolean check).
    True,
}

impl Bound {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost(b) => v <= b,
            Bound::AtLeast(b) => v >= b,
            Bound::Within(lo, hi) => v >= lo && v <= hi,
            Bound::True => v == 1.0,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(b) => write!(f, "<= {b:e}"),
            Bound::AtLeast(b) => write!(f, ">= {b:e}"),
            Bound::Within(lo, hi) => write!(f, "in [{lo:e}, {hi:e}]"),
            Bound::True => f.write_str("true"),
        }
    }
}

/// A measurement produced by a suite, before provenance is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub params: String,
    pub quantity: String,
    pub measured: f64,
    pub bound: Bound,
}

impl Measurement {
    pub fn new(params: impl Into<String>, quantity: impl Into<String>, measured: f64, bound: Bound) -> Self {
        Measurement { params: params.into(), quantity: quantity.into(), measured, bound }
    }

    pub fn check(params: impl Into<String>, quantity: impl Into<String>, ok: bool) -> Self {
        Self::new(params, quantity, if ok { 1.0 } else { 0.0 }, Bound::True)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub suite: String,
    pub params: String,
    pub quantity: String,
    pub measured: f64,
    pub expected: String,
    pub pass: bool,
    pub config_hash: String,
    pub seed: u64,
}

impl ReportRow {
    pub fn from_measurement(suite: &str, hash: &str, seed: u64, m: Measurement) -> Self {
        ReportRow {
            suite: suite.to_string(),
            pass: m.bound.holds(m.measured),
            params: m.params,
            quantity: m.quantity,
            measured: m.measured,
            expected: m.bound.to_string(),
            config_hash: hash.to_string(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub suite: String,
    pub config_hash: String,
    pub seed: u64,
    pub rows: usize,
    pub passed: usize,
    pub failed: usize,
    pub all_pass: bool,
}

impl Summary {
    pub fn of(rows: &[ReportRow], suite: &str, hash: &str, seed: u64) -> Self {
        let passed = rows.iter().filter(|r| r.pass).count();
        Summary {
            suite: suite.to_string(),
            config_hash: hash.to_string(),
            seed,
            rows: rows.len(),
            passed,
            failed: rows.len() - passed,
            all_pass: passed == rows.len(),
        }
    }
}

pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.toml")
}

pub fn render_csv(rows: &[ReportRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner()?)
}

/// Writes the report and its summary; both are rendered before anything touches the disk.
pub fn write_report(csv_path: &Path, rows: &[ReportRow], summary: &Summary) -> Result<()> {
    let body = render_csv(rows)?;
    let side = toml::to_string(summary)?;
    if let Some(dir) = csv_path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(csv_path, body).with_context(|| format!("writing {}", csv_path.display()))?;
    fs::write(summary_path(csv_path), side).with_context(|| "writing summary")?;
    Ok(())
}

pub fn read_rows(csv_path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(csv_path).with_context(|| format!("reading {}", csv_path.display()))?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<ReportRow>, _>>()?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub rows: usize,
    pub failed: Vec<ReportRow>,
    /// Problems with the report itself (summary mismatch, missing provenance, inconsistent verdicts).
    pub problems: Vec<String>,
}

impl CheckOutcome {
    pub fn ok(&self) -> bool {
        self.failed.is_empty() && self.problems.is_empty()
    }
}

/// Re-reads a report, re-evaluates each verdict against its recorded bound and
/// compares with the side-car summary when present.
pub fn check_report(csv_path: &Path) -> Result<CheckOutcome> {
    let rows = read_rows(csv_path)?;
    if rows.is_empty() {
        bail!("{} holds no rows", csv_path.display());
    }
    let mut problems = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if r.config_hash.is_empty() {
            problems.push(format!("row {} lacks a config hash", i + 1));
        }
        match parse_bound(&r.expected) {
            Some(b) => {
                if b.holds(r.measured) != r.pass {
                    problems.push(format!("row {} verdict disagrees with its bound", i + 1));
                }
            }
            None => problems.push(format!("row {} has an unreadable bound '{}'", i + 1, r.expected)),
        }
    }
    let hashes: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.config_hash.as_str()).collect();
    if hashes.len() > 1 {
        problems.push("rows carry different config hashes".into());
    }
    let sp = summary_path(csv_path);
    if sp.exists() {
        let text = fs::read_to_string(&sp)?;
        let summary: Summary = toml::from_str(&text).context("malformed summary")?;
        let expect = Summary::of(&rows, &rows[0].suite, &rows[0].config_hash, rows[0].seed);
        if summary != expect {
            problems.push("summary does not match the rows".into());
        }
    }
    let failed = rows.iter().filter(|r| !r.pass).cloned().collect();
    Ok(CheckOutcome { rows: rows.len(), failed, problems })
}

fn parse_bound(text: &str) -> Option<Bound> {
    if text == "true" {
        return Some(Bound::True);
    }
    if let Some(v) = text.strip_prefix("<= ") {
        return v.parse().ok().map(Bound::AtMost);
    }
    if let Some(v) = text.strip_prefix(">= ") {
        return v.parse().ok().map(Bound::AtLeast);
    }
    let inner = text.strip_prefix("in [")?.strip_suffix(']')?;
    let (lo, hi) = inner.split_once(", ")?;
    Some(Bound::Within(lo.parse().ok()?, hi.parse().ok()?))
}
