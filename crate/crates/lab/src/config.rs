use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use refined_scale::bvp::{BvpRecord, BvpSpec};
use refined_scale::scale::SpaceIndex;
use refined_scale::FunctionParameter;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::suites;

/// Smallest tolerance accepted in a config.
pub const TOLERANCE_FLOOR: f64 = f64::EPSILON;

pub const OUTPUT_ENV: &str = "LAB_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "lab-output";

/// One experiment: top-level keys plus the `spec`, `params` and `tolerances` sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: String,
    pub seed: u64,
    pub truncations: Vec<usize>,
    #[serde(default = "default_sample")]
    pub sample: usize,
    #[serde(default)]
    pub indices: Vec<String>,
    /// Report path without extension; relative paths are resolved in the output directory.
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub spec: Option<BvpRecord>,
    #[serde(default)]
    pub params: BTreeMap<String, toml::Value>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

fn default_sample() -> usize {
    64
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("malformed config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if suites::find(&self.suite).is_none() {
            bail!("unknown suite '{}'", self.suite);
        }
        if self.truncations.is_empty() {
            bail!("truncations must not be empty");
        }
        if self.truncations.windows(2).any(|w| w[0] >= w[1]) {
            bail!("truncations must be strictly increasing: {:?}", self.truncations);
        }
        if self.truncations[0] == 0 {
            bail!("truncations must be positive");
        }
        if self.sample == 0 {
            bail!("sample size must be positive");
        }
        for (name, &tol) in &self.tolerances {
            if !(tol.is_finite() && tol >= TOLERANCE_FLOOR) {
                bail!("tolerance '{name}' = {tol} is below the floor {TOLERANCE_FLOOR:e}");
            }
        }
        self.space_indices()?;
        self.bvp_spec()?;
        for value in self.params.values() {
            if value.is_table() {
                bail!("params must not nest tables");
            }
        }
        Ok(())
    }

    pub fn space_indices(&self) -> Result<Vec<SpaceIndex>> {
        self.indices.iter().map(|s| SpaceIndex::parse(s).map_err(|e| anyhow!("index '{s}': {e}"))).collect()
    }

    /// The configured spec; `params.kernel_mode = n` replaces c by the shift putting mode n in the kernel.
    pub fn bvp_spec(&self) -> Result<BvpSpec> {
        let mut rec = self.spec.clone().unwrap_or(BvpRecord { q: 1, c: 1.0, c_im: 0.0, m_orders: None });
        if let Some(mode) = self.params.get("kernel_mode") {
            let mode = mode.as_integer().ok_or_else(|| anyhow!("kernel_mode must be an integer"))?;
            rec.c = BvpSpec::kernel_shift(mode);
            rec.c_im = 0.0;
        }
        BvpSpec::from_record(&rec).map_err(|e| anyhow!("spec: {e}"))
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    pub fn param_f64(&self, name: &str, default: f64) -> Result<f64> {
        match self.params.get(name) {
            None => Ok(default),
            Some(v) => as_f64(v).ok_or_else(|| anyhow!("param '{name}' must be a number")),
        }
    }

    pub fn param_usize(&self, name: &str, default: usize) -> Result<usize> {
        match self.params.get(name) {
            None => Ok(default),
            Some(v) => {
                v.as_integer().and_then(|i| usize::try_from(i).ok()).ok_or_else(|| anyhow!("param '{name}' must be a nonnegative integer"))
            }
        }
    }

    pub fn param_f64_list(&self, name: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.params.get(name) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(a)) => a.iter().map(|v| as_f64(v).ok_or_else(|| anyhow!("param '{name}' must hold numbers"))).collect(),
            Some(_) => bail!("param '{name}' must be an array"),
        }
    }

    /// Array of equal-length numeric arrays.
    pub fn param_rows(&self, name: &str, width: usize, default: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        let rows: Vec<Vec<f64>> = match self.params.get(name) {
            None => default.iter().map(|r| r.to_vec()).collect(),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|row| match row {
                    toml::Value::Array(r) => {
                        r.iter().map(|v| as_f64(v).ok_or_else(|| anyhow!("param '{name}' must hold numbers"))).collect()
                    }
                    _ => bail!("param '{name}' must be an array of arrays"),
                })
                .collect::<Result<_>>()?,
            Some(_) => bail!("param '{name}' must be an array"),
        };
        if rows.iter().any(|r| r.len() != width) {
            bail!("param '{name}' rows must have {width} entries");
        }
        Ok(rows)
    }

    pub fn param_phis(&self, name: &str, default: &[&str]) -> Result<Vec<FunctionParameter>> {
        let texts: Vec<String> = match self.params.get(name) {
            None => default.iter().map(|s| s.to_string()).collect(),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or_else(|| anyhow!("param '{name}' must hold strings")))
                .collect::<Result<_>>()?,
            Some(_) => bail!("param '{name}' must be an array"),
        };
        texts.iter().map(|t| FunctionParameter::parse(t).map_err(|e| anyhow!("param '{name}': {e}"))).collect()
    }

    /// Canonical TOML form; the config hash is taken over it.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Report path without extension, honouring the output directory override.
    pub fn report_stem(&self) -> PathBuf {
        let dir = std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        let name = self.output.clone().unwrap_or_else(|| self.suite.clone());
        let path = Path::new(&name);
        if path.is_absolute() && std::env::var_os(OUTPUT_ENV).is_none() {
            path.to_path_buf()
        } else {
            dir.join(path.file_name().unwrap_or(path.as_os_str()))
        }
    }
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
}
