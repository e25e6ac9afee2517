use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use isodiff::config::KeyValueConfig;
use serde::{Deserialize, Serialize};

pub const FILE_NAME: &str = "manifest.json";

/// Everything needed to repeat a run: the fully resolved configuration and
/// the input files it read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub threads: usize,
    pub wall_time_secs: f64,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &KeyValueConfig) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            config: config
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            threads: 0,
            wall_time_secs: 0.0,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(FILE_NAME);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn expect_subcommand(&self, name: &str) -> Result<()> {
        if self.subcommand != name {
            bail!(
                "manifest was written by `{}`, not `{name}`",
                self.subcommand
            );
        }
        Ok(())
    }

    pub fn key_values(&self) -> KeyValueConfig {
        let mut cfg = KeyValueConfig::new();
        for (k, v) in &self.config {
            cfg.set(k.as_str(), v);
        }
        cfg
    }

    pub fn input(&self, name: &str) -> Option<PathBuf> {
        self.inputs.get(name).cloned()
    }
}
