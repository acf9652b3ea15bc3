//! JSON run configuration. Every section is optional; command-line flags
//! take precedence over values given here. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub analyze: AnalyzeConfig,
    #[serde(default)]
    pub montecarlo: MonteCarloConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub kedmd: KedmdConfig,
    #[serde(default)]
    pub robot: RobotConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub strategy: Option<String>,
    pub m: Option<usize>,
    pub d: Option<usize>,
    pub alpha: Option<f64>,
    pub r_u: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub input: Option<PathBuf>,
    pub r_u: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub m: Option<usize>,
    pub d: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub normalize: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub dataset: Option<PathBuf>,
    pub dictionary: Option<String>,
    pub mode: Option<String>,
    pub r_eps: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KedmdConfig {
    pub nodes: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub rho: Option<f64>,
    pub probes: Option<usize>,
    pub r_eps: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub d: Option<usize>,
    pub box_half: Option<f64>,
    pub r_x: Option<f64>,
    pub neighbors: Option<usize>,
    pub extra_random_neighbors: Option<usize>,
    pub ecdf_neighbors: Option<Vec<usize>>,
    pub alpha: Option<f64>,
    pub lemniscate_amplitude: Option<f64>,
    pub lemniscate_period: Option<f64>,
    pub rollout_steps: Option<usize>,
    pub wheel_radius: Option<f64>,
    pub wheel_separation: Option<f64>,
    pub dt: Option<f64>,
    pub r_u: Option<f64>,
    pub svg: Option<bool>,
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            bail!("unsupported schema_version {} (expected {SCHEMA_VERSION})", cfg.schema_version);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}
