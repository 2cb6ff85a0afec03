//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use modbo::acq_optimizer::CoverConfig;
use modbo::acquisition::AcquisitionKind;
use modbo::benchmarks::{benchmark, Benchmark};
use modbo::bo::{BOConfig, SigmaHMode};
use modbo::samplers::{ChainConfig, ChainProfile};
use modbo::surrogates::{SurrogateKind, DEFAULT_LATENT_DIM};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub benchmark: String,
    pub surrogates: Vec<SurrogateKind>,
    #[serde(default)]
    pub acquisition: AcquisitionKind,
    pub budget: usize,
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_profile")]
    pub chain_profile: ChainProfile,
    #[serde(default)]
    pub cover: CoverConfig,
    /// Relative paths are resolved against the config file's directory.
    pub output_dir: PathBuf,
    #[serde(default = "default_initial_points")]
    pub initial_points: usize,
    #[serde(default)]
    pub sigma_h_candidates: Option<Vec<f64>>,
    #[serde(default)]
    pub sigma_h_mode: SigmaHMode,
    #[serde(default = "default_latent_dim")]
    pub latent_dim: usize,
}

fn default_profile() -> ChainProfile {
    ChainProfile::Desk
}

fn default_initial_points() -> usize {
    2
}

fn default_latent_dim() -> usize {
    DEFAULT_LATENT_DIM
}

/// 1-based line of the first occurrence of `"key"` in the source, if any.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

fn at(text: &str, key: &str, msg: String) -> CliError {
    match key_line(text, key) {
        Some(l) => CliError::Config(format!("line {l}: {msg}")),
        None => CliError::Config(msg),
    }
}

impl ExperimentConfig {
    /// Parses and validates; every error names the offending line when it
    /// can be located.
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate_against(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if cfg.output_dir.is_relative() {
            if let Some(parent) = path.parent() {
                cfg.output_dir = parent.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    fn validate_against(&self, text: &str) -> CliResult<()> {
        if self.repetitions == 0 {
            return Err(at(text, "repetitions", "repetitions must be >= 1".into()));
        }
        if self.surrogates.is_empty() {
            return Err(at(text, "surrogates", "surrogates must not be empty".into()));
        }
        let mut seen = self.surrogates.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.surrogates.len() {
            return Err(at(text, "surrogates", "surrogates must be distinct".into()));
        }
        benchmark(&self.benchmark).map_err(|e| at(text, "benchmark", e.to_string()))?;
        self.bo_config(self.surrogates[0], 0).validate().map_err(|e| {
            let key = match &e {
                modbo::Error::Parameter(m) if m.contains("budget") => "budget",
                modbo::Error::Parameter(m) if m.contains("initial_points") => "initial_points",
                modbo::Error::Parameter(m) if m.contains("sigma_h") => "sigma_h_candidates",
                modbo::Error::Parameter(m) if m.contains("latent_dim") => "latent_dim",
                modbo::Error::Parameter(m) if m.contains("cover") => "cover",
                _ => "acquisition",
            };
            at(text, key, e.to_string())
        })
    }

    pub fn objective(&self) -> CliResult<Benchmark> {
        benchmark(&self.benchmark).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Seed of repetition `rep`; shared by every surrogate so the initial
    /// designs are paired.
    pub fn repetition_seed(&self, rep: usize) -> u64 {
        self.base_seed.wrapping_add(rep as u64)
    }

    pub fn bo_config(&self, surrogate: SurrogateKind, rep: usize) -> BOConfig {
        BOConfig {
            surrogate,
            acquisition: self.acquisition,
            budget: self.budget,
            initial_points: self.initial_points,
            sigma_h_candidates: self.sigma_h_candidates.clone(),
            sigma_h_mode: self.sigma_h_mode,
            latent_dim: self.latent_dim,
            chain: ChainConfig::profile(self.chain_profile, 0),
            cover: self.cover.clone(),
            seed: self.repetition_seed(rep),
        }
    }
}
