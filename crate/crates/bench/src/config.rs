//! Run configuration and the severity schedule file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use softaffect_core::callosses::DEFAULT_MARGIN;
use softaffect_core::calmetrics::DEFAULT_BINS;
use softaffect_core::corrupt::Schedule;
use softaffect_core::quality::VisibilityMeasure;
use softaffect_core::softlabel::SmoothingConfig;

use crate::digest::sha256_hex;
use crate::error::{BenchError, Result};

pub const DEFAULT_DATASET_ID: &str = "softaffect-c";
pub const DEFAULT_CLASSES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub generate: GenerateConfig,
    pub evaluate: EvaluateConfig,
    pub loss: LossConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub dataset_id: String,
    pub seed: u64,
    pub classes: usize,
    pub beta: f64,
    pub kappa: f64,
    pub visibility: VisibilityMeasure,
    /// Square side to resize sources to before corruption; off when absent.
    pub resize: Option<u32>,
    /// Schedule file; the built-in table when absent.
    pub schedule: Option<PathBuf>,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            dataset_id: DEFAULT_DATASET_ID.into(),
            seed: 0,
            classes: DEFAULT_CLASSES,
            beta: SmoothingConfig::SUGGESTED_BETA,
            kappa: SmoothingConfig::DEFAULT_KAPPA,
            visibility: VisibilityMeasure::L2,
            resize: None,
            schedule: None,
        }
    }
}

impl GenerateConfig {
    pub fn smoothing(&self) -> Result<SmoothingConfig> {
        Ok(SmoothingConfig::new(self.classes, self.kappa, self.beta)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub bins: usize,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self { bins: DEFAULT_BINS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Focal,
    Maxent,
    Mbls,
    #[default]
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub loss: LossKind,
    pub gamma: f64,
    pub lambda_mu: f64,
    /// Class values; `1..=K` when absent.
    pub class_values: Option<Vec<f64>>,
    /// Global mean target; the mean of the class values when absent.
    pub mu_g: Option<f64>,
    pub absolute: bool,
    pub margin: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::Combined,
            gamma: 2.0,
            lambda_mu: 1.0,
            class_values: None,
            mu_g: None,
            absolute: false,
            margin: DEFAULT_MARGIN,
        }
    }
}

impl BenchConfig {
    /// Reads a TOML config. A relative schedule path resolves against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(BenchError::io(path))?;
        let mut cfg: BenchConfig = toml::from_str(&text).map_err(|e| BenchError::format(path, e))?;
        if let Some(s) = &cfg.generate.schedule {
            if s.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.generate.schedule = Some(base.join(s));
            }
        }
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

/// Hash of a config section's canonical JSON form.
pub fn config_hash<T: Serialize>(section: &T) -> String {
    sha256_hex(&serde_json::to_vec(section).expect("config sections serialize"))
}

/// A validated schedule and the hash of its canonical TOML text, so equal
/// tables hash equally whatever their file formatting.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSchedule {
    pub schedule: Schedule,
    pub hash: String,
}

impl LoadedSchedule {
    pub fn new(schedule: Schedule) -> Result<Self> {
        schedule.validate()?;
        let hash = sha256_hex(schedule_to_toml(&schedule).as_bytes());
        Ok(Self { schedule, hash })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Self::new(Schedule::builtin().clone()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(BenchError::io(p))?;
                let schedule: Schedule = toml::from_str(&text).map_err(|e| BenchError::format(p, e))?;
                Self::new(schedule)
            }
        }
    }
}

pub fn schedule_to_toml(schedule: &Schedule) -> String {
    toml::to_string(schedule).expect("schedule serializes")
}
