//! One TOML configuration file with per-command sections. Unknown keys are
//! rejected everywhere; every run echoes its effective configuration into
//! the output directory for reproducibility.
//!
//! Relative paths inside the config resolve against the config file's
//! directory; `out_dir` follows the same rule unless overridden by the
//! `--out` flag or the `LAYERPROBE_OUT` environment variable.

use std::path::{Path, PathBuf};

use layerprobe_core::cca::{CcaConfig, WeightSource};
use layerprobe_core::ctc::SegmentMode;
use layerprobe_core::dsp::DspConfig;
use layerprobe_core::probe::{TaskDef, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    #[serde(default)]
    pub cca: CcaSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub dsp: DspConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingest: Option<IngestSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<PoolSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cca_phoneme: Option<CcaPhonemeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cca_paraling: Option<CcaParalingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<ScoreSection>,
}

fn default_out_dir() -> String {
    "out".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CcaSection {
    pub reg_epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_components: Option<usize>,
    pub n_folds: usize,
    pub n_test_folds: usize,
    pub weights_from: WeightSource,
}

impl Default for CcaSection {
    fn default() -> Self {
        let d = CcaConfig::default();
        Self {
            reg_epsilon: d.reg_epsilon,
            max_components: d.max_components,
            n_folds: d.n_folds,
            n_test_folds: d.n_test_folds,
            weights_from: d.weights_from,
        }
    }
}

impl CcaSection {
    pub fn to_config(&self, seed: u64) -> CcaConfig {
        CcaConfig {
            reg_epsilon: self.reg_epsilon,
            max_components: self.max_components,
            n_folds: self.n_folds,
            n_test_folds: self.n_test_folds,
            seed,
            weights_from: self.weights_from,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub hidden: usize,
    pub newbob_factor: f64,
    pub newbob_improvement_threshold: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            lr: d.lr,
            epochs: d.epochs,
            batch: d.batch,
            hidden: d.hidden,
            newbob_factor: d.newbob_factor,
            newbob_improvement_threshold: d.newbob_improvement_threshold,
        }
    }
}

impl TrainSection {
    pub fn to_config(&self, seed: u64, tasks: Vec<TaskDef>) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            epochs: self.epochs,
            batch: self.batch,
            seed,
            hidden: self.hidden,
            newbob_factor: self.newbob_factor,
            newbob_improvement_threshold: self.newbob_improvement_threshold,
            tasks,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSection {
    pub manifest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inventory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignments: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolMode {
    Phonemes,
    Windows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSection {
    pub mode: PoolMode,
    pub manifest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inventory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignments: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track: Option<String>,
    #[serde(default = "default_win_s")]
    pub win_s: f64,
    #[serde(default = "default_hop_s")]
    pub hop_s: f64,
    #[serde(default = "default_core_s")]
    pub core_s: f64,
    #[serde(default = "default_base")]
    pub base: String,
}

fn default_win_s() -> f64 {
    2.0
}

fn default_hop_s() -> f64 {
    0.2
}

fn default_core_s() -> f64 {
    1.0
}

fn default_base() -> String {
    "pooled".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub name: String,
    pub manifest: String,
    pub alignments: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcaPhonemeSection {
    pub inventory: String,
    pub corpora: Vec<CorpusSpec>,
    #[serde(default = "default_per_phone_cap")]
    pub per_phone_cap: usize,
    #[serde(default)]
    pub emit_svg: bool,
}

fn default_per_phone_cap() -> usize {
    600
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcaParalingSection {
    pub manifest: String,
    pub labels: String,
    pub task_id: String,
    pub classes: Vec<String>,
    #[serde(default = "default_samples_per_class")]
    pub samples_per_class: usize,
    #[serde(default)]
    pub emit_svg: bool,
}

fn default_samples_per_class() -> usize {
    1500
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub pooled_dir: String,
    #[serde(default = "default_base")]
    pub pooled_base: String,
    pub manifest: String,
    pub task_id: String,
    pub classes: Vec<String>,
    #[serde(default)]
    pub dev_groups: Vec<String>,
    #[serde(default)]
    pub test_groups: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_mask: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights_csv: Option<String>,
    #[serde(default)]
    pub emit_svg: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreSection {
    pub inventory: String,
    pub reference: String,
    pub hyp_a: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyp_b: Option<String>,
    #[serde(default = "default_name_a")]
    pub name_a: String,
    #[serde(default = "default_name_b")]
    pub name_b: String,
    #[serde(default)]
    pub segment_mode: SegmentMode,
}

fn default_name_a() -> String {
    "system_a".to_string()
}

fn default_name_b() -> String {
    "system_b".to_string()
}

/// A loaded configuration plus the directory its relative paths resolve
/// against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { config, base_dir })
    }

    /// Resolves a config-relative path.
    pub fn resolve(&self, p: &str) -> PathBuf {
        let path = Path::new(p);
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Output directory after flag and environment overrides
    /// (`--out` > `LAYERPROBE_OUT` > config `out_dir`).
    pub fn out_dir(&self, flag: Option<&str>) -> PathBuf {
        if let Some(f) = flag {
            return PathBuf::from(f);
        }
        if let Ok(env) = std::env::var("LAYERPROBE_OUT") {
            if !env.is_empty() {
                return PathBuf::from(env);
            }
        }
        self.resolve(&self.config.out_dir)
    }

    /// Writes the effective configuration echo into the output directory.
    pub fn write_echo(&self, out_dir: &Path) -> Result<(), CliError> {
        let text = toml::to_string_pretty(&self.config)
            .map_err(|e| CliError::Config(format!("cannot serialize config echo: {e}")))?;
        std::fs::create_dir_all(out_dir)?;
        std::fs::write(out_dir.join("config_echo.toml"), text)?;
        Ok(())
    }
}
