//! Run configuration: a strict TOML file whose values command-line flags override.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use reefpam::eval::{EvalOptions, GateConfig};
use reefpam::indices::{IndexConfig, IndexKind};
use reefpam::report::{FigureKind, ImageFormat};
use reefpam::stats::{CorrelationMode, ReefParameter};
use reefpam::synth::{MixRecipe, Split};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; when set it replaces `mix.recipe.seed`.
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub out_dir: PathBuf,
    pub ingest: IngestConfig,
    pub indices: IndicesConfig,
    pub mix: MixConfig,
    pub denoise_eval: DenoiseEvalConfig,
    pub correlate: CorrelateConfig,
    pub composite: CompositeConfig,
    pub report: ReportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            workers: 0,
            out_dir: PathBuf::from("reefpam_out"),
            ingest: IngestConfig::default(),
            indices: IndicesConfig::default(),
            mix: MixConfig::default(),
            denoise_eval: DenoiseEvalConfig::default(),
            correlate: CorrelateConfig::default(),
            composite: CompositeConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestConfig {
    /// Recording manifest CSV (file_path, site_id, deployment_id, start_time_iso8601, sensitivity_db, fullscale_v, gain_db).
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndicesConfig {
    pub manifest: Option<PathBuf>,
    /// Aggregation segment; one row per segment and index kind.
    pub segment_s: f64,
    /// Written to the `denoised_flag` column.
    pub denoised: bool,
    pub params: IndexConfig,
}

impl Default for IndicesConfig {
    fn default() -> Self {
        IndicesConfig {
            manifest: None,
            segment_s: 60.0,
            denoised: false,
            params: IndexConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixConfig {
    /// Signal bank listing (path, source, split[, id]).
    pub signals: Option<PathBuf>,
    /// Noise bank listing.
    pub noises: Option<PathBuf>,
    pub count: usize,
    pub split: Split,
    pub recipe: MixRecipe,
}

impl Default for MixConfig {
    fn default() -> Self {
        MixConfig {
            signals: None,
            noises: None,
            count: 10,
            split: Split::Train,
            recipe: MixRecipe::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenoiserKind {
    #[default]
    SpectralGate,
    Identity,
    /// Pre-computed outputs in `dir`, matched by basename.
    Directory,
    /// External program invoked as `program args.. <noisy_dir> <out_dir>`.
    Command,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenoiserConfig {
    pub kind: DenoiserKind,
    /// Condition label for directory and command denoisers.
    pub id: Option<String>,
    pub dir: Option<PathBuf>,
    pub program: Option<PathBuf>,
    pub args: Vec<String>,
    pub gate: GateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenoiseEvalConfig {
    /// Pair manifest written by `mix`.
    pub pairs: Option<PathBuf>,
    pub denoiser: DenoiserConfig,
    pub snr_grid: Vec<f64>,
    pub options: EvalOptions,
}

impl Default for DenoiseEvalConfig {
    fn default() -> Self {
        DenoiseEvalConfig {
            pairs: None,
            denoiser: DenoiserConfig::default(),
            snr_grid: vec![-10.0, -5.0, 0.0, 5.0],
            options: EvalOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelateConfig {
    pub index_csv: Option<PathBuf>,
    pub transect_csv: Option<PathBuf>,
    pub modes: Vec<CorrelationMode>,
    pub kinds: Vec<IndexKind>,
    /// Which rows of the index CSV to use; required when it holds both.
    pub denoised: Option<bool>,
}

impl Default for CorrelateConfig {
    fn default() -> Self {
        CorrelateConfig {
            index_csv: None,
            transect_csv: None,
            modes: vec![CorrelationMode::Temporal, CorrelationMode::Spatial, CorrelationMode::PerSiteCyclic],
            kinds: IndexKind::ALL.to_vec(),
            denoised: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompositeConfig {
    pub index_csv: Option<PathBuf>,
    pub transect_csv: Option<PathBuf>,
    /// `temporal` (daily rows) or `spatial` (one row per site).
    pub mode: CorrelationMode,
    pub parameters: Vec<ReefParameter>,
    pub standardize: bool,
    pub denoised: Option<bool>,
}

impl Default for CompositeConfig {
    fn default() -> Self {
        CompositeConfig {
            index_csv: None,
            transect_csv: None,
            mode: CorrelationMode::Temporal,
            parameters: ReefParameter::ALL.to_vec(),
            standardize: false,
            denoised: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    pub index_csv: Option<PathBuf>,
    pub roc_csv: Option<PathBuf>,
    pub correlation_csv: Option<PathBuf>,
    pub figures: Vec<FigureKind>,
    pub format: ImageFormat,
    pub dpi: u32,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            index_csv: None,
            roc_csv: None,
            correlation_csv: None,
            figures: FigureKind::ALL.to_vec(),
            format: ImageFormat::Png,
            dpi: 100,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
