//! `reefpam` batch driver: ingestion, indices, pair mixing, denoiser
//! evaluation, statistics and reports over manifest-listed inputs.
//!
//! Exit codes: 0 success, 1 fatal input or configuration error, 2 partial
//! failure (some items skipped; see the command's `*_log.jsonl`).

pub mod commands;
pub mod config;
pub mod runlog;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use reefpam::indices::IndexKind;
use reefpam::report::{FigureKind, ImageFormat};
use reefpam::stats::{CorrelationMode, ReefParameter};
use reefpam::synth::Split;

pub use config::RunConfig;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("missing inputs ({}):\n{}", .0.len(), .0.iter().map(|p| format!("  {}", p.display())).collect::<Vec<_>>().join("\n"))]
    MissingInputs(Vec<PathBuf>),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How a command finished when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    /// Some files or items were skipped.
    Partial,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Complete => 0,
            Outcome::Partial => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "reefpam", version, about = "Reef passive acoustic monitoring batch tools")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, env = "REEFPAM_CONFIG")]
    pub config: Option<PathBuf>,
    /// Master seed for stochastic stages.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). Never changes numeric output.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Directory receiving every artifact.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Validate a recording manifest and write recordings.csv.
    Ingest {
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Compute SPL, ACI and snap rate per segment into indices.csv.
    Indices {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Segment length in seconds.
        #[arg(long)]
        segment_s: Option<f64>,
        /// Mark rows as computed on denoised audio.
        #[arg(long)]
        denoised: bool,
    },
    /// Synthesize clean/noisy training pairs and their manifest.
    Mix {
        #[arg(long)]
        signals: Option<PathBuf>,
        #[arg(long)]
        noises: Option<PathBuf>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        split: Option<Split>,
        /// Target SNR in dB for every pair.
        #[arg(long, allow_negative_numbers = true)]
        snr_db: Option<f64>,
    },
    /// Score a denoiser by envelope-detection ROC against the noisy baseline.
    DenoiseEval {
        /// Pair manifest written by `mix`.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// spectral_gate | identity | dir:<path> | cmd:<program>
        #[arg(long)]
        denoiser: Option<String>,
        /// Comma-separated SNR grid in dB.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        snr: Option<Vec<f64>>,
    },
    /// Correlate indices with transect surveys.
    Correlate {
        #[arg(long)]
        index_csv: Option<PathBuf>,
        #[arg(long)]
        transect_csv: Option<PathBuf>,
        /// temporal, temporal_windowed, spatial, per_site_cyclic (comma-separated)
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<CorrelationMode>>,
        /// spl_low, spl_high, aci_low, snap_rate (comma-separated)
        #[arg(long, value_delimiter = ',')]
        kinds: Option<Vec<IndexKindArg>>,
        /// Use denoised (true) or raw (false) rows of the index CSV.
        #[arg(long)]
        denoised: Option<bool>,
    },
    /// Fit composite acoustic indices per reef parameter.
    Composite {
        #[arg(long)]
        index_csv: Option<PathBuf>,
        #[arg(long)]
        transect_csv: Option<PathBuf>,
        /// temporal (daily rows) or spatial (site means)
        #[arg(long)]
        mode: Option<CorrelationMode>,
        /// Reef parameters to model (comma-separated); default all seven.
        #[arg(long, value_delimiter = ',')]
        parameters: Option<Vec<ReefParameter>>,
        /// Z-score the index columns before fitting.
        #[arg(long)]
        standardize: bool,
        #[arg(long)]
        denoised: Option<bool>,
    },
    /// Render figures with their data tables.
    Report {
        #[arg(long)]
        index_csv: Option<PathBuf>,
        #[arg(long)]
        roc_csv: Option<PathBuf>,
        #[arg(long)]
        correlation_csv: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        figures: Option<Vec<FigureKind>>,
        #[arg(long)]
        format: Option<ImageFormat>,
        #[arg(long)]
        dpi: Option<u32>,
    },
}

/// `IndexKind` wrapper whose parse error clap can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexKindArg(pub IndexKind);

impl std::str::FromStr for IndexKindArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse::<IndexKind>().map(IndexKindArg).map_err(|e| e.to_string())
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Indices { .. } => "indices",
            Command::Mix { .. } => "mix",
            Command::DenoiseEval { .. } => "denoise-eval",
            Command::Correlate { .. } => "correlate",
            Command::Composite { .. } => "composite",
            Command::Report { .. } => "report",
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Loads the config file (if any) and applies flag overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    set(&mut cfg.workers, cli.workers);
    set(&mut cfg.out_dir, cli.out_dir.clone());
    match cli.command.clone() {
        Command::Ingest { manifest } => {
            if manifest.is_some() {
                cfg.ingest.manifest = manifest;
            }
        }
        Command::Indices {
            manifest,
            segment_s,
            denoised,
        } => {
            if manifest.is_some() {
                cfg.indices.manifest = manifest;
            }
            set(&mut cfg.indices.segment_s, segment_s);
            cfg.indices.denoised |= denoised;
        }
        Command::Mix {
            signals,
            noises,
            count,
            split,
            snr_db,
        } => {
            if signals.is_some() {
                cfg.mix.signals = signals;
            }
            if noises.is_some() {
                cfg.mix.noises = noises;
            }
            set(&mut cfg.mix.count, count);
            set(&mut cfg.mix.split, split);
            if snr_db.is_some() {
                cfg.mix.recipe.snr_db = snr_db;
            }
        }
        Command::DenoiseEval { pairs, denoiser, snr } => {
            if pairs.is_some() {
                cfg.denoise_eval.pairs = pairs;
            }
            if let Some(d) = denoiser {
                commands::apply_denoiser_flag(&mut cfg.denoise_eval.denoiser, &d)?;
            }
            set(&mut cfg.denoise_eval.snr_grid, snr);
        }
        Command::Correlate {
            index_csv,
            transect_csv,
            modes,
            kinds,
            denoised,
        } => {
            let c = &mut cfg.correlate;
            if index_csv.is_some() {
                c.index_csv = index_csv;
            }
            if transect_csv.is_some() {
                c.transect_csv = transect_csv;
            }
            set(&mut c.modes, modes);
            set(&mut c.kinds, kinds.map(|k| k.into_iter().map(|k| k.0).collect()));
            if denoised.is_some() {
                c.denoised = denoised;
            }
        }
        Command::Composite {
            index_csv,
            transect_csv,
            mode,
            parameters,
            standardize,
            denoised,
        } => {
            let c = &mut cfg.composite;
            if index_csv.is_some() {
                c.index_csv = index_csv;
            }
            if transect_csv.is_some() {
                c.transect_csv = transect_csv;
            }
            set(&mut c.mode, mode);
            set(&mut c.parameters, parameters);
            c.standardize |= standardize;
            if denoised.is_some() {
                c.denoised = denoised;
            }
        }
        Command::Report {
            index_csv,
            roc_csv,
            correlation_csv,
            figures,
            format,
            dpi,
        } => {
            let r = &mut cfg.report;
            if index_csv.is_some() {
                r.index_csv = index_csv;
            }
            if roc_csv.is_some() {
                r.roc_csv = roc_csv;
            }
            if correlation_csv.is_some() {
                r.correlation_csv = correlation_csv;
            }
            set(&mut r.figures, figures);
            set(&mut r.format, format);
            set(&mut r.dpi, dpi);
        }
    }
    Ok(cfg)
}

/// Runs one command inside a worker pool of the configured size.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = resolve_config(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    pool.install(|| commands::dispatch(&cli.command, &cfg))
}

/// Runs and maps the result to a process exit code, printing fatal errors.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(o) => o.exit_code(),
        Err(e) => {
            eprintln!("reefpam {}: {e}", cli.command.name());
            1
        }
    }
}
