//! Figures and their data tables: diel profiles, date-hour heatmaps, monthly
//! trends with an annual-cycle overlay, ROC curves and correlation bars.
//!
//! Each figure is written as an image plus a CSV holding exactly the numbers
//! that were drawn.

mod draw;
mod figures;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indices::{series_from_records, IndexRecord};
use crate::io::write_csv_records;

pub use draw::{ensure_font, render_image};
pub use figures::{
    correlation_figures, date_hour_figure, diel_figure, monthly_figure, roc_figures, CorrelationCsvRow, Figure, Line,
    Plot, RocCsvRow,
};

#[derive(Error, Debug)]
pub enum ReportError {
    #[error("missing report inputs: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingInputs(Vec<PathBuf>),
    #[error("dpi {0} outside 30..=1200")]
    BadDpi(u32),
    #[error("no figure kinds requested")]
    NoFigures,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    DielProfile,
    DateHourHeatmap,
    MonthlyTrend,
    Roc,
    CorrelationBars,
}

impl FigureKind {
    pub const ALL: [FigureKind; 5] = [
        FigureKind::DielProfile,
        FigureKind::DateHourHeatmap,
        FigureKind::MonthlyTrend,
        FigureKind::Roc,
        FigureKind::CorrelationBars,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureKind::DielProfile => "diel_profile",
            FigureKind::DateHourHeatmap => "date_hour_heatmap",
            FigureKind::MonthlyTrend => "monthly_trend",
            FigureKind::Roc => "roc",
            FigureKind::CorrelationBars => "correlation_bars",
        }
    }
}

impl fmt::Display for FigureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        FigureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown figure kind {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    #[default]
    Png,
    Svg,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Svg => "svg",
        }
    }
}

impl FromStr for ImageFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "png" => Ok(ImageFormat::Png),
            "svg" => Ok(ImageFormat::Svg),
            _ => Err(format!("unknown image format {s:?} (png or svg)")),
        }
    }
}

fn default_figures() -> Vec<FigureKind> {
    FigureKind::ALL.to_vec()
}

fn default_dpi() -> u32 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSpec {
    /// Index CSV (site_id, timestamp_iso8601, index_kind, value, units, denoised_flag).
    #[serde(default)]
    pub index_csv: Option<PathBuf>,
    /// ROC CSV (condition, snr_db, threshold, tpr, fpr).
    #[serde(default)]
    pub roc_csv: Option<PathBuf>,
    /// Correlation CSV as written by `write_correlation_csv`.
    #[serde(default)]
    pub correlation_csv: Option<PathBuf>,
    pub out_dir: PathBuf,
    #[serde(default = "default_figures")]
    pub figures: Vec<FigureKind>,
    #[serde(default)]
    pub format: ImageFormat,
    #[serde(default = "default_dpi")]
    pub dpi: u32,
}

impl ReportSpec {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        ReportSpec {
            index_csv: None,
            roc_csv: None,
            correlation_csv: None,
            out_dir: out_dir.into(),
            figures: default_figures(),
            format: ImageFormat::Png,
            dpi: default_dpi(),
        }
    }

    /// Lists every referenced input that does not exist.
    pub fn validate(&self) -> Result<(), ReportError> {
        if !(30..=1200).contains(&self.dpi) {
            return Err(ReportError::BadDpi(self.dpi));
        }
        if self.figures.is_empty() {
            return Err(ReportError::NoFigures);
        }
        let missing: Vec<PathBuf> = [&self.index_csv, &self.roc_csv, &self.correlation_csv]
            .into_iter()
            .flatten()
            .filter(|p| !p.is_file())
            .cloned()
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ReportError::MissingInputs(missing))
        }
    }
}

/// A problem confined to one input or figure; other figures still render.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub figure: Option<FigureKind>,
    pub input: Option<PathBuf>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(k) = self.figure {
            write!(f, "[{k}] ")?;
        }
        if let Some(p) = &self.input {
            write!(f, "{}: ", p.display())?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RenderOutcome {
    /// Written files, image then CSV per figure, in figure order.
    pub written: Vec<PathBuf>,
    pub diagnostics: Vec<Diagnostic>,
}

impl RenderOutcome {
    pub fn is_clean(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

pub(crate) fn read_csv_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| e.to_string())?;
    rdr.deserialize().collect::<Result<Vec<T>, _>>().map_err(|e| e.to_string())
}

/// Reads an index CSV.
pub fn read_index_csv(path: &Path) -> Result<Vec<IndexRecord>, String> {
    read_csv_rows(path)
}

fn index_figures(kinds: &[FigureKind], path: &Path, diags: &mut Vec<Diagnostic>) -> Vec<Figure> {
    let fail = |diags: &mut Vec<Diagnostic>, message: String| {
        for k in kinds {
            diags.push(Diagnostic {
                figure: Some(*k),
                input: Some(path.to_path_buf()),
                message: message.clone(),
            });
        }
    };
    let records = match read_index_csv(path) {
        Ok(r) => r,
        Err(e) => {
            fail(diags, e);
            return Vec::new();
        }
    };
    let mut by_flag: BTreeMap<bool, Vec<IndexRecord>> = BTreeMap::new();
    for r in records {
        by_flag.entry(r.denoised_flag).or_default().push(r);
    }
    let mut out = Vec::new();
    for (denoised, recs) in by_flag {
        let series = match series_from_records(&recs) {
            Ok(s) => s,
            Err(e) => {
                fail(diags, e);
                continue;
            }
        };
        for s in &series {
            for k in kinds {
                let fig = match k {
                    FigureKind::DielProfile => diel_figure(s, denoised).map_err(|e| e.to_string()),
                    FigureKind::DateHourHeatmap => Ok(date_hour_figure(s, denoised)),
                    FigureKind::MonthlyTrend => Ok(monthly_figure(s, denoised)),
                    _ => continue,
                };
                match fig {
                    Ok(f) => out.push(f),
                    Err(message) => diags.push(Diagnostic {
                        figure: Some(*k),
                        input: Some(path.to_path_buf()),
                        message,
                    }),
                }
            }
        }
    }
    out
}

/// Renders every requested figure. Only an invalid spec is fatal; malformed
/// inputs and failed images become diagnostics.
pub fn render(spec: &ReportSpec) -> Result<RenderOutcome, ReportError> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.out_dir)?;
    let mut kinds = spec.figures.clone();
    kinds.sort();
    kinds.dedup();
    let mut diags = Vec::new();
    let mut figs: Vec<Figure> = Vec::new();

    let need = |k: FigureKind, input: &Option<PathBuf>, name: &str, diags: &mut Vec<Diagnostic>| -> bool {
        if !kinds.contains(&k) {
            return false;
        }
        if input.is_none() {
            diags.push(Diagnostic {
                figure: Some(k),
                input: None,
                message: format!("no {name} given"),
            });
            return false;
        }
        true
    };

    let index_kinds: Vec<FigureKind> = [FigureKind::DielProfile, FigureKind::DateHourHeatmap, FigureKind::MonthlyTrend]
        .into_iter()
        .filter(|k| need(*k, &spec.index_csv, "index_csv", &mut diags))
        .collect();
    if let (false, Some(p)) = (index_kinds.is_empty(), &spec.index_csv) {
        figs.extend(index_figures(&index_kinds, p, &mut diags));
    }
    if need(FigureKind::Roc, &spec.roc_csv, "roc_csv", &mut diags) {
        let p = spec.roc_csv.as_ref().expect("checked");
        match read_csv_rows::<RocCsvRow>(p) {
            Ok(rows) => figs.extend(roc_figures(&rows)),
            Err(message) => diags.push(Diagnostic {
                figure: Some(FigureKind::Roc),
                input: Some(p.clone()),
                message,
            }),
        }
    }
    if need(FigureKind::CorrelationBars, &spec.correlation_csv, "correlation_csv", &mut diags) {
        let p = spec.correlation_csv.as_ref().expect("checked");
        match read_csv_rows::<CorrelationCsvRow>(p) {
            Ok(rows) => figs.extend(correlation_figures(&rows)),
            Err(message) => diags.push(Diagnostic {
                figure: Some(FigureKind::CorrelationBars),
                input: Some(p.clone()),
                message,
            }),
        }
    }

    let results: Vec<(Vec<PathBuf>, Vec<Diagnostic>)> = figs
        .par_iter()
        .map(|fig| {
            let mut written = Vec::new();
            let mut d = Vec::new();
            let csv_path = spec.out_dir.join(format!("{}.csv", fig.stem));
            let img_path = spec.out_dir.join(format!("{}.{}", fig.stem, spec.format.extension()));
            match render_image(&fig.plot, &img_path, spec.format, spec.dpi) {
                Ok(()) => written.push(img_path),
                Err(message) => d.push(Diagnostic {
                    figure: Some(fig.kind),
                    input: None,
                    message: format!("{}: image not rendered: {message}", fig.stem),
                }),
            }
            let header: Vec<&str> = fig.header.iter().map(String::as_str).collect();
            match write_csv_records(&csv_path, &header, &fig.rows) {
                Ok(()) => written.push(csv_path),
                Err(e) => d.push(Diagnostic {
                    figure: Some(fig.kind),
                    input: None,
                    message: format!("{}: {e}", fig.stem),
                }),
            }
            (written, d)
        })
        .collect();
    let mut outcome = RenderOutcome {
        written: Vec::new(),
        diagnostics: diags,
    };
    for (w, d) in results {
        outcome.written.extend(w);
        outcome.diagnostics.extend(d);
    }
    Ok(outcome)
}
