//! One function per subcommand. Each checks all of its inputs up front,
//! writes artifacts atomically under `out_dir`, and records per-item outcomes
//! in `<command>_log.jsonl`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::SecondsFormat;
use rayon::prelude::*;

use reefpam::audio::{load_entry, read_manifest, segment, ManifestEntry};
use reefpam::eval::{
    evaluate_denoiser, write_roc_csv, write_summary_csv, CommandDenoiser, Denoiser, DirectoryDenoiser,
    IdentityDenoiser, SpectralGateDenoiser,
};
use reefpam::indices::{series_from_records, ClipIndices, IndexKind, IndexRecord, IndexSeries};
use reefpam::io::write_csv_records;
use reefpam::report::{read_index_csv, render, ReportError, ReportSpec};
use reefpam::stats::{
    composite_design, correlate_index, fit_composite, read_transect_csv, write_composite_csv, write_correlation_csv,
    CompositeOptions, CorrelationMode, TransectRecord,
};
use reefpam::synth::{
    build_dataset, check_split_hygiene, manifest_file_name, read_bank_csv, read_pair_manifest, BankRole, Split,
};

use crate::config::{DenoiserConfig, DenoiserKind, RunConfig};
use crate::runlog::RunLog;
use crate::{CliError, Command, Outcome};

pub const RECORDINGS_CSV: &str = "recordings.csv";
pub const INDICES_CSV: &str = "indices.csv";
pub const ROC_CSV: &str = "roc.csv";
pub const ROC_SUMMARY_CSV: &str = "roc_summary.csv";
pub const CORRELATIONS_CSV: &str = "correlations.csv";
pub const COMPOSITE_CSV: &str = "composite.csv";
pub const INDEX_HEADER: [&str; 6] = ["site_id", "timestamp_iso8601", "index_kind", "value", "units", "denoised_flag"];

pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cmd {
        Command::Ingest { .. } => ingest(cfg),
        Command::Indices { .. } => indices(cfg),
        Command::Mix { .. } => mix(cfg),
        Command::DenoiseEval { .. } => denoise_eval(cfg),
        Command::Correlate { .. } => correlate(cfg),
        Command::Composite { .. } => composite(cfg),
        Command::Report { .. } => report(cfg),
    }
}

/// Parses `spectral_gate`, `identity`, `dir:<path>` or `cmd:<program>`.
pub fn apply_denoiser_flag(d: &mut DenoiserConfig, flag: &str) -> Result<(), CliError> {
    match flag.split_once(':') {
        None if flag == "spectral_gate" => d.kind = DenoiserKind::SpectralGate,
        None if flag == "identity" => d.kind = DenoiserKind::Identity,
        Some(("dir", p)) => {
            d.kind = DenoiserKind::Directory;
            d.dir = Some(PathBuf::from(p));
        }
        Some(("cmd", p)) => {
            d.kind = DenoiserKind::Command;
            d.program = Some(PathBuf::from(p));
        }
        _ => {
            return Err(CliError::Config(format!(
                "--denoiser {flag:?}: expected spectral_gate, identity, dir:<path> or cmd:<program>"
            )))
        }
    }
    Ok(())
}

fn required<'a>(v: &'a Option<PathBuf>, key: &str, flag: &str) -> Result<&'a Path, CliError> {
    v.as_deref()
        .ok_or_else(|| CliError::Config(format!("{key} is not set (config key or {flag})")))
}

/// Fails listing every path that does not exist.
fn check_exist<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<(), CliError> {
    let mut seen = BTreeSet::new();
    let missing: Vec<PathBuf> = paths
        .into_iter()
        .filter(|p| !p.exists())
        .filter(|p| seen.insert(p.to_path_buf()))
        .map(Path::to_path_buf)
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(CliError::MissingInputs(missing))
    }
}

fn input_err(what: &Path) -> impl Fn(String) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", what.display()))
}

fn finish(log: &RunLog, cfg: &RunConfig) -> Result<Outcome, CliError> {
    log.write(&cfg.out_dir)?;
    Ok(if log.is_partial() { Outcome::Partial } else { Outcome::Complete })
}

fn read_recordings(manifest: &Path) -> Result<Vec<ManifestEntry>, CliError> {
    check_exist([manifest])?;
    let entries = read_manifest(manifest).map_err(|e| CliError::Input(e.to_string()))?;
    check_exist(entries.iter().map(|e| e.file_path.as_path()))?;
    Ok(entries)
}

fn ingest(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let manifest = required(&cfg.ingest.manifest, "ingest.manifest", "--manifest")?;
    let entries = read_recordings(manifest)?;
    let results: Vec<_> = entries.par_iter().map(|e| load_entry(e).map(|(_, m)| m)).collect();
    let mut log = RunLog::new("ingest");
    let mut rows = Vec::new();
    for (e, r) in entries.iter().zip(results) {
        let item = e.file_path.display().to_string();
        match r {
            Ok(m) => match m.start_time {
                Some(t) => {
                    log.ok(&item, format!("{} s at {} Hz", m.duration_s, m.sample_rate));
                    rows.push(vec![
                        item,
                        m.site_id,
                        m.deployment_id,
                        t.to_rfc3339_opts(SecondsFormat::AutoSi, true),
                        m.duration_s.to_string(),
                        m.sample_rate.to_string(),
                    ]);
                }
                None => log.skipped(item, "no start time in the manifest or the file name"),
            },
            Err(err) => log.error(item, err.to_string()),
        }
    }
    write_csv_records(
        &cfg.out_dir.join(RECORDINGS_CSV),
        &["file_path", "site_id", "deployment_id", "start_time_iso8601", "duration_s", "sample_rate"],
        &rows,
    )?;
    finish(&log, cfg)
}

type FileRows = Result<(Vec<Vec<String>>, usize, usize), String>;

fn file_indices(entry: &ManifestEntry, cfg: &RunConfig) -> FileRows {
    let (clip, _) = load_entry(entry).map_err(|e| e.to_string())?;
    if clip.start_time.is_none() {
        return Err("no start time in the manifest or the file name".into());
    }
    let segs = segment(&clip, cfg.indices.segment_s).map_err(|e| e.to_string())?;
    if segs.is_empty() {
        return Err(format!("shorter than one {} s segment", cfg.indices.segment_s));
    }
    let per_seg: Vec<Result<ClipIndices, String>> = segs
        .par_iter()
        .map(|s| ClipIndices::compute(s, &cfg.indices.params).map_err(|e| e.to_string()))
        .collect();
    let mut rows = Vec::new();
    let mut silent = 0;
    for (seg, ix) in segs.iter().zip(per_seg) {
        let ix = ix?;
        let ts = seg.start_time.expect("checked above").to_rfc3339_opts(SecondsFormat::AutoSi, true);
        for kind in IndexKind::ALL {
            match ix.value(kind) {
                Some(v) => rows.push(vec![
                    seg.site_id.clone(),
                    ts.clone(),
                    kind.to_string(),
                    v.to_string(),
                    kind.units(seg.calibrated).as_str().to_string(),
                    cfg.indices.denoised.to_string(),
                ]),
                None => silent += 1,
            }
        }
    }
    Ok((rows, segs.len(), silent))
}

fn indices(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let manifest = required(&cfg.indices.manifest, "indices.manifest", "--manifest")?;
    if !(cfg.indices.segment_s > 0.0) {
        return Err(CliError::Config(format!("indices.segment_s = {} must be positive", cfg.indices.segment_s)));
    }
    let entries = read_recordings(manifest)?;
    let results: Vec<FileRows> = entries.par_iter().map(|e| file_indices(e, cfg)).collect();
    let mut log = RunLog::new("indices");
    let mut rows = Vec::new();
    for (e, r) in entries.iter().zip(results) {
        let item = e.file_path.display().to_string();
        match r {
            Ok((file_rows, n_seg, silent)) => {
                let mut detail = format!("{n_seg} segments, {} rows", file_rows.len());
                if silent > 0 {
                    detail.push_str(&format!("; {silent} silent-band SPL values omitted"));
                }
                log.ok(item, detail);
                rows.extend(file_rows);
            }
            Err(err) => log.error(item, err),
        }
    }
    write_csv_records(&cfg.out_dir.join(INDICES_CSV), &INDEX_HEADER, &rows)?;
    finish(&log, cfg)
}

/// `path` column of a bank listing, resolved like `read_bank_csv` does.
fn listed_paths(listing: &Path) -> Result<Vec<PathBuf>, CliError> {
    let err = input_err(listing);
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(listing)
        .map_err(|e| err(e.to_string()))?;
    let col = rdr
        .headers()
        .map_err(|e| err(e.to_string()))?
        .iter()
        .position(|h| h == "path")
        .ok_or_else(|| err("no `path` column".into()))?;
    let base = listing.parent().map(Path::to_path_buf).unwrap_or_default();
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| err(e.to_string()))?;
            let p = PathBuf::from(r.get(col).unwrap_or_default());
            Ok(if p.is_absolute() { p } else { base.join(p) })
        })
        .collect()
}

fn mix(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let signals = required(&cfg.mix.signals, "mix.signals", "--signals")?;
    let noises = required(&cfg.mix.noises, "mix.noises", "--noises")?;
    check_exist([signals, noises])?;
    let mut wavs = listed_paths(signals)?;
    wavs.extend(listed_paths(noises)?);
    check_exist(wavs.iter().map(PathBuf::as_path))?;

    let sig = read_bank_csv(signals, BankRole::Signal).map_err(|e| input_err(signals)(e.to_string()))?;
    let noi = read_bank_csv(noises, BankRole::Noise).map_err(|e| input_err(noises)(e.to_string()))?;
    let mut recipe = cfg.mix.recipe.clone();
    if let Some(s) = cfg.seed {
        recipe.seed = s;
    }
    let split = cfg.mix.split;
    let rows = build_dataset(sig.get(split), noi.get(split), &recipe, cfg.mix.count, split, &cfg.out_dir)
        .map_err(|e| CliError::Input(e.to_string()))?;

    let mut all = rows.clone();
    for other in Split::ALL.into_iter().filter(|s| *s != split) {
        let p = cfg.out_dir.join(manifest_file_name(other));
        if p.is_file() {
            all.extend(read_pair_manifest(&p).map_err(|e| CliError::Input(e.to_string()))?);
        }
    }
    check_split_hygiene(&all).map_err(|e| CliError::Input(e.to_string()))?;

    let recipe_text = toml::to_string(&recipe).map_err(|e| CliError::Config(e.to_string()))?;
    reefpam::io::atomic_write(&cfg.out_dir.join(format!("recipe_{split}.toml")), |f| {
        std::io::Write::write_all(f, recipe_text.as_bytes())
    })?;
    let mut log = RunLog::new("mix");
    for r in &rows {
        let snr = r.snr_db.map(|s| format!("{s:.3} dB")).unwrap_or_else(|| "undefined".into());
        log.ok(&r.noisy_path, format!("pair {} SNR {snr}; augments {}", r.pair_id, r.augments_applied));
    }
    finish(&log, cfg)
}

fn build_denoiser(d: &DenoiserConfig) -> Result<Box<dyn Denoiser>, CliError> {
    Ok(match d.kind {
        DenoiserKind::SpectralGate => Box::new(SpectralGateDenoiser {
            config: d.gate.clone(),
            profile: None,
        }),
        DenoiserKind::Identity => Box::new(IdentityDenoiser),
        DenoiserKind::Directory => {
            let dir = required(&d.dir, "denoise_eval.denoiser.dir", "--denoiser dir:<path>")?;
            check_exist([dir])?;
            Box::new(DirectoryDenoiser::new(d.id.clone().unwrap_or_else(|| "denoised".into()), dir))
        }
        DenoiserKind::Command => {
            let program = required(&d.program, "denoise_eval.denoiser.program", "--denoiser cmd:<program>")?;
            let id = d.id.clone().unwrap_or_else(|| {
                program
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "command".into())
            });
            Box::new(CommandDenoiser::new(id, program, d.args.clone()))
        }
    })
}

fn denoise_eval(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = &cfg.denoise_eval;
    let pairs_path = required(&c.pairs, "denoise_eval.pairs", "--pairs")?;
    check_exist([pairs_path])?;
    if c.snr_grid.is_empty() {
        return Err(CliError::Config("denoise_eval.snr_grid is empty".into()));
    }
    let root = pairs_path.parent().unwrap_or(Path::new("."));
    let pairs: Vec<_> = read_pair_manifest(pairs_path)
        .map_err(|e| input_err(pairs_path)(e.to_string()))?
        .iter()
        .map(|p| p.with_root(root))
        .collect();
    check_exist(
        pairs
            .iter()
            .flat_map(|p| [Path::new(&p.clean_path), Path::new(&p.noisy_path)]),
    )?;
    let mut den = build_denoiser(&c.denoiser)?;
    let report = evaluate_denoiser(&pairs, den.as_mut(), &c.snr_grid, &c.options)
        .map_err(|e| CliError::Input(e.to_string()))?;
    write_roc_csv(&cfg.out_dir.join(ROC_CSV), &report.curves)?;
    write_summary_csv(&cfg.out_dir.join(ROC_SUMMARY_CSV), &report.curves)?;
    let mut log = RunLog::new("denoise-eval");
    for cc in &report.curves {
        let auc = cc.curve.auc.map(|a| format!("{a:.4}")).unwrap_or_else(|| "undefined".into());
        log.ok(
            format!("{}@{}dB", cc.condition, cc.snr_db),
            format!("{} clips, AUC {auc}", cc.n_clips),
        );
    }
    for ex in &report.excluded {
        log.skipped(&ex.noisy_path, &ex.reason);
    }
    finish(&log, cfg)
}

/// Index series of the chosen processing state.
fn load_series(path: &Path, denoised: Option<bool>) -> Result<Vec<IndexSeries>, CliError> {
    let err = input_err(path);
    let mut recs: Vec<IndexRecord> = read_index_csv(path).map_err(&err)?;
    let flags: BTreeSet<bool> = recs.iter().map(|r| r.denoised_flag).collect();
    let flag = match denoised {
        Some(f) => f,
        None if flags.len() > 1 => {
            return Err(CliError::Config(format!(
                "{} holds raw and denoised rows; choose one with --denoised true|false",
                path.display()
            )))
        }
        None => flags.into_iter().next().unwrap_or(false),
    };
    recs.retain(|r| r.denoised_flag == flag);
    series_from_records(&recs).map_err(err)
}

fn load_transect(path: &Path) -> Result<Vec<TransectRecord>, CliError> {
    read_transect_csv(path).map_err(|e| input_err(path)(e.to_string()))
}

fn correlate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = &cfg.correlate;
    let idx = required(&c.index_csv, "correlate.index_csv", "--index-csv")?;
    let tr = required(&c.transect_csv, "correlate.transect_csv", "--transect-csv")?;
    check_exist([idx, tr])?;
    let series = load_series(idx, c.denoised)?;
    let transect = load_transect(tr)?;
    let mut log = RunLog::new("correlate");
    let mut rows = Vec::new();
    for kind in &c.kinds {
        let of_kind: Vec<IndexSeries> = series.iter().filter(|s| s.kind == *kind).cloned().collect();
        if of_kind.is_empty() {
            log.skipped(kind.as_str(), "no rows of this index");
            continue;
        }
        for mode in &c.modes {
            match correlate_index(&of_kind, &transect, *mode) {
                Ok(r) => {
                    let defined = r.iter().filter(|x| x.result.is_some()).count();
                    log.ok(format!("{kind}/{mode}"), format!("{defined} of {} correlations defined", r.len()));
                    rows.extend(r);
                }
                Err(e) => log.error(format!("{kind}/{mode}"), e.to_string()),
            }
        }
    }
    write_correlation_csv(&cfg.out_dir.join(CORRELATIONS_CSV), &rows)?;
    finish(&log, cfg)
}

fn composite(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = &cfg.composite;
    if !matches!(c.mode, CorrelationMode::Temporal | CorrelationMode::Spatial) {
        return Err(CliError::Config(format!("composite.mode must be temporal or spatial, not {}", c.mode)));
    }
    let idx = required(&c.index_csv, "composite.index_csv", "--index-csv")?;
    let tr = required(&c.transect_csv, "composite.transect_csv", "--transect-csv")?;
    check_exist([idx, tr])?;
    let series = load_series(idx, c.denoised)?;
    let transect = load_transect(tr)?;
    let mut log = RunLog::new("composite");
    let mut models = Vec::new();
    for p in &c.parameters {
        let fitted = composite_design(&series, &transect, c.mode, *p).and_then(|d| {
            fit_composite(&d.rows, &d.target, CompositeOptions { standardize: c.standardize })
        });
        match fitted {
            Ok(m) => {
                log.ok(
                    p.as_str(),
                    format!("n={} R={:.4} p={:.4e} condition={:.3e}", m.n, m.r, m.p, m.condition_number),
                );
                models.push((p.to_string(), m));
            }
            Err(e) => log.error(p.as_str(), e.to_string()),
        }
    }
    write_composite_csv(&cfg.out_dir.join(COMPOSITE_CSV), &models)?;
    finish(&log, cfg)
}

fn report(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let r = &cfg.report;
    let spec = ReportSpec {
        index_csv: r.index_csv.clone(),
        roc_csv: r.roc_csv.clone(),
        correlation_csv: r.correlation_csv.clone(),
        out_dir: cfg.out_dir.clone(),
        figures: r.figures.clone(),
        format: r.format,
        dpi: r.dpi,
    };
    let outcome = render(&spec).map_err(|e| match e {
        ReportError::MissingInputs(v) => CliError::MissingInputs(v),
        ReportError::Io(e) => CliError::Io(e),
        other => CliError::Config(other.to_string()),
    })?;
    let mut log = RunLog::new("report");
    for p in &outcome.written {
        log.ok(p.display().to_string(), "written");
    }
    for d in &outcome.diagnostics {
        let item = d
            .input
            .as_ref()
            .map(|p| p.display().to_string())
            .or(d.figure.map(|f| f.to_string()))
            .unwrap_or_default();
        log.error(item, d.to_string());
    }
    finish(&log, cfg)
}
