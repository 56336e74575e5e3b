use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    average_curves, decimate_envelope, label_signal_events, linear_grid, normalize_envelope, roc, threshold_grid, Denoiser,
    EvalError, Result, RocCurve,
};
use crate::audio::{read_wav, AudioClip};
use crate::dsp::{hilbert_envelope, Envelope};
use crate::io::write_csv_records;
use crate::synth::PairManifest;

/// Condition label of the unprocessed baseline curves.
pub const NOISY_CONDITION: &str = "noisy";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Concatenate normalized envelopes of all clips, then sweep once.
    #[default]
    Pooled,
    /// Sweep each clip on the linear grid and average rates per threshold.
    PerClip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalOptions {
    pub pooling: Pooling,
    /// Envelope rate before the sweep; `None` keeps the audio rate.
    pub decimate_hz: Option<f64>,
    /// A pair belongs to grid SNR `g` when its realized SNR is within this of `g`.
    pub snr_tolerance_db: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            pooling: Pooling::Pooled,
            decimate_hz: Some(1000.0),
            snr_tolerance_db: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCurve {
    /// `noisy` or the denoiser id.
    pub condition: String,
    pub snr_db: f64,
    pub n_clips: usize,
    pub curve: RocCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub pair_id: u64,
    pub noisy_path: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    /// For each SNR in grid order: the noisy curve, then the denoised curve.
    pub curves: Vec<ConditionCurve>,
    pub excluded: Vec<Exclusion>,
}

impl EvalReport {
    pub fn curve(&self, condition: &str, snr_db: f64) -> Option<&ConditionCurve> {
        self.curves.iter().find(|c| c.condition == condition && c.snr_db == snr_db)
    }
}

struct ClipEnvelopes {
    mask: Vec<bool>,
    noisy: Vec<f64>,
    denoised: Vec<f64>,
}

fn prepared(env: Envelope, decimate_hz: Option<f64>) -> Vec<f64> {
    let env = match decimate_hz {
        Some(hz) => decimate_envelope(&env, hz),
        None => env,
    };
    normalize_envelope(&env).values
}

fn process(pair: &PairManifest, denoiser: &dyn Denoiser, opts: &EvalOptions) -> std::result::Result<ClipEnvelopes, String> {
    let clean = read_wav(Path::new(&pair.clean_path), None).map_err(|e| e.to_string())?;
    let noisy_path = Path::new(&pair.noisy_path);
    let noisy = read_wav(noisy_path, None).map_err(|e| e.to_string())?;
    if clean.len() != noisy.len() {
        return Err(format!("clean has {} samples, noisy {}", clean.len(), noisy.len()));
    }
    let denoised: AudioClip = denoiser.denoise(noisy_path, &noisy).map_err(|e| e.to_string())?;
    if denoised.len() != noisy.len() {
        return Err(format!(
            "denoiser {} returned {} samples for {} input samples",
            denoiser.id(),
            denoised.len(),
            noisy.len()
        ));
    }
    let env = |c: &AudioClip| hilbert_envelope(c).map(|e| prepared(e, opts.decimate_hz)).map_err(|e| e.to_string());
    let clean_env = env(&clean)?;
    let mask = label_signal_events(&Envelope {
        values: clean_env,
        sample_rate: clean.sample_rate,
    });
    Ok(ClipEnvelopes {
        mask,
        noisy: env(&noisy)?,
        denoised: env(&denoised)?,
    })
}

fn sweep(clips: &[&ClipEnvelopes], pick: fn(&ClipEnvelopes) -> &[f64], pooling: Pooling) -> Result<RocCurve> {
    match pooling {
        Pooling::Pooled => {
            let test: Vec<f64> = clips.iter().flat_map(|c| pick(c).iter().copied()).collect();
            let mask: Vec<bool> = clips.iter().flat_map(|c| c.mask.iter().copied()).collect();
            roc(&test, &mask, &threshold_grid(&test))
        }
        Pooling::PerClip => {
            let grid = linear_grid();
            let curves = clips
                .iter()
                .map(|c| roc(pick(c), &c.mask, &grid))
                .collect::<Result<Vec<_>>>()?;
            average_curves(&curves)
        }
    }
}

/// Scores `denoiser` on `pairs` (paths already resolved) at each SNR of
/// `snr_grid`, producing a noisy-baseline and a denoised curve per SNR.
///
/// Pairs whose realized SNR matches no grid value, whose audio cannot be
/// read, or whose denoised output changes length are excluded and reported.
pub fn evaluate_denoiser(
    pairs: &[PairManifest],
    denoiser: &mut dyn Denoiser,
    snr_grid: &[f64],
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let mut report = EvalReport::default();
    let mut assigned: Vec<(usize, &PairManifest)> = Vec::new();
    for p in pairs {
        let slot = p
            .snr_db
            .and_then(|s| snr_grid.iter().position(|g| (s - g).abs() <= opts.snr_tolerance_db));
        match slot {
            Some(i) => assigned.push((i, p)),
            None => report.excluded.push(Exclusion {
                pair_id: p.pair_id,
                noisy_path: p.noisy_path.clone(),
                reason: match p.snr_db {
                    Some(s) => format!("realized SNR {s:.2} dB is not on the evaluation grid"),
                    None => "pair has no defined SNR".into(),
                },
            }),
        }
    }
    let paths: Vec<PathBuf> = assigned.iter().map(|(_, p)| PathBuf::from(&p.noisy_path)).collect();
    denoiser.prepare(&paths)?;
    let den: &dyn Denoiser = denoiser;

    let results: Vec<_> = assigned.par_iter().map(|(_, p)| process(p, den, opts)).collect();
    let mut by_snr: Vec<Vec<ClipEnvelopes>> = snr_grid.iter().map(|_| Vec::new()).collect();
    for ((slot, p), r) in assigned.iter().zip(results) {
        match r {
            Ok(c) => by_snr[*slot].push(c),
            Err(reason) => {
                log::warn!("pair {} excluded: {reason}", p.pair_id);
                report.excluded.push(Exclusion {
                    pair_id: p.pair_id,
                    noisy_path: p.noisy_path.clone(),
                    reason,
                });
            }
        }
    }
    report.excluded.sort_by_key(|e| e.pair_id);

    for (snr, clips) in snr_grid.iter().zip(&by_snr) {
        if clips.is_empty() {
            log::warn!("no usable pairs at {snr} dB SNR");
            continue;
        }
        let refs: Vec<&ClipEnvelopes> = clips.iter().collect();
        for (condition, pick) in [
            (NOISY_CONDITION, (|c: &ClipEnvelopes| c.noisy.as_slice()) as fn(&ClipEnvelopes) -> &[f64]),
            (den.id(), |c: &ClipEnvelopes| c.denoised.as_slice()),
        ] {
            report.curves.push(ConditionCurve {
                condition: condition.to_string(),
                snr_db: *snr,
                n_clips: clips.len(),
                curve: sweep(&refs, pick, opts.pooling)?,
            });
        }
    }
    if report.curves.is_empty() {
        return Err(EvalError::Empty("no pair could be evaluated".into()));
    }
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Columns: condition, snr_db, threshold, tpr, fpr (empty when undefined).
pub fn write_roc_csv(path: &Path, curves: &[ConditionCurve]) -> std::io::Result<()> {
    let rows: Vec<Vec<String>> = curves
        .iter()
        .flat_map(|c| {
            c.curve.points.iter().map(move |p| {
                vec![c.condition.clone(), c.snr_db.to_string(), p.threshold.to_string(), opt(p.tpr), opt(p.fpr)]
            })
        })
        .collect();
    write_csv_records(path, &["condition", "snr_db", "threshold", "tpr", "fpr"], &rows)
}

/// Columns: condition, snr_db, auc (empty when undefined).
pub fn write_summary_csv(path: &Path, curves: &[ConditionCurve]) -> std::io::Result<()> {
    let rows: Vec<Vec<String>> = curves
        .iter()
        .map(|c| vec![c.condition.clone(), c.snr_db.to_string(), opt(c.curve.auc)])
        .collect();
    write_csv_records(path, &["condition", "snr_db", "auc"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{DirectoryDenoiser, IdentityDenoiser, SpectralGateDenoiser};
    use crate::synth::{build_dataset, BankEntry, BankRole, MixRecipe, SoundBank, Split};
    use rand::SeedableRng;

    const FS: u32 = 8000;

    fn dataset(dir: &Path, snr: f64, count: usize) -> Vec<PairManifest> {
        let calls = (0..4)
            .map(|i| {
                let c = crate::synthetic::fish_call(FS, 0.4 + 0.1 * i as f64, 120.0 + 60.0 * i as f64, 4, 0.3);
                BankEntry::new(format!("call{i}"), "synthetic", c)
            })
            .collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let noise = (0..2)
            .map(|i| BankEntry::new(format!("ship{i}"), "synthetic", crate::synthetic::ship_noise(FS, 8.0, 300.0, &mut rng).scaled(0.1)))
            .collect();
        let s = SoundBank::new(BankRole::Signal, Split::Test, calls).unwrap();
        let n = SoundBank::new(BankRole::Noise, Split::Test, noise).unwrap();
        let recipe = MixRecipe {
            segment_len_s: 4.0,
            snr_db: Some(snr),
            n_signals_max: 2,
            seed: 3,
            ..Default::default()
        };
        build_dataset(&s, &n, &recipe, count, Split::Test, dir)
            .unwrap()
            .iter()
            .map(|m| m.with_root(dir))
            .collect()
    }

    #[test]
    fn oracle_scores_one_and_identity_matches_baseline() {
        let d = tempfile::tempdir().unwrap();
        let pairs = dataset(d.path(), 0.0, 4);
        let mut oracle = DirectoryDenoiser::new("oracle", d.path().join("clean"));
        let r = evaluate_denoiser(&pairs, &mut oracle, &[0.0], &EvalOptions::default()).unwrap();
        assert_eq!(r.curve("oracle", 0.0).unwrap().curve.auc, Some(1.0));
        assert!(r.excluded.is_empty());

        let r = evaluate_denoiser(&pairs, &mut IdentityDenoiser, &[0.0], &EvalOptions::default()).unwrap();
        let noisy = &r.curve(NOISY_CONDITION, 0.0).unwrap().curve;
        let den = &r.curve("identity", 0.0).unwrap().curve;
        assert_eq!(noisy, den);
        assert!(noisy.is_monotone());
    }

    #[test]
    fn gate_improves_detection() {
        let d = tempfile::tempdir().unwrap();
        let pairs = dataset(d.path(), -5.0, 6);
        let r = evaluate_denoiser(&pairs, &mut SpectralGateDenoiser::default(), &[-5.0], &EvalOptions::default()).unwrap();
        let a_noisy = r.curve(NOISY_CONDITION, -5.0).unwrap().curve.auc.unwrap();
        let a_den = r.curve("spectral_gate", -5.0).unwrap().curve.auc.unwrap();
        assert!(a_den > a_noisy, "{a_noisy} -> {a_den}");
    }

    #[test]
    fn per_clip_mode_and_exclusions() {
        let d = tempfile::tempdir().unwrap();
        let mut pairs = dataset(d.path(), 5.0, 3);
        pairs[1].snr_db = Some(20.0);
        // truncated denoiser output for pair 2
        let out = d.path().join("den");
        std::fs::create_dir_all(&out).unwrap();
        for p in &pairs {
            let clip = read_wav(Path::new(&p.noisy_path), None).unwrap();
            let clip = if p.pair_id == 2 { clip.with_samples(clip.samples[..100].to_vec()) } else { clip };
            crate::audio::write_wav(&out.join(Path::new(&p.noisy_path).file_name().unwrap()), &clip, None).unwrap();
        }
        let opts = EvalOptions {
            pooling: Pooling::PerClip,
            ..Default::default()
        };
        let r = evaluate_denoiser(&pairs, &mut DirectoryDenoiser::new("dir", &out), &[5.0], &opts).unwrap();
        assert_eq!(r.excluded.iter().map(|e| e.pair_id).collect::<Vec<_>>(), vec![1, 2]);
        let c = r.curve("dir", 5.0).unwrap();
        assert_eq!(c.n_clips, 1);
        assert_eq!(c.curve.points.len(), 512);
        assert_eq!(c.curve, r.curve(NOISY_CONDITION, 5.0).unwrap().curve);
    }

    #[test]
    fn csv_outputs() {
        let d = tempfile::tempdir().unwrap();
        let pairs = dataset(d.path(), 0.0, 2);
        let r = evaluate_denoiser(&pairs, &mut IdentityDenoiser, &[0.0], &EvalOptions::default()).unwrap();
        let roc_path = d.path().join("roc.csv");
        let sum_path = d.path().join("summary.csv");
        write_roc_csv(&roc_path, &r.curves).unwrap();
        write_summary_csv(&sum_path, &r.curves).unwrap();
        let roc_text = std::fs::read_to_string(roc_path).unwrap();
        assert!(roc_text.starts_with("condition,snr_db,threshold,tpr,fpr\n"));
        let n_points: usize = r.curves.iter().map(|c| c.curve.points.len()).sum();
        assert_eq!(roc_text.lines().count(), n_points + 1);
        let sum = std::fs::read_to_string(sum_path).unwrap();
        assert_eq!(sum.lines().next().unwrap(), "condition,snr_db,auc");
        assert_eq!(sum.lines().count(), 3);
    }
}
