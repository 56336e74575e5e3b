use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AugmentPlan, AugmentRanges, BankRole, Result, SoundBank, Split, SynthError};
use crate::audio::AudioClip;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixRecipe {
    /// Number of superimposed signals is drawn uniformly from `[n_signals_min, n_signals_max]`.
    pub n_signals_min: usize,
    pub n_signals_max: usize,
    pub augment_prob: f64,
    pub segment_len_s: f64,
    /// Target clean-to-noise power ratio over the whole segment; `None` keeps native noise level.
    pub snr_db: Option<f64>,
    pub seed: u64,
    /// Tile noise entries shorter than the segment instead of rejecting them.
    pub allow_noise_loop: bool,
    pub augment: AugmentRanges,
}

impl Default for MixRecipe {
    fn default() -> Self {
        Self {
            n_signals_min: 1,
            n_signals_max: 5,
            augment_prob: 0.5,
            segment_len_s: 10.0,
            snr_db: None,
            seed: 0,
            allow_noise_loop: false,
            augment: AugmentRanges::default(),
        }
    }
}

impl MixRecipe {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SynthError::BadRecipe(m));
        if !(1..=5).contains(&self.n_signals_min) || !(1..=5).contains(&self.n_signals_max) {
            return bad(format!(
                "signal count range [{}, {}] must lie within [1, 5]",
                self.n_signals_min, self.n_signals_max
            ));
        }
        if self.n_signals_min > self.n_signals_max {
            return bad("n_signals_min exceeds n_signals_max".into());
        }
        if !(0.0..=1.0).contains(&self.augment_prob) {
            return bad(format!("augment_prob must be in [0, 1], got {}", self.augment_prob));
        }
        if !(self.segment_len_s > 0.0 && self.segment_len_s.is_finite()) {
            return bad(format!("segment_len_s must be positive, got {}", self.segment_len_s));
        }
        if self.snr_db.is_some_and(|s| !s.is_finite()) {
            return bad("snr_db must be finite".into());
        }
        self.augment.validate().map_err(SynthError::BadRecipe)
    }
}

/// One row of the pair manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct PairManifest {
    pub pair_id: u64,
    pub split: Split,
    pub clean_path: String,
    pub noisy_path: String,
    /// `id@offset` for each superimposed signal, offset in samples.
    pub signal_refs: Vec<String>,
    /// `id@offset` of the noise crop, or `id@loop` when tiled.
    pub noise_ref: String,
    pub augments_applied: String,
    /// Realized clean-to-noise ratio; `None` when either component is silent.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl PairManifest {
    /// Copy with relative clean/noisy paths resolved against `root`.
    pub fn with_root(&self, root: &std::path::Path) -> Self {
        let join = |p: &str| {
            let p = std::path::Path::new(p);
            if p.is_absolute() { p.to_path_buf() } else { root.join(p) }.to_string_lossy().into_owned()
        };
        Self {
            clean_path: join(&self.clean_path),
            noisy_path: join(&self.noisy_path),
            ..self.clone()
        }
    }

    /// Bank entry ids referenced by this pair.
    pub fn entry_ids(&self) -> impl Iterator<Item = &str> {
        self.signal_refs
            .iter()
            .chain(std::iter::once(&self.noise_ref))
            .map(|r| r.rsplit_once('@').map_or(r.as_str(), |(id, _)| id))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub clean: AudioClip,
    /// The scaled noise vector actually added.
    pub noise: Vec<f64>,
    pub noisy: AudioClip,
    pub manifest: PairManifest,
}

fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

fn check_bank(bank: &SoundBank, role: BankRole, split: Split) -> Result<()> {
    if bank.is_empty() {
        return Err(SynthError::EmptyBank(role));
    }
    if bank.split != split {
        return Err(SynthError::SplitMismatch {
            role,
            expected: split,
            found: bank.split,
        });
    }
    Ok(())
}

/// Synthesizes one noisy/clean pair of `recipe.segment_len_s` seconds.
///
/// Signals are placed at uniform offsets in `[0, l)` and truncated at the
/// segment end. Augmentation acts on the superimposed signal vector. The
/// noise is a uniformly placed crop of one noise entry.
pub fn make_pair<R: Rng>(signals: &SoundBank, noises: &SoundBank, recipe: &MixRecipe, split: Split, rng: &mut R) -> Result<Pair> {
    recipe.validate()?;
    check_bank(signals, BankRole::Signal, split)?;
    check_bank(noises, BankRole::Noise, split)?;
    let fs = signals.sample_rate().expect("non-empty bank");
    let noise_fs = noises.sample_rate().expect("non-empty bank");
    if noise_fs != fs {
        return Err(SynthError::SampleRateMismatch {
            id: noises.entries()[0].id.clone(),
            expected: fs,
            found: noise_fs,
        });
    }
    let l = (recipe.segment_len_s * fs as f64).round() as usize;
    if l == 0 {
        return Err(SynthError::BadRecipe("segment shorter than one sample".into()));
    }

    let n = rng.random_range(recipe.n_signals_min..=recipe.n_signals_max);
    let mut clean = vec![0.0; l];
    let mut signal_refs = Vec::with_capacity(n);
    for _ in 0..n {
        let e = &signals.entries()[rng.random_range(0..signals.len())];
        let offset = rng.random_range(0..l);
        for (c, s) in clean[offset..].iter_mut().zip(&e.clip.samples) {
            *c += s;
        }
        signal_refs.push(format!("{}@{offset}", e.id));
    }
    let plan = AugmentPlan::draw(rng, recipe.augment_prob, &recipe.augment);
    let clean = plan.apply(&clean, fs);

    let e = &noises.entries()[rng.random_range(0..noises.len())];
    let src = &e.clip.samples;
    let (mut noise, noise_ref) = if src.len() >= l {
        let off = rng.random_range(0..=src.len() - l);
        (src[off..off + l].to_vec(), format!("{}@{off}", e.id))
    } else if recipe.allow_noise_loop {
        (src.iter().copied().cycle().take(l).collect(), format!("{}@loop", e.id))
    } else {
        return Err(SynthError::NoiseTooShort {
            id: e.id.clone(),
            have: src.len(),
            need: l,
        });
    };

    let p_sig = power(&clean);
    let mut p_noise = power(&noise);
    if let Some(target) = recipe.snr_db {
        if p_sig > 0.0 && p_noise > 0.0 {
            let g = (p_sig / (p_noise * 10f64.powf(target / 10.0))).sqrt();
            noise.iter_mut().for_each(|v| *v *= g);
            p_noise = power(&noise);
        }
    }
    let snr_db = (p_sig > 0.0 && p_noise > 0.0).then(|| 10.0 * (p_sig / p_noise).log10());

    let noisy: Vec<f64> = clean.iter().zip(&noise).map(|(c, v)| c + v).collect();
    let clean = AudioClip::new(clean, fs)?;
    let noisy = clean.with_samples(noisy);
    Ok(Pair {
        clean,
        noise,
        noisy,
        manifest: PairManifest {
            pair_id: 0,
            split,
            clean_path: String::new(),
            noisy_path: String::new(),
            signal_refs,
            noise_ref,
            augments_applied: plan.to_string(),
            snr_db,
            seed: recipe.seed,
        },
    })
}
