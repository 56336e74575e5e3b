use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::audio::AudioClip;

/// Spectral gate parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateConfig {
    /// Frame length target; rounded up to a power of two in samples.
    pub frame_s: f64,
    /// Fraction of lowest-energy frames averaged into the noise floor.
    pub quiet_fraction: f64,
    /// Width of the median filter smoothing the floor across bins (odd).
    pub smooth_bins: usize,
    /// Power over-subtraction factor.
    pub oversubtraction: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            frame_s: 0.02,
            quiet_fraction: 0.1,
            smooth_bins: 15,
            oversubtraction: 4.0,
        }
    }
}

impl GateConfig {
    fn frame_len(&self, sample_rate: u32) -> usize {
        ((self.frame_s * sample_rate as f64).round() as usize).max(16).next_power_of_two()
    }
}

/// Per-bin noise power for one frame length.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    pub frame_len: usize,
    /// One value per one-sided bin (`frame_len / 2 + 1`).
    pub power: Vec<f64>,
}

struct Stft {
    frames: Vec<Vec<Complex64>>,
    frame_len: usize,
    hop: usize,
    n: usize,
}

fn hann(w: usize) -> Vec<f64> {
    (0..w).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / w as f64).cos()).collect()
}

/// Hann-windowed STFT with hop `w/4` over the signal padded by one frame on each side.
fn stft(x: &[f64], w: usize) -> Stft {
    let hop = w / 4;
    let win = hann(w);
    let fft = FftPlanner::new().plan_fft_forward(w);
    let padded_len = x.len() + 2 * w;
    let at = |i: usize| if i >= w && i - w < x.len() { x[i - w] } else { 0.0 };
    let frames = (0..)
        .map(|k| k * hop)
        .take_while(|s| s + w <= padded_len)
        .map(|s| {
            let mut buf: Vec<Complex64> = (0..w).map(|j| Complex64::new(at(s + j) * win[j], 0.0)).collect();
            fft.process(&mut buf);
            buf
        })
        .collect();
    Stft {
        frames,
        frame_len: w,
        hop,
        n: x.len(),
    }
}

/// Inverse STFT by weighted overlap-add with a Hann synthesis window.
fn istft(s: Stft) -> Vec<f64> {
    let w = s.frame_len;
    let win = hann(w);
    let ifft = FftPlanner::new().plan_fft_inverse(w);
    let len = s.n + 2 * w;
    let mut y = vec![0.0; len];
    let mut norm = vec![0.0; len];
    for (k, mut buf) in s.frames.into_iter().enumerate() {
        ifft.process(&mut buf);
        let start = k * s.hop;
        for j in 0..w {
            y[start + j] += buf[j].re / w as f64 * win[j];
            norm[start + j] += win[j] * win[j];
        }
    }
    y[w..w + s.n]
        .iter()
        .zip(&norm[w..w + s.n])
        .map(|(v, g)| if *g > 1e-12 { v / g } else { 0.0 })
        .collect()
}

fn median_smooth(v: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(v.len());
            let mut win = v[lo..hi].to_vec();
            let mid = win.len() / 2;
            *win.select_nth_unstable_by(mid, f64::total_cmp).1
        })
        .collect()
}

fn one_sided(frame: &[Complex64]) -> impl Iterator<Item = f64> + '_ {
    frame[..frame.len() / 2 + 1].iter().map(|z| z.norm_sqr())
}

impl NoiseProfile {
    /// Mean per-bin power over the quietest frames of `clip`, median-smoothed
    /// across bins so narrow stationary tones are not taken for noise.
    pub fn estimate(clip: &AudioClip, cfg: &GateConfig) -> Self {
        let w = cfg.frame_len(clip.sample_rate);
        Self::from_stft(&stft(&clip.samples, w), cfg)
    }

    fn from_stft(s: &Stft, cfg: &GateConfig) -> Self {
        let bins = s.frame_len / 2 + 1;
        // frames fully inside the signal, so padding does not pose as silence
        let inner: Vec<&Vec<Complex64>> = s
            .frames
            .iter()
            .enumerate()
            .filter(|(k, _)| k * s.hop >= s.frame_len && k * s.hop + s.frame_len <= s.n + s.frame_len)
            .map(|(_, f)| f)
            .collect();
        let pool: Vec<&Vec<Complex64>> = if inner.is_empty() { s.frames.iter().collect() } else { inner };
        let mut energy: Vec<(f64, usize)> = pool.iter().enumerate().map(|(i, f)| (one_sided(f).sum(), i)).collect();
        energy.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let take = ((pool.len() as f64 * cfg.quiet_fraction).ceil() as usize).clamp(1, pool.len());
        let mut power = vec![0.0; bins];
        for &(_, i) in &energy[..take] {
            for (p, v) in power.iter_mut().zip(one_sided(pool[i])) {
                *p += v / take as f64;
            }
        }
        Self {
            frame_len: s.frame_len,
            power: median_smooth(&power, cfg.smooth_bins.max(1) | 1),
        }
    }
}

/// Stationary-noise suppression by STFT magnitude gating: each bin keeps
/// gain `sqrt(1 - γ·floor/P)` (zero when negative), where `floor` is the
/// noise profile and `P` the bin's power in that frame. Output length equals
/// input length.
pub fn spectral_gate_denoise(clip: &AudioClip, profile: Option<&NoiseProfile>, cfg: &GateConfig) -> Result<AudioClip> {
    if clip.duration_s() < 1.0 {
        return Err(EvalError::ClipTooShort(clip.duration_s()));
    }
    let w = cfg.frame_len(clip.sample_rate);
    let mut s = stft(&clip.samples, w);
    let estimated;
    let floor = match profile {
        Some(p) if p.frame_len != w => {
            return Err(EvalError::ProfileMismatch {
                got: p.frame_len,
                want: w,
            })
        }
        Some(p) => &p.power,
        None => {
            estimated = NoiseProfile::from_stft(&s, cfg);
            &estimated.power
        }
    };
    let half = w / 2;
    for frame in &mut s.frames {
        for k in 0..=half {
            let p = frame[k].norm_sqr();
            let g = if p > cfg.oversubtraction * floor[k] {
                (1.0 - cfg.oversubtraction * floor[k] / p).sqrt()
            } else {
                0.0
            };
            frame[k] *= g;
            if k != 0 && k != half {
                frame[w - k] *= g;
            }
        }
    }
    Ok(clip.with_samples(istft(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    const FS: u32 = 8000;

    fn power(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }

    fn tone(f: f64, n: usize, a: f64) -> Vec<f64> {
        (0..n).map(|i| a * (2.0 * PI * f * i as f64 / FS as f64).sin()).collect()
    }

    fn db(x: f64) -> f64 {
        10.0 * x.log10()
    }

    #[test]
    fn stft_round_trip_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x = crate::synthetic::white_noise(9001, 1.0, &mut rng);
        let y = istft(stft(&x, 256));
        assert_eq!(y.len(), x.len());
        assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn clean_tone_passes() {
        let x = tone(1000.0, 16_000, 0.5);
        let clip = AudioClip::new(x.clone(), FS).unwrap();
        let y = spectral_gate_denoise(&clip, None, &GateConfig::default()).unwrap();
        assert_eq!(y.len(), x.len());
        // tone-bin power, away from the edges
        let change = db(power(&y.samples[1000..15000]) / power(&x[1000..15000]));
        assert!(change.abs() < 1.0, "{change} dB");
    }

    #[test]
    fn stationary_noise_is_suppressed() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x = crate::synthetic::white_noise(40_000, 0.1, &mut rng);
        let clip = AudioClip::new(x.clone(), FS).unwrap();
        let y = spectral_gate_denoise(&clip, None, &GateConfig::default()).unwrap();
        let drop = db(power(&x) / power(&y.samples));
        assert!(drop >= 10.0, "{drop} dB");
    }

    #[test]
    fn tone_in_noise_snr_improves() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let s = tone(700.0, 40_000, 2f64.sqrt() * 0.1);
        let n = crate::synthetic::white_noise(40_000, 0.1, &mut rng);
        let x: Vec<f64> = s.iter().zip(&n).map(|(a, b)| a + b).collect();
        let snr_in = db(power(&s) / power(&n));
        assert!(snr_in.abs() < 0.2);
        let y = spectral_gate_denoise(&AudioClip::new(x, FS).unwrap(), None, &GateConfig::default()).unwrap();
        let err: Vec<f64> = y.samples.iter().zip(&s).map(|(a, b)| a - b).collect();
        let snr_out = db(power(&s) / power(&err));
        assert!(snr_out - snr_in >= 6.0, "{snr_in} -> {snr_out}");
    }

    #[test]
    fn supplied_profile() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let cfg = GateConfig::default();
        let noise = AudioClip::new(crate::synthetic::white_noise(16_000, 0.1, &mut rng), FS).unwrap();
        let prof = NoiseProfile::estimate(&noise, &cfg);
        assert_eq!(prof.frame_len, 256);
        assert_eq!(prof.power.len(), 129);
        let x = AudioClip::new(crate::synthetic::white_noise(16_000, 0.1, &mut rng), FS).unwrap();
        let y = spectral_gate_denoise(&x, Some(&prof), &cfg).unwrap();
        assert!(db(power(&x.samples) / power(&y.samples)) >= 10.0);
        let wrong = NoiseProfile {
            frame_len: 512,
            power: vec![0.0; 257],
        };
        assert!(matches!(spectral_gate_denoise(&x, Some(&wrong), &cfg), Err(EvalError::ProfileMismatch { .. })));
    }

    #[test]
    fn short_clip_rejected() {
        let c = AudioClip::new(vec![0.0; 100], FS).unwrap();
        assert!(matches!(spectral_gate_denoise(&c, None, &GateConfig::default()), Err(EvalError::ClipTooShort(_))));
    }
}
