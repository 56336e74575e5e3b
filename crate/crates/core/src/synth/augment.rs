use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Parameter ranges for the three stochastic augmentations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentRanges {
    /// Pitch shift is drawn uniformly from ±this many semitones.
    pub pitch_semitones: f64,
    pub stretch_min: f64,
    pub stretch_max: f64,
    pub drive_min: f64,
    pub drive_max: f64,
}

impl Default for AugmentRanges {
    fn default() -> Self {
        Self {
            pitch_semitones: 2.0,
            stretch_min: 0.9,
            stretch_max: 1.1,
            drive_min: 1.0,
            drive_max: 4.0,
        }
    }
}

impl AugmentRanges {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.pitch_semitones >= 0.0 && self.pitch_semitones.is_finite()) {
            return Err(format!("pitch_semitones must be finite and >= 0, got {}", self.pitch_semitones));
        }
        if !(self.stretch_min > 0.0 && self.stretch_min <= self.stretch_max && self.stretch_max.is_finite()) {
            return Err(format!("bad stretch range [{}, {}]", self.stretch_min, self.stretch_max));
        }
        if !(self.drive_min > 0.0 && self.drive_min <= self.drive_max && self.drive_max.is_finite()) {
            return Err(format!("bad drive range [{}, {}]", self.drive_min, self.drive_max));
        }
        Ok(())
    }
}

/// Which augmentations to apply, with their drawn parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AugmentPlan {
    pub pitch_semitones: Option<f64>,
    pub stretch: Option<f64>,
    pub drive: Option<f64>,
}

impl AugmentPlan {
    /// Each augmentation is switched on independently with probability `prob`.
    pub fn draw<R: Rng>(rng: &mut R, prob: f64, ranges: &AugmentRanges) -> Self {
        let mut pick = |lo: f64, hi: f64| {
            let on = rng.random::<f64>() < prob;
            let v = if hi > lo { rng.random_range(lo..hi) } else { lo };
            on.then_some(v)
        };
        let p = ranges.pitch_semitones;
        Self {
            pitch_semitones: pick(-p, p),
            stretch: pick(ranges.stretch_min, ranges.stretch_max),
            drive: pick(ranges.drive_min, ranges.drive_max),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.pitch_semitones.is_none() && self.stretch.is_none() && self.drive.is_none()
    }

    /// Applies pitch shift, time stretch and tanh drive in that order; the
    /// output has the input's length.
    pub fn apply(&self, x: &[f64], sample_rate: u32) -> Vec<f64> {
        let mut y = x.to_vec();
        if let Some(st) = self.pitch_semitones {
            y = pitch_shift(&y, st, sample_rate);
        }
        if let Some(s) = self.stretch {
            y = time_stretch(&y, s, sample_rate);
            y.resize(x.len(), 0.0);
        }
        if let Some(d) = self.drive {
            y = tanh_drive(&y, d);
        }
        y
    }
}

impl fmt::Display for AugmentPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("none");
        }
        let mut parts = Vec::new();
        if let Some(v) = self.pitch_semitones {
            parts.push(format!("pitch={v:+.4}st"));
        }
        if let Some(v) = self.stretch {
            parts.push(format!("stretch={v:.4}"));
        }
        if let Some(v) = self.drive {
            parts.push(format!("tanh={v:.4}"));
        }
        f.write_str(&parts.join(";"))
    }
}

/// Soft clipping normalized so that ±1 maps to ±1.
pub fn tanh_drive(x: &[f64], drive: f64) -> Vec<f64> {
    let k = drive.tanh();
    x.iter().map(|v| (drive * v).tanh() / k).collect()
}

fn frame_len(sample_rate: u32) -> usize {
    // ~20 ms, even, at least 64 samples
    ((0.02 * sample_rate as f64 / 2.0).round() as usize * 2).max(64)
}

/// WSOLA time-scale modification: output duration is `factor` times the
/// input's, pitch unchanged.
pub fn time_stretch(x: &[f64], factor: f64, sample_rate: u32) -> Vec<f64> {
    let n = x.len();
    let out_len = (n as f64 * factor).round() as usize;
    if n == 0 || out_len == 0 {
        return vec![0.0; out_len];
    }
    let w = frame_len(sample_rate);
    let hs = w / 2;
    let ha = hs as f64 / factor;
    let tol = (w / 16).max(1) as isize;
    let win: Vec<f64> = (0..w).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / w as f64).cos()).collect();
    let at = |i: isize| if i >= 0 && (i as usize) < n { x[i as usize] } else { 0.0 };

    let mut y = vec![0.0; out_len + w];
    let mut norm = vec![0.0; out_len + w];
    let mut prev: isize = 0;
    let mut k = 0usize;
    while k * hs < out_len {
        let nominal = (k as f64 * ha).round() as isize;
        let pos = if k == 0 {
            0
        } else {
            // best match to the natural continuation of the previous frame
            let target = prev + hs as isize;
            let mut best = (f64::NEG_INFINITY, nominal);
            for d in -tol..=tol {
                let cand = nominal + d;
                let c: f64 = (0..hs).step_by(2).map(|j| at(target + j as isize) * at(cand + j as isize)).sum();
                if c > best.0 {
                    best = (c, cand);
                }
            }
            best.1
        };
        let out = k * hs;
        for j in 0..w {
            y[out + j] += win[j] * at(pos + j as isize);
            norm[out + j] += win[j];
        }
        prev = pos;
        k += 1;
    }
    y.truncate(out_len);
    for (v, g) in y.iter_mut().zip(&norm) {
        if *g > 1e-9 {
            *v /= g;
        }
    }
    y
}

fn resample_linear(x: &[f64], out_len: usize) -> Vec<f64> {
    if x.is_empty() {
        return vec![0.0; out_len];
    }
    let step = x.len() as f64 / out_len as f64;
    (0..out_len)
        .map(|i| {
            let p = i as f64 * step;
            let i0 = p.floor() as usize;
            let f = p - i0 as f64;
            let a = x[i0.min(x.len() - 1)];
            let b = if i0 + 1 < x.len() { x[i0 + 1] } else { 0.0 };
            a + f * (b - a)
        })
        .collect()
}

/// Shifts pitch by `semitones` keeping the length: stretch by the frequency
/// ratio, then resample back to the original sample count.
pub fn pitch_shift(x: &[f64], semitones: f64, sample_rate: u32) -> Vec<f64> {
    let ratio = 2f64.powf(semitones / 12.0);
    let stretched = time_stretch(x, ratio, sample_rate);
    resample_linear(&stretched, x.len())
}
