//! Zero-phase Butterworth band filtering.
//!
//! The design is an 8th-order Butterworth prototype mapped to a bandpass
//! (16 poles, 8 biquads), or to a highpass when the upper edge sits exactly on
//! Nyquist. Filtering runs forward then backward over an odd-reflected pad so
//! the result has zero phase and the same length as the input.

use std::f64::consts::PI;
use std::fmt;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DspError;
use crate::audio::AudioClip;

pub const PROTOTYPE_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandName {
    Low,
    High,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub f_lo: f64,
    pub f_hi: f64,
    pub name: BandName,
}

impl BandSpec {
    pub fn new(f_lo: f64, f_hi: f64) -> Result<Self, DspError> {
        Self::named(f_lo, f_hi, BandName::Custom)
    }

    pub fn named(f_lo: f64, f_hi: f64, name: BandName) -> Result<Self, DspError> {
        if !(f_lo > 0.0 && f_hi > f_lo && f_hi.is_finite()) {
            return Err(DspError::BadBand { f_lo, f_hi });
        }
        Ok(Self { f_lo, f_hi, name })
    }

    /// 0.1-1 kHz, fish-dominated.
    pub fn low() -> Self {
        Self {
            f_lo: 100.0,
            f_hi: 1_000.0,
            name: BandName::Low,
        }
    }

    /// 1-48 kHz, snapping-shrimp-dominated. Some analyses use 1-20 kHz instead;
    /// build that with [`BandSpec::named`].
    pub fn high() -> Self {
        Self {
            f_lo: 1_000.0,
            f_hi: 48_000.0,
            name: BandName::High,
        }
    }

    /// Checks the band against a sample rate: `f_hi` may equal Nyquist (highpass realization) but not exceed it.
    pub fn validate_for(&self, sample_rate: u32) -> Result<(), DspError> {
        let nyq = sample_rate as f64 / 2.0;
        if self.f_lo >= nyq || self.f_hi > nyq {
            return Err(DspError::BeyondNyquist {
                f_lo: self.f_lo,
                f_hi: self.f_hi,
                nyquist: nyq,
            });
        }
        Ok(())
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.f_lo && f <= self.f_hi
    }
}

impl fmt::Display for BandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {}-{} Hz", self.name, self.f_lo, self.f_hi)
    }
}

/// Second-order section, `a0 == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z: Complex64) -> Complex64 {
        let zi = z.inv();
        let zi2 = zi * zi;
        (self.b[0] + self.b[1] * zi + self.b[2] * zi2) / (self.a[0] + self.a[1] * zi + self.a[2] * zi2)
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }

    /// Transposed direct-form II state that a constant unit input settles into.
    fn steady_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        [g - self.b[0], self.b[2] - self.a[2] * g]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
    pub sample_rate: u32,
}

impl SosFilter {
    pub fn butterworth(band: &BandSpec, sample_rate: u32) -> Result<Self, DspError> {
        band.validate_for(sample_rate)?;
        let fs = sample_rate as f64;
        let nyq = fs / 2.0;
        let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
        let bilinear = |s: Complex64| (2.0 * fs + s) / (2.0 * fs - s);
        // prototype poles in the upper half plane; conjugates are implied
        let proto: Vec<Complex64> = (0..PROTOTYPE_ORDER / 2)
            .map(|k| {
                let theta = PI * (2 * k + PROTOTYPE_ORDER + 1) as f64 / (2 * PROTOTYPE_ORDER) as f64;
                Complex64::from_polar(1.0, theta)
            })
            .collect();

        let section = |pole: Complex64, b: [f64; 3]| {
            let z = bilinear(pole);
            Biquad {
                b,
                a: [1.0, -2.0 * z.re, z.norm_sqr()],
            }
        };

        let (mut sections, norm_freq) = if band.f_hi >= nyq {
            let w1 = warp(band.f_lo);
            let sections: Vec<Biquad> = proto.iter().map(|&p| section(w1 / p, [1.0, -2.0, 1.0])).collect();
            (sections, PI)
        } else {
            let w1 = warp(band.f_lo);
            let w2 = warp(band.f_hi);
            let bw = w2 - w1;
            let w0sq = w1 * w2;
            let mut sections = Vec::with_capacity(PROTOTYPE_ORDER);
            for &p in &proto {
                let half = p * (bw / 2.0);
                let disc = (half * half - w0sq).sqrt();
                for s in [half + disc, half - disc] {
                    // both roots of each upper-half-plane prototype pole have the same sign of Im
                    let s = if s.im < 0.0 { s.conj() } else { s };
                    sections.push(section(s, [1.0, 0.0, -1.0]));
                }
            }
            let centre = 2.0 * (w0sq.sqrt() / (2.0 * fs)).atan();
            (sections, centre)
        };
        let z = Complex64::from_polar(1.0, norm_freq);
        for s in &mut sections {
            let g = s.response(z).norm();
            for b in &mut s.b {
                *b /= g;
            }
        }
        Ok(Self { sections, sample_rate })
    }

    /// Magnitude response at `f` Hz.
    pub fn magnitude(&self, f: f64) -> f64 {
        let z = Complex64::from_polar(1.0, 2.0 * PI * f / self.sample_rate as f64);
        self.sections.iter().map(|s| s.response(z)).product::<Complex64>().norm()
    }

    /// Causal single pass, starting from the steady state for a constant input of `x[0]`.
    fn run(&self, x: &mut [f64]) {
        let Some(&x0) = x.first() else { return };
        let mut level = x0;
        for s in &self.sections {
            let ss = s.steady_state();
            let (mut z1, mut z2) = (ss[0] * level, ss[1] * level);
            level *= s.dc_gain();
            let [b0, b1, b2] = s.b;
            let [_, a1, a2] = s.a;
            for v in x.iter_mut() {
                let input = *v;
                let y = b0 * input + z1;
                z1 = b1 * input - a1 * y + z2;
                z2 = b2 * input - a2 * y;
                *v = y;
            }
        }
    }

    fn pad_len(&self, n: usize, f_lo: f64) -> usize {
        let settle = (3.0 * self.sample_rate as f64 / f_lo).ceil() as usize;
        settle.max(6 * self.sections.len() + 3).min(n.saturating_sub(1))
    }

    /// Forward-backward filtering over an odd-reflected pad.
    pub fn filtfilt(&self, x: &[f64], f_lo: f64) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = self.pad_len(n, f_lo);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        let (first, last) = (x[0], x[n - 1]);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));
        self.run(&mut ext);
        ext.reverse();
        self.run(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

/// Zero-phase band filtering; output length equals input length.
pub fn bandpass(clip: &AudioClip, band: &BandSpec) -> Result<AudioClip, DspError> {
    let filt = SosFilter::butterworth(band, clip.sample_rate)?;
    Ok(clip.with_samples(filt.filtfilt(&clip.samples, band.f_lo)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, fs: u32, secs: f64) -> Vec<f64> {
        (0..(secs * fs as f64) as usize)
            .map(|i| (2.0 * PI * freq * i as f64 / fs as f64).sin())
            .collect()
    }

    fn mid_rms(x: &[f64]) -> f64 {
        let q = x.len() / 4;
        crate::audio::rms(&x[q..x.len() - q])
    }

    fn db(x: f64) -> f64 {
        20.0 * x.log10()
    }

    #[test]
    fn design_is_stable() {
        for (band, fs) in [(BandSpec::low(), 96_000), (BandSpec::high(), 96_000), (BandSpec::new(1000.0, 20_000.0).unwrap(), 96_000)] {
            let f = SosFilter::butterworth(&band, fs).unwrap();
            for s in &f.sections {
                // poles inside the unit circle
                assert!(s.a[2] < 1.0 && s.a[2] > 0.0, "{band}: {:?}", s.a);
            }
        }
    }

    #[test]
    fn single_pass_attenuation_one_octave_out() {
        let f = SosFilter::butterworth(&BandSpec::low(), 96_000).unwrap();
        assert!((db(f.magnitude(316.0))).abs() < 0.01);
        // forward-backward doubles the single-pass attenuation in dB
        assert!(2.0 * db(f.magnitude(2_000.0)) < -60.0);
        assert!(2.0 * db(f.magnitude(50.0)) < -60.0);
        let h = SosFilter::butterworth(&BandSpec::high(), 96_000).unwrap();
        assert!(2.0 * db(h.magnitude(500.0)) < -60.0);
        assert!(db(h.magnitude(10_000.0)).abs() < 0.01);
    }

    #[test]
    fn in_band_tone_preserved() {
        let x = tone(500.0, 96_000, 1.0);
        let clip = AudioClip::new(x.clone(), 96_000).unwrap();
        let y = bandpass(&clip, &BandSpec::low()).unwrap();
        assert_eq!(y.len(), x.len());
        let loss = db(mid_rms(&y.samples) / mid_rms(&x));
        assert!(loss.abs() < 0.5, "{loss}");
        // zero phase: the output tracks the input sample-for-sample mid-clip
        let q = x.len() / 2;
        for i in q..q + 200 {
            assert!((x[i] - y.samples[i]).abs() < 0.01);
        }
    }

    #[test]
    fn stopband_tone_rejected() {
        let clip = AudioClip::new(tone(5_000.0, 96_000, 1.0), 96_000).unwrap();
        let y = bandpass(&clip, &BandSpec::low()).unwrap();
        let att = db(mid_rms(&y.samples) / mid_rms(&clip.samples));
        assert!(att < -60.0, "{att}");
    }

    #[test]
    fn superposition_of_in_and_out_of_band() {
        let a = tone(500.0, 96_000, 1.0);
        let b = tone(5_000.0, 96_000, 1.0);
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let ya = bandpass(&AudioClip::new(a, 96_000).unwrap(), &BandSpec::low()).unwrap();
        let ym = bandpass(&AudioClip::new(mix, 96_000).unwrap(), &BandSpec::low()).unwrap();
        let ratio = 2.0 * db(mid_rms(&ym.samples) / mid_rms(&ya.samples));
        assert!(ratio.abs() < 0.5, "{ratio}");
    }

    #[test]
    fn idempotent_in_band() {
        let clip = AudioClip::new(tone(400.0, 48_000, 1.0), 48_000).unwrap();
        let once = bandpass(&clip, &BandSpec::low()).unwrap();
        let twice = bandpass(&once, &BandSpec::low()).unwrap();
        let d = db(mid_rms(&twice.samples) / mid_rms(&once.samples));
        assert!(d.abs() < 0.1, "{d}");
    }

    #[test]
    fn band_validation() {
        assert!(BandSpec::new(0.0, 100.0).is_err());
        assert!(BandSpec::new(200.0, 100.0).is_err());
        let clip = AudioClip::new(vec![0.0; 100], 48_000).unwrap();
        // 1-48 kHz exceeds Nyquist at 48 kHz
        assert!(matches!(bandpass(&clip, &BandSpec::high()), Err(DspError::BeyondNyquist { .. })));
        assert!(bandpass(&clip, &BandSpec::new(24_000.0, 30_000.0).unwrap()).is_err());
        // upper edge exactly at Nyquist is a highpass
        assert!(bandpass(&clip, &BandSpec::new(1_000.0, 24_000.0).unwrap()).is_ok());
    }

    #[test]
    fn dc_offset_is_removed_without_edge_blowup() {
        let clip = AudioClip::new(vec![1.0; 20_000], 16_000).unwrap();
        let y = bandpass(&clip, &BandSpec::new(100.0, 1000.0).unwrap()).unwrap();
        assert!(y.samples.iter().all(|v| v.abs() < 1e-6));
    }
}
