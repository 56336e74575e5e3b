//! Synthetic fixtures with known ground truth: snapping-shrimp snap trains,
//! tone-complex fish calls and stationary ship-like noise.
//!
//! A planted snap is a damped oscillation (carrier ≈ 8 kHz, 1.5 ms decay), so
//! its Hilbert envelope is a clean exponential decaying from the onset.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::audio::AudioClip;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapTrain {
    pub sample_rate: u32,
    pub duration_s: f64,
    pub noise_sigma: f64,
    /// Peak snap amplitude in the same units as the noise.
    pub amplitude: f64,
    pub decay_s: f64,
    pub carrier_hz: f64,
}

impl Default for SnapTrain {
    fn default() -> Self {
        Self {
            sample_rate: 96_000,
            duration_s: 60.0,
            noise_sigma: 1.0,
            amplitude: 20.0,
            decay_s: 0.0015,
            carrier_hz: 8_000.0,
        }
    }
}

/// Homogeneous Poisson arrival times on `[0, duration_s)`.
pub fn poisson_times<R: Rng>(rate: f64, duration_s: f64, rng: &mut R) -> Vec<f64> {
    let exp = Exp::new(rate).expect("rate must be positive");
    let mut t = 0.0;
    let mut out = Vec::new();
    loop {
        t += exp.sample(rng);
        if t >= duration_s {
            return out;
        }
        out.push(t);
    }
}

/// Gaussian noise plus one damped oscillation starting at each of `times`.
pub fn snap_train<R: Rng>(p: &SnapTrain, times: &[f64], rng: &mut R) -> AudioClip {
    let fs = p.sample_rate as f64;
    let n = (p.duration_s * fs).round() as usize;
    let mut x = white_noise(n, p.noise_sigma, rng);
    let len = (8.0 * p.decay_s * fs).ceil() as usize;
    let kernel: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 / fs;
            p.amplitude * (-t / p.decay_s).exp() * (2.0 * PI * p.carrier_hz * t).cos()
        })
        .collect();
    for &t in times {
        let start = (t * fs).round() as usize;
        for (v, k) in x.iter_mut().skip(start).zip(&kernel) {
            *v += k;
        }
    }
    AudioClip::new(x, p.sample_rate).expect("non-empty snap train")
}

pub fn white_noise<R: Rng>(n: usize, sigma: f64, rng: &mut R) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; n];
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    (0..n).map(|_| normal.sample(rng)).collect()
}

/// Harmonic tone complex under a Hann envelope, like a fish "honk" or "drum".
pub fn fish_call(sample_rate: u32, duration_s: f64, f0: f64, harmonics: usize, amplitude: f64) -> AudioClip {
    let fs = sample_rate as f64;
    let n = ((duration_s * fs).round() as usize).max(1);
    let nyq = fs / 2.0;
    let x = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let env = 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos();
            let tone: f64 = (1..=harmonics)
                .filter(|&h| (h as f64) * f0 < nyq)
                .map(|h| (2.0 * PI * h as f64 * f0 * t).sin() / h as f64)
                .sum();
            amplitude * env * tone
        })
        .collect();
    AudioClip::new(x, sample_rate).expect("non-empty call")
}

/// Stationary low-frequency-heavy noise: white noise through a one-pole
/// lowpass, plus a weak broadband floor, normalized to unit variance.
pub fn ship_noise<R: Rng>(sample_rate: u32, duration_s: f64, corner_hz: f64, rng: &mut R) -> AudioClip {
    let fs = sample_rate as f64;
    let n = ((duration_s * fs).round() as usize).max(1);
    let w = white_noise(n, 1.0, rng);
    let floor = white_noise(n, 0.2, rng);
    let a = (-2.0 * PI * corner_hz / fs).exp();
    let mut y = 0.0;
    let mut x: Vec<f64> = w
        .iter()
        .zip(&floor)
        .map(|(v, f)| {
            y = a * y + (1.0 - a) * v;
            y + f * (1.0 - a)
        })
        .collect();
    let rms = crate::audio::rms(&x);
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v /= rms);
    }
    AudioClip::new(x, sample_rate).expect("non-empty noise")
}
