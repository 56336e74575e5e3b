use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::DspError;
use crate::audio::AudioClip;

/// Magnitude of the analytic signal, sample-aligned with its source.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub values: Vec<f64>,
    pub sample_rate: u32,
}

impl Envelope {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Analytic signal via one full-length FFT: keep DC (and Nyquist for even
/// lengths), double the positive frequencies, zero the negative ones.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if n == 0 {
        return buf;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        let h = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *v *= h / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

pub fn hilbert_envelope(clip: &AudioClip) -> Result<Envelope, DspError> {
    if clip.samples.is_empty() {
        return Err(DspError::Empty);
    }
    Ok(Envelope {
        values: analytic_signal(&clip.samples).into_iter().map(|z| z.norm()).collect(),
        sample_rate: clip.sample_rate,
    })
}
