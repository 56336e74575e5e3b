use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::DspError;
use crate::audio::AudioClip;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// Periodic Hann.
    #[default]
    Hann,
    Hamming,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let x = 2.0 * PI * i as f64 / n as f64;
                match self {
                    WindowKind::Hann => 0.5 - 0.5 * x.cos(),
                    WindowKind::Hamming => 0.54 - 0.46 * x.cos(),
                    WindowKind::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

/// `round(step_s * sample_rate)` rounded to the nearest even integer.
pub fn window_length(step_s: f64, sample_rate: u32) -> usize {
    let w = step_s * sample_rate as f64;
    2 * (w / 2.0).round() as usize
}

/// Power spectrogram, bins × steps, stored bin-major.
///
/// Each column is the one-sided power spectrum of one windowed frame scaled so
/// the bins sum to the frame's windowed energy `Σ (w·x)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Vec<f64>,
    n_bins: usize,
    n_steps: usize,
    pub bin_hz: f64,
    /// Time between successive steps.
    pub hop_s: f64,
    pub window_len: usize,
    pub hop_len: usize,
    pub overlap: f64,
    pub window: WindowKind,
}

impl Spectrogram {
    /// Wraps precomputed intensities (`rows[bin][step]`), e.g. for synthetic inputs.
    pub fn from_rows(rows: Vec<Vec<f64>>, bin_hz: f64, hop_s: f64) -> Self {
        let n_bins = rows.len();
        let n_steps = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_steps), "ragged spectrogram rows");
        assert!(rows.iter().flatten().all(|&v| v >= 0.0), "negative intensity");
        Self {
            data: rows.into_iter().flatten().collect(),
            n_bins,
            n_steps,
            bin_hz,
            hop_s,
            window_len: 0,
            hop_len: 0,
            overlap: 0.0,
            window: WindowKind::Rectangular,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Intensities of one frequency bin across all steps.
    pub fn bin(&self, k: usize) -> &[f64] {
        &self.data[k * self.n_steps..(k + 1) * self.n_steps]
    }

    pub fn get(&self, bin: usize, step: usize) -> f64 {
        self.data[bin * self.n_steps + step]
    }

    pub fn total_energy(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// Index range of bins whose centre frequency lies in `[f_lo, f_hi]`.
    pub fn bins_in(&self, f_lo: f64, f_hi: f64) -> std::ops::Range<usize> {
        let lo = (f_lo / self.bin_hz).ceil().max(0.0) as usize;
        let hi = ((f_hi / self.bin_hz).floor() as usize + 1).min(self.n_bins);
        lo.min(hi)..hi
    }
}

/// Windowed STFT power. `step_s` sets the window duration; the hop is
/// `window · (1 − overlap)` samples.
pub fn spectrogram(clip: &AudioClip, step_s: f64, overlap: f64, window: WindowKind) -> Result<Spectrogram, DspError> {
    if !(0.0..1.0).contains(&overlap) {
        return Err(DspError::BadOverlap(overlap));
    }
    let w = window_length(step_s, clip.sample_rate);
    if w < 2 {
        return Err(DspError::WindowTooShort(w));
    }
    let n = clip.samples.len();
    if n < w {
        return Err(DspError::ClipTooShort { have: n, need: w });
    }
    let hop = ((w as f64 * (1.0 - overlap)).round() as usize).max(1);
    let n_steps = (n - w) / hop + 1;
    let n_bins = w / 2 + 1;
    let coeffs = window.coefficients(w);
    let fft = FftPlanner::new().plan_fft_forward(w);
    let mut data = vec![0.0; n_bins * n_steps];
    let mut buf = vec![Complex64::default(); w];
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for step in 0..n_steps {
        let frame = &clip.samples[step * hop..step * hop + w];
        for ((b, &x), &c) in buf.iter_mut().zip(frame).zip(&coeffs) {
            *b = Complex64::new(x * c, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for k in 0..n_bins {
            let p = buf[k].norm_sqr() / w as f64;
            let one_sided = if k == 0 || k == w / 2 { p } else { 2.0 * p };
            data[k * n_steps + step] = one_sided;
        }
    }
    Ok(Spectrogram {
        data,
        n_bins,
        n_steps,
        bin_hz: clip.sample_rate as f64 / w as f64,
        hop_s: hop as f64 / clip.sample_rate as f64,
        window_len: w,
        hop_len: hop,
        overlap,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, fs: u32, n: usize) -> AudioClip {
        AudioClip::new(
            (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs as f64).sin()).collect(),
            fs,
        )
        .unwrap()
    }

    #[test]
    fn aci_grid_at_96k() {
        assert_eq!(window_length(0.128, 96_000), 12_288);
        let s = spectrogram(&tone(1000.0, 96_000, 96_000), 0.128, 0.5, WindowKind::Hann).unwrap();
        assert_eq!(s.window_len, 12_288);
        assert_eq!(s.bin_hz, 7.8125);
        assert_eq!(s.hop_len, 6144);
        assert_eq!(s.n_bins(), 6145);
    }

    #[test]
    fn window_length_rounds_to_even() {
        assert_eq!(window_length(0.001, 44_100), 44);
        assert_eq!(window_length(0.0011, 1000), 2);
        assert_eq!(window_length(3.0 / 1000.0, 1000), 4);
    }

    /// Hann-windowed bin-centred tone: the DFT of the window is non-zero only at
    /// offsets 0 and ±1, with |W(±1)| = |W(0)|/2, i.e. −6.02 dB in power.
    #[test]
    fn bin_centred_tone() {
        let s = spectrogram(&tone(1000.0, 96_000, 2 * 12_288), 0.128, 0.5, WindowKind::Hann).unwrap();
        for step in 0..s.n_steps() {
            let col: Vec<f64> = (0..s.n_bins()).map(|k| s.get(k, step)).collect();
            let (kmax, pmax) = col
                .iter()
                .enumerate()
                .fold((0, 0.0), |a, (k, &p)| if p > a.1 { (k, p) } else { a });
            assert_eq!(kmax, 128);
            for d in [-1i64, 1] {
                let rel = 10.0 * (col[(128 + d) as usize] / pmax).log10();
                assert!((rel + 6.0206).abs() < 1e-3, "{rel}");
            }
            for (k, &p) in col.iter().enumerate() {
                if (k as i64 - 128).abs() >= 2 {
                    assert!(p <= pmax * 1e-2, "bin {k}");
                }
            }
        }
    }

    #[test]
    fn parseval_per_frame() {
        let fs = 8000;
        let x: Vec<f64> = (0..4000).map(|i| (i * 7919 % 1000) as f64 / 500.0 - 1.0).collect();
        let clip = AudioClip::new(x.clone(), fs).unwrap();
        let s = spectrogram(&clip, 0.032, 0.5, WindowKind::Hann).unwrap();
        let w = WindowKind::Hann.coefficients(s.window_len);
        let mut td = 0.0;
        for step in 0..s.n_steps() {
            let f = &x[step * s.hop_len..step * s.hop_len + s.window_len];
            td += f.iter().zip(&w).map(|(a, b)| (a * b).powi(2)).sum::<f64>();
        }
        assert!((s.total_energy() - td).abs() / td < 1e-9);
    }

    #[test]
    fn step_count_formula() {
        for (n, overlap) in [(10_000usize, 0.5), (9_999, 0.0), (5_000, 0.75), (256, 0.5)] {
            let clip = AudioClip::new(vec![0.0; n], 8000).unwrap();
            let s = spectrogram(&clip, 0.032, overlap, WindowKind::Hann).unwrap();
            let w = s.window_len as f64;
            let expected = ((n as f64 - w) / (w * (1.0 - overlap))).floor() as usize + 1;
            assert_eq!(s.n_steps(), expected);
            assert!(s.total_energy() == 0.0);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let clip = AudioClip::new(vec![0.0; 1000], 8000).unwrap();
        assert!(matches!(spectrogram(&clip, 0.032, 1.0, WindowKind::Hann), Err(DspError::BadOverlap(_))));
        assert!(matches!(spectrogram(&clip, 0.032, -0.1, WindowKind::Hann), Err(DspError::BadOverlap(_))));
        assert!(matches!(spectrogram(&clip, 0.0001, 0.5, WindowKind::Hann), Err(DspError::WindowTooShort(_))));
        assert!(matches!(spectrogram(&clip, 1.0, 0.5, WindowKind::Hann), Err(DspError::ClipTooShort { .. })));
    }

    #[test]
    fn band_bin_selection() {
        let s = Spectrogram::from_rows(vec![vec![0.0; 3]; 10], 100.0, 0.1);
        assert_eq!(s.bins_in(100.0, 300.0), 1..4);
        assert_eq!(s.bins_in(150.0, 250.0), 2..3);
        assert_eq!(s.bins_in(120.0, 180.0).len(), 0);
        assert_eq!(s.bins_in(500.0, 5000.0), 5..10);
    }
}
