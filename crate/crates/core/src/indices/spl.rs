use super::{IndexError, Result};
use crate::audio::AudioClip;
use crate::dsp::{bandpass, BandSpec};

/// Band sound pressure level. `relative` is set for uncalibrated clips, whose
/// level is in dB re full scale rather than dB re 1 µPa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spl {
    pub db: f64,
    pub relative: bool,
}

/// `20·log10(rms(bandpassed) / 1 µPa)`. Returns `Ok(None)` when the band-limited
/// signal is identically zero (level undefined).
pub fn spl(clip: &AudioClip, band: &BandSpec) -> Result<Option<Spl>> {
    if clip.duration_s() < 1.0 {
        return Err(IndexError::ClipTooShort(clip.duration_s()));
    }
    let filtered = bandpass(clip, band)?;
    let rms = filtered.rms();
    if !(rms > 0.0) {
        return Ok(None);
    }
    Ok(Some(Spl {
        db: 20.0 * rms.log10(),
        relative: !clip.calibrated,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn calibrated_tone(rms_upa: f64, freq: f64, fs: u32) -> AudioClip {
        let amp = rms_upa * 2f64.sqrt();
        AudioClip::new(
            (0..fs as usize * 2)
                .map(|i| amp * (2.0 * PI * freq * i as f64 / fs as f64).sin())
                .collect(),
            fs,
        )
        .unwrap()
        .with_calibrated(true)
    }

    #[test]
    fn one_pascal_rms_is_120_db() {
        let clip = calibrated_tone(1e6, 500.0, 96_000);
        let s = spl(&clip, &BandSpec::low()).unwrap().unwrap();
        assert!((s.db - 120.0).abs() < 0.1, "{}", s.db);
        assert!(!s.relative);
        let up = spl(&clip.scaled(10.0), &BandSpec::low()).unwrap().unwrap();
        assert!((up.db - s.db - 20.0).abs() < 1e-9);
    }

    #[test]
    fn silence_is_undefined() {
        let clip = AudioClip::new(vec![0.0; 8000], 8000).unwrap();
        assert_eq!(spl(&clip, &BandSpec::low()).unwrap(), None);
    }

    #[test]
    fn too_short() {
        let clip = AudioClip::new(vec![0.1; 7999], 8000).unwrap();
        assert!(matches!(spl(&clip, &BandSpec::low()), Err(IndexError::ClipTooShort(_))));
    }

    #[test]
    fn uncalibrated_is_flagged_relative() {
        let clip = AudioClip::new((0..16000).map(|i| (i as f64 * 0.3).sin() * 0.1).collect(), 16000).unwrap();
        assert!(spl(&clip, &BandSpec::new(500.0, 2000.0).unwrap()).unwrap().unwrap().relative);
    }

    /// White noise of variance σ² spreads power evenly over 0..Nyquist, so a band
    /// covering a fraction ρ of it carries ρσ². Averaged over 100 realizations.
    #[test]
    fn white_noise_band_fraction() {
        let fs = 16_000;
        let sigma = 3.0;
        let band = BandSpec::new(1_000.0, 5_000.0).unwrap();
        let rho = (band.f_hi - band.f_lo) / (fs as f64 / 2.0);
        let oracle = 10.0 * (rho * sigma * sigma).log10();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(0.0, sigma).unwrap();
        let mut acc = 0.0;
        let runs = 100;
        for _ in 0..runs {
            let x: Vec<f64> = (0..fs).map(|_| normal.sample(&mut rng)).collect();
            let clip = AudioClip::new(x, fs as u32).unwrap().with_calibrated(true);
            acc += spl(&clip, &band).unwrap().unwrap().db;
        }
        let mean = acc / runs as f64;
        assert!((mean - oracle).abs() < 0.5, "{mean} vs {oracle}");
    }
}
