use serde::{Deserialize, Serialize};

use super::{IndexError, Result};
use crate::audio::AudioClip;
use crate::dsp::{bandpass, hilbert_envelope, BandSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnapConfig {
    /// Envelope percentile used as the detection threshold.
    pub percentile: f64,
    /// Minimum separation between distinct snaps.
    pub refractory_s: f64,
    /// Optional band filter applied before the envelope is taken.
    pub prefilter: Option<BandSpec>,
}

impl Default for SnapConfig {
    fn default() -> Self {
        Self {
            percentile: 99.9,
            refractory_s: 0.002,
            prefilter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SnapEvents {
    /// Seconds from clip start, strictly increasing.
    pub times: Vec<f64>,
    /// Envelope value at each event, all strictly above `threshold_used`.
    pub envelope_peaks: Vec<f64>,
    pub threshold_used: f64,
}

impl SnapEvents {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `p`-th percentile with linear interpolation between order statistics.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    let pos = (p / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    let (_, &mut lo_val, upper) = v.select_nth_unstable_by(lo, f64::total_cmp);
    if frac == 0.0 || upper.is_empty() {
        return lo_val;
    }
    let hi_val = upper.iter().copied().fold(f64::INFINITY, f64::min);
    lo_val + frac * (hi_val - lo_val)
}

/// Strong-snap detection on the Hilbert envelope.
///
/// The threshold is the configured percentile of the clip's envelope. Runs of
/// samples strictly above it form excursions; excursions separated by less
/// than the refractory gap merge into one snap, located at its envelope
/// maximum.
pub fn detect_snaps(clip: &AudioClip, cfg: &SnapConfig) -> Result<SnapEvents> {
    if clip.duration_s() < 1.0 {
        return Err(IndexError::ClipTooShort(clip.duration_s()));
    }
    let env = match &cfg.prefilter {
        Some(band) => hilbert_envelope(&bandpass(clip, band)?)?,
        None => hilbert_envelope(clip)?,
    };
    let threshold = percentile(&env.values, cfg.percentile);
    let gap = (cfg.refractory_s * clip.sample_rate as f64).round() as usize;
    let fs = clip.sample_rate as f64;

    let mut events = SnapEvents {
        threshold_used: threshold,
        ..Default::default()
    };
    // (peak index, peak value, last index above threshold)
    let mut current: Option<(usize, f64, usize)> = None;
    for (i, &v) in env.values.iter().enumerate() {
        if v <= threshold {
            continue;
        }
        current = match current {
            Some((pi, pv, last)) if i - last <= gap => {
                if v > pv {
                    Some((i, v, i))
                } else {
                    Some((pi, pv, i))
                }
            }
            Some((pi, pv, _)) => {
                events.times.push(pi as f64 / fs);
                events.envelope_peaks.push(pv);
                Some((i, v, i))
            }
            None => Some((i, v, i)),
        };
    }
    if let Some((pi, pv, _)) = current {
        events.times.push(pi as f64 / fs);
        events.envelope_peaks.push(pv);
    }
    Ok(events)
}

/// Events per second of recording.
pub fn snap_rate(events: &SnapEvents, duration_s: f64) -> Result<f64> {
    if !(duration_s > 0.0) {
        return Err(IndexError::BadDuration(duration_s));
    }
    Ok(events.len() as f64 / duration_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{snap_train, SnapTrain};
    use rand::SeedableRng;

    #[test]
    fn percentile_matches_linear_interpolation() {
        let v: Vec<f64> = (0..=10).map(f64::from).collect();
        assert_eq!(percentile(&v, 50.0), 5.0);
        assert!((percentile(&v, 99.9) - 9.99).abs() < 1e-12);
        assert_eq!(percentile(&v, 100.0), 10.0);
        assert_eq!(percentile(&[3.0], 99.9), 3.0);
    }

    #[test]
    fn silence_has_no_snaps() {
        let clip = AudioClip::new(vec![0.0; 16_000], 8_000).unwrap();
        let ev = detect_snaps(&clip, &SnapConfig::default()).unwrap();
        assert!(ev.is_empty());
        assert_eq!(snap_rate(&ev, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn rate_arithmetic() {
        let ev = SnapEvents {
            times: (0..100).map(|i| i as f64 * 0.5).collect(),
            envelope_peaks: vec![1.0; 100],
            threshold_used: 0.5,
        };
        assert!((snap_rate(&ev, 60.0).unwrap() - 1.6667).abs() < 1e-4);
        assert!(snap_rate(&ev, 0.0).is_err());
    }

    /// 100 planted snaps at 100σ, at least 0.1 s apart; the generator's event log is the oracle.
    #[test]
    fn planted_snaps_are_recovered() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let train = SnapTrain {
            sample_rate: 96_000,
            duration_s: 60.0,
            noise_sigma: 1.0,
            amplitude: 100.0,
            ..Default::default()
        };
        let times: Vec<f64> = (0..100).map(|i| 0.3 + i as f64 * 0.59).collect();
        let clip = snap_train(&train, &times, &mut rng);
        let ev = detect_snaps(&clip, &SnapConfig::default()).unwrap();
        assert!((ev.len() as i64 - 100).abs() <= 2, "{} events", ev.len());
        for (t, p) in ev.times.iter().zip(&ev.envelope_peaks) {
            assert!(*p > ev.threshold_used);
            let nearest = times.iter().map(|x| (x - t).abs()).fold(f64::INFINITY, f64::min);
            assert!(nearest < 0.002, "event at {t} not near a planted snap");
        }
        assert!(ev.times.windows(2).all(|w| w[1] - w[0] >= 0.002));
    }

    #[test]
    fn event_times_invariant_to_scaling() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let train = SnapTrain {
            sample_rate: 48_000,
            duration_s: 5.0,
            amplitude: 30.0,
            ..Default::default()
        };
        let times: Vec<f64> = (0..20).map(|i| 0.1 + i as f64 * 0.23).collect();
        let clip = snap_train(&train, &times, &mut rng);
        let a = detect_snaps(&clip, &SnapConfig::default()).unwrap();
        for c in [1e-3, 0.5, 7.0, 1e6] {
            assert_eq!(detect_snaps(&clip.scaled(c), &SnapConfig::default()).unwrap().times, a.times);
        }
    }

    #[test]
    fn close_excursions_merge() {
        // two bumps 1 ms apart merge; a third 10 ms later stays separate
        let fs = 8_000;
        let mut x = vec![0.0; fs];
        for (at, a) in [(1000usize, 1.0), (1008, 2.0), (1080, 1.5)] {
            x[at] = a;
        }
        let clip = AudioClip::new(x, fs as u32).unwrap();
        let ev = detect_snaps(&clip, &SnapConfig::default()).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev.times[0], 1008.0 / fs as f64);
        assert_eq!(ev.times[1], 1080.0 / fs as f64);
    }
}
