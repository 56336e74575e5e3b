use std::ops::Range;

use super::{IndexError, Result};
use crate::dsp::{BandSpec, Spectrogram};

/// Acoustic complexity index over the bins of `spec` that fall inside `band`.
pub fn aci(spec: &Spectrogram, band: &BandSpec, segment_len_steps: usize) -> Result<f64> {
    aci_over_bins(spec, spec.bins_in(band.f_lo, band.f_hi), segment_len_steps)
}

/// For each bin and each temporal segment of `segment_len_steps` steps, the sum
/// of absolute step-to-step intensity differences divided by the summed
/// intensity, then summed over segments and bins.
///
/// The first step of a segment has no predecessor and contributes no
/// difference. A segment whose intensities sum to zero contributes zero.
/// Trailing steps that do not fill a whole segment are ignored.
pub fn aci_over_bins(spec: &Spectrogram, bins: Range<usize>, segment_len_steps: usize) -> Result<f64> {
    if segment_len_steps < 2 {
        return Err(IndexError::SegmentTooShort(segment_len_steps));
    }
    if bins.is_empty() || bins.end > spec.n_bins() {
        return Err(IndexError::NoBins);
    }
    let mut total = 0.0;
    for k in bins {
        for seg in spec.bin(k).chunks_exact(segment_len_steps) {
            let sum: f64 = seg.iter().sum();
            if sum > 0.0 {
                let diffs: f64 = seg.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
                total += diffs / sum;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_bin(values: Vec<f64>) -> Spectrogram {
        Spectrogram::from_rows(vec![values], 1.0, 0.064)
    }

    fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn hand_evaluated_cases() {
        let s = one_bin(vec![1.0, 2.0, 4.0]);
        assert!(rel_eq(aci_over_bins(&s, 0..1, 3).unwrap(), 3.0 / 7.0, 1e-12));
        let s = one_bin(vec![1.0, 0.0, 1.0, 0.0]);
        assert!(rel_eq(aci_over_bins(&s, 0..1, 4).unwrap(), 1.5, 1e-12));
        let s = Spectrogram::from_rows(vec![vec![3.0; 12]; 4], 1.0, 0.064);
        assert_eq!(aci_over_bins(&s, 0..4, 4).unwrap(), 0.0);
    }

    #[test]
    fn segments_and_bins_sum() {
        // two segments of [1,2,4] and [1,0,1,0]-like pieces across two bins
        let s = Spectrogram::from_rows(vec![vec![1.0, 2.0, 4.0, 4.0, 2.0, 1.0], vec![0.0, 0.0, 0.0, 5.0, 5.0, 5.0]], 1.0, 0.1);
        let v = aci_over_bins(&s, 0..2, 3).unwrap();
        assert!(rel_eq(v, 3.0 / 7.0 + 3.0 / 7.0, 1e-12));
        // the boundary difference 4 -> 4 between segments is never counted
        let s2 = one_bin(vec![1.0, 1.0, 9.0, 1.0, 1.0]);
        assert_eq!(aci_over_bins(&s2, 0..1, 2).unwrap(), 8.0 / 10.0);
    }

    #[test]
    fn band_restricts_bins() {
        let rows = vec![vec![1.0, 5.0, 1.0], vec![1.0, 2.0, 4.0], vec![2.0, 2.0, 2.0]];
        let s = Spectrogram::from_rows(rows, 100.0, 0.1);
        let band = BandSpec::new(50.0, 150.0).unwrap();
        assert!(rel_eq(aci(&s, &band, 3).unwrap(), 3.0 / 7.0, 1e-12));
    }

    #[test]
    fn errors() {
        let s = one_bin(vec![1.0, 2.0, 3.0]);
        assert_eq!(aci_over_bins(&s, 0..1, 1).unwrap_err(), IndexError::SegmentTooShort(1));
        assert_eq!(aci_over_bins(&s, 1..1, 2).unwrap_err(), IndexError::NoBins);
        // zero-sum segment contributes zero
        assert_eq!(aci_over_bins(&one_bin(vec![0.0; 6]), 0..1, 3).unwrap(), 0.0);
    }
}
