//! Shared numeric kernels: band filtering, analytic envelopes, spectrograms.

mod filter;
mod hilbert;
mod spectrogram;

use thiserror::Error;

pub use filter::{bandpass, BandName, BandSpec, Biquad, SosFilter, PROTOTYPE_ORDER};
pub use hilbert::{hilbert_envelope, Envelope};
pub use spectrogram::{spectrogram, window_length, Spectrogram, WindowKind};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum DspError {
    #[error("invalid band {f_lo}-{f_hi} Hz: need 0 < f_lo < f_hi")]
    BadBand { f_lo: f64, f_hi: f64 },
    #[error("band {f_lo}-{f_hi} Hz reaches beyond Nyquist ({nyquist} Hz)")]
    BeyondNyquist { f_lo: f64, f_hi: f64, nyquist: f64 },
    #[error("overlap must lie in [0, 1), got {0}")]
    BadOverlap(f64),
    #[error("window of {0} samples is too short (need at least 2)")]
    WindowTooShort(usize),
    #[error("clip of {have} samples is shorter than one {need}-sample window")]
    ClipTooShort { have: usize, need: usize },
    #[error("empty input")]
    Empty,
}
