//! Denoiser scoring by envelope detection ROC.
//!
//! Clean, noisy and denoised recordings are reduced to min-max normalized
//! Hilbert envelopes. Clean samples above 0.01 are the signal events; a test
//! sample above a threshold is a detection. Sweeping the threshold gives
//! sample-level TPR/FPR curves and their AUC.

mod denoiser;
mod evaluate;
mod gate;
mod roc;

use std::path::PathBuf;

use thiserror::Error;

use crate::audio::AudioError;
use crate::dsp::DspError;

pub use denoiser::{CommandDenoiser, Denoiser, DirectoryDenoiser, IdentityDenoiser, SpectralGateDenoiser};
pub use evaluate::{
    evaluate_denoiser, write_roc_csv, write_summary_csv, ConditionCurve, EvalOptions, EvalReport, Exclusion, Pooling,
    NOISY_CONDITION,
};
pub use gate::{spectral_gate_denoise, GateConfig, NoiseProfile};
pub use roc::{
    average_curves, decimate_envelope, label_signal_events, linear_grid, normalize_envelope, roc, threshold_grid,
    RocCurve, RocPoint, EVENT_THRESHOLD,
};

#[derive(Error, Debug)]
pub enum EvalError {
    #[error("length mismatch: {what} has {got} samples, expected {want}")]
    LengthMismatch { what: String, got: usize, want: usize },
    #[error("threshold {0} is outside [0, 1]")]
    BadThreshold(f64),
    #[error("nothing to evaluate: {0}")]
    Empty(String),
    #[error("curves must share one threshold grid")]
    GridMismatch,
    #[error("noise profile has {got} bins, the gate expects {want}")]
    ProfileMismatch { got: usize, want: usize },
    #[error("clip of {0:.3} s is shorter than the 1 s minimum")]
    ClipTooShort(f64),
    #[error("denoiser {id} failed: {msg}")]
    Denoiser { id: String, msg: String },
    #[error("denoised output missing: {0}")]
    MissingOutput(PathBuf),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;
