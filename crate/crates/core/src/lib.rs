//! Passive acoustic monitoring of reef soundscapes.
//!
//! The crate turns hydrophone recordings into acoustic indices (band SPL,
//! acoustic complexity, snapping-shrimp snap rate), synthesizes denoiser
//! training pairs, scores denoisers by envelope-detection ROC, and links
//! index series to diver transect surveys through correlation, an annual
//! cyclic fit and composite linear indices.

pub mod audio;
pub mod dsp;
pub mod eval;
pub mod io;
pub mod report;
pub mod indices;
pub mod synth;
pub mod stats;
pub mod synthetic;
