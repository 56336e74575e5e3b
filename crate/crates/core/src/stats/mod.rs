//! Linking acoustic indices to diver transect surveys: Pearson correlation
//! with t-test significance, linear interpolation of surveys, the annual
//! cyclic cover model and the composite (multi-linear) acoustic index.

mod composite;
mod correlation;
mod cyclic;
mod pairing;
mod transect;

use std::path::PathBuf;

use thiserror::Error;

pub use composite::{
    fit_composite, write_composite_csv, CompositeModel, CompositeOptions, COMPOSITE_HEADER, CONDITION_LIMIT,
};
pub use correlation::{pearson, CorrelationResult, Significance};
pub use cyclic::{day_of_year, fit_cyclic, CyclicFit, MIN_SPAN_DAYS};
pub use pairing::{
    composite_design, correlate_index, month_midpoint, write_correlation_csv, CompositeDesign, CorrelationMode,
    CorrelationRow, COMPOSITE_KINDS, CORRELATION_HEADER,
};
pub use transect::{interpolate_transect, read_transect_csv, ParameterValues, ReefParameter, TransectRecord};

#[derive(Error, Debug)]
pub enum StatsError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation undefined: {0} is constant")]
    Constant(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("observations span {span_days:.1} days of the year; at least {min} needed to identify the phase")]
    ShortSpan { span_days: f64, min: f64 },
    #[error("design is rank deficient: condition number {condition:.3e} exceeds {limit:.0e}")]
    RankDeficient { condition: f64, limit: f64 },
    #[error("transect record {row}: {msg}")]
    InvalidRecord { row: usize, msg: String },
    #[error("{0}")]
    BadInput(String),
    #[error("no transect surveys for site {0:?}")]
    NoSurveys(String),
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, StatsError>;
