//! Noisy/clean training-pair synthesis from signal and noise sound banks.
//!
//! A pair is built by superimposing `N` randomly chosen signal snippets at
//! random offsets inside a fixed-length segment, stochastically augmenting the
//! result, and adding a crop of one randomly chosen noise snippet. Every
//! random draw for pair `k` comes from its own ChaCha stream, so datasets are
//! reproducible from `(seed, recipe, banks)` regardless of worker count.

mod augment;
mod bank;
mod dataset;
mod mix;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioError;

pub use augment::{pitch_shift, tanh_drive, time_stretch, AugmentPlan, AugmentRanges};
pub use bank::{partition, read_bank_csv, BankEntry, BankRole, BankSet, SoundBank};
pub use dataset::{
    build_dataset, check_split_hygiene, manifest_file_name, pair_rng, read_pair_manifest, write_pair_manifest,
    PAIR_MANIFEST_HEADER,
};
pub use mix::{make_pair, MixRecipe, Pair, PairManifest};

#[derive(Error, Debug)]
pub enum SynthError {
    #[error("{0} bank is empty")]
    EmptyBank(BankRole),
    #[error("{role} bank is labelled {found} but a {expected} pair was requested")]
    SplitMismatch { role: BankRole, expected: Split, found: Split },
    #[error("invalid mix recipe: {0}")]
    BadRecipe(String),
    #[error("noise entry {id:?} has {have} samples, {need} needed; enable noise looping or use longer noise")]
    NoiseTooShort { id: String, have: usize, need: usize },
    #[error("entry {id:?} is at {found} Hz, bank is at {expected} Hz")]
    SampleRateMismatch { id: String, expected: u32, found: u32 },
    #[error("output path already exists: {0}")]
    PathCollision(PathBuf),
    #[error("entry {id:?} appears in more than one split ({splits})")]
    SplitLeak { id: String, splits: String },
    #[error("duplicate bank entry id {0:?}")]
    DuplicateEntry(String),
    #[error("partition counts {want} do not match the {have} available entries")]
    BadPartition { want: usize, have: usize },
    #[error("pair count must be positive")]
    ZeroCount,
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SynthError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" | "training" => Ok(Split::Train),
            "validation" | "val" | "valid" => Ok(Split::Validation),
            "test" | "testing" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}
