use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Result, Split, SynthError};
use crate::audio::{read_wav, AudioClip};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BankRole {
    Signal,
    Noise,
}

impl fmt::Display for BankRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BankRole::Signal => "signal",
            BankRole::Noise => "noise",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BankEntry {
    /// Unique across all splits of a bank.
    pub id: String,
    /// Corpus tag, e.g. `fishsounds` or `deepship`.
    pub source: String,
    pub clip: AudioClip,
}

impl BankEntry {
    pub fn new(id: impl Into<String>, source: impl Into<String>, clip: AudioClip) -> Self {
        Self {
            id: id.into(),
            source: source.into(),
            clip,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.clip.duration_s()
    }
}

/// The entries of one role in one split, all at one sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundBank {
    pub role: BankRole,
    pub split: Split,
    entries: Vec<BankEntry>,
}

impl SoundBank {
    pub fn new(role: BankRole, split: Split, entries: Vec<BankEntry>) -> Result<Self> {
        let mut seen = HashMap::new();
        for e in &entries {
            if seen.insert(e.id.as_str(), ()).is_some() {
                return Err(SynthError::DuplicateEntry(e.id.clone()));
            }
        }
        if let Some(first) = entries.first() {
            let fs = first.clip.sample_rate;
            if let Some(e) = entries.iter().find(|e| e.clip.sample_rate != fs) {
                return Err(SynthError::SampleRateMismatch {
                    id: e.id.clone(),
                    expected: fs,
                    found: e.clip.sample_rate,
                });
            }
        }
        Ok(Self { role, split, entries })
    }

    pub fn entries(&self) -> &[BankEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sample_rate(&self) -> Option<u32> {
        self.entries.first().map(|e| e.clip.sample_rate)
    }
}

/// One bank role partitioned into disjoint train / validation / test banks.
#[derive(Debug, Clone, PartialEq)]
pub struct BankSet {
    pub role: BankRole,
    pub train: SoundBank,
    pub validation: SoundBank,
    pub test: SoundBank,
}

impl BankSet {
    pub fn new(role: BankRole, mut by_split: HashMap<Split, Vec<BankEntry>>) -> Result<Self> {
        let mut take = |s: Split| SoundBank::new(role, s, by_split.remove(&s).unwrap_or_default());
        let set = Self {
            role,
            train: take(Split::Train)?,
            validation: take(Split::Validation)?,
            test: take(Split::Test)?,
        };
        let mut owner: HashMap<&str, Split> = HashMap::new();
        for s in Split::ALL {
            for e in set.get(s).entries() {
                if let Some(prev) = owner.insert(&e.id, s) {
                    return Err(SynthError::SplitLeak {
                        id: e.id.clone(),
                        splits: format!("{prev}, {s}"),
                    });
                }
            }
        }
        Ok(set)
    }

    pub fn get(&self, split: Split) -> &SoundBank {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    pub fn counts(&self) -> [usize; 3] {
        [self.train.len(), self.validation.len(), self.test.len()]
    }
}

/// Shuffles `entries` and deals exactly `counts` (train, validation, test) of them.
pub fn partition<R: Rng>(role: BankRole, mut entries: Vec<BankEntry>, counts: [usize; 3], rng: &mut R) -> Result<BankSet> {
    let want: usize = counts.iter().sum();
    if want != entries.len() {
        return Err(SynthError::BadPartition {
            want,
            have: entries.len(),
        });
    }
    entries.shuffle(rng);
    let mut by_split = HashMap::new();
    let mut rest = entries.into_iter();
    for (s, n) in Split::ALL.into_iter().zip(counts) {
        by_split.insert(s, rest.by_ref().take(n).collect());
    }
    BankSet::new(role, by_split)
}

#[derive(Debug, Deserialize)]
struct BankRow {
    path: String,
    source: String,
    split: String,
    #[serde(default)]
    id: Option<String>,
}

/// Reads a bank listing with columns `path, source, split` and an optional
/// `id` (defaults to the file stem). Relative paths resolve against the
/// listing's directory.
pub fn read_bank_csv(path: &Path, role: BankRole) -> Result<BankSet> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut by_split: HashMap<Split, Vec<BankEntry>> = HashMap::new();
    for (i, row) in rdr.deserialize::<BankRow>().enumerate() {
        let row = row?;
        let parse_err = |msg: String| SynthError::Parse {
            path: path.to_path_buf(),
            msg: format!("row {}: {msg}", i + 1),
        };
        let split: Split = row.split.parse().map_err(parse_err)?;
        let file = PathBuf::from(&row.path);
        let file = if file.is_absolute() { file } else { base.join(file) };
        let id = match row.id.filter(|s| !s.is_empty()) {
            Some(id) => id,
            None => file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| parse_err(format!("no file name in {:?}", row.path)))?,
        };
        let clip = read_wav(&file, None)?;
        by_split.entry(split).or_default().push(BankEntry::new(id, row.source, clip));
    }
    BankSet::new(role, by_split)
}
