//! Acoustic indices: band SPL, acoustic complexity index (ACI) and snap rate,
//! plus their diel and date-hour aggregates.

mod aci;
mod aggregate;
mod snaps;
mod spl;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioClip;
use crate::dsp::{self, BandSpec, DspError, WindowKind};

pub use aci::{aci, aci_over_bins};
pub use aggregate::{
    daily_means, date_hour_matrix, diel_profile, mean_of, monthly_means, DateHourMatrix, DielBin, DielProfile,
};
pub use snaps::{detect_snaps, percentile, snap_rate, SnapConfig, SnapEvents};
pub use spl::{spl, Spl};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum IndexError {
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("clip of {0:.3} s is shorter than the 1 s minimum")]
    ClipTooShort(f64),
    #[error("ACI segments need at least 2 steps, got {0}")]
    SegmentTooShort(usize),
    #[error("band selects no spectrogram bins")]
    NoBins,
    #[error("duration must be positive, got {0}")]
    BadDuration(f64),
    #[error("bin width of {0} minutes does not divide a day")]
    BadBinWidth(u32),
    #[error("timestamps must be strictly increasing (point {0})")]
    NotIncreasing(usize),
    #[error("negative snap rate at point {0}")]
    NegativeRate(usize),
    #[error("unknown index kind {0:?}")]
    UnknownKind(String),
}

pub type Result<T> = std::result::Result<T, IndexError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    SplLow,
    SplHigh,
    AciLow,
    SnapRate,
}

impl IndexKind {
    pub const ALL: [IndexKind; 4] = [IndexKind::SplLow, IndexKind::SplHigh, IndexKind::AciLow, IndexKind::SnapRate];

    pub fn as_str(self) -> &'static str {
        match self {
            IndexKind::SplLow => "spl_low",
            IndexKind::SplHigh => "spl_high",
            IndexKind::AciLow => "aci_low",
            IndexKind::SnapRate => "snap_rate",
        }
    }

    /// dB-valued kinds are averaged in the power domain.
    pub fn is_db(self) -> bool {
        matches!(self, IndexKind::SplLow | IndexKind::SplHigh)
    }

    pub fn units(self, calibrated: bool) -> Units {
        match self {
            IndexKind::SplLow | IndexKind::SplHigh if calibrated => Units::DbReMicroPascal,
            IndexKind::SplLow | IndexKind::SplHigh => Units::DbReFullScale,
            IndexKind::AciLow => Units::Dimensionless,
            IndexKind::SnapRate => Units::SnapsPerSecond,
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexKind {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self> {
        IndexKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| IndexError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    #[serde(rename = "dB re 1 uPa")]
    DbReMicroPascal,
    /// Uncalibrated level, relative to ADC full scale.
    #[serde(rename = "dB re FS")]
    DbReFullScale,
    #[serde(rename = "dimensionless")]
    Dimensionless,
    #[serde(rename = "snaps/s")]
    SnapsPerSecond,
}

impl Units {
    /// The CSV spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            Units::DbReMicroPascal => "dB re 1 uPa",
            Units::DbReFullScale => "dB re FS",
            Units::Dimensionless => "dimensionless",
            Units::SnapsPerSecond => "snaps/s",
        }
    }

    pub fn is_relative(self) -> bool {
        self == Units::DbReFullScale
    }
}

/// Power-domain mean of dB values.
pub fn mean_db(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let p = values.iter().map(|v| 10f64.powf(v / 10.0)).sum::<f64>() / values.len() as f64;
    Some(10.0 * p.log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexPoint {
    pub time: DateTime<Utc>,
    pub value: f64,
}

/// Timestamped values of one index at one site.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    pub site_id: String,
    pub kind: IndexKind,
    pub units: Units,
    points: Vec<IndexPoint>,
}

impl IndexSeries {
    pub fn new(site_id: impl Into<String>, kind: IndexKind, units: Units, points: Vec<IndexPoint>) -> Result<Self> {
        for i in 1..points.len() {
            if points[i].time <= points[i - 1].time {
                return Err(IndexError::NotIncreasing(i));
            }
        }
        if kind == IndexKind::SnapRate {
            if let Some(i) = points.iter().position(|p| p.value < 0.0) {
                return Err(IndexError::NegativeRate(i));
            }
        }
        Ok(Self {
            site_id: site_id.into(),
            kind,
            units,
            points,
        })
    }

    /// Builds a series from unordered points; they are sorted and exact duplicates of time rejected.
    pub fn from_unsorted(site_id: impl Into<String>, kind: IndexKind, units: Units, mut points: Vec<IndexPoint>) -> Result<Self> {
        points.sort_by_key(|p| p.time);
        Self::new(site_id, kind, units, points)
    }

    pub fn points(&self) -> &[IndexPoint] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

/// One row of the index CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRecord {
    pub site_id: String,
    pub timestamp_iso8601: String,
    pub index_kind: IndexKind,
    pub value: f64,
    pub units: Units,
    pub denoised_flag: bool,
}

/// Groups CSV rows into per-(site, kind) series, ordered by site then kind.
pub fn series_from_records(records: &[IndexRecord]) -> std::result::Result<Vec<IndexSeries>, String> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(String, IndexKind), (Units, Vec<IndexPoint>)> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let time = DateTime::parse_from_rfc3339(&r.timestamp_iso8601)
            .map_err(|e| format!("row {}: bad timestamp {:?}: {e}", i + 1, r.timestamp_iso8601))?
            .with_timezone(&Utc);
        let entry = groups
            .entry((r.site_id.clone(), r.index_kind))
            .or_insert_with(|| (r.units, Vec::new()));
        if r.units.is_relative() {
            entry.0 = r.units;
        }
        entry.1.push(IndexPoint { time, value: r.value });
    }
    groups
        .into_iter()
        .map(|((site, kind), (units, points))| {
            IndexSeries::from_unsorted(site.clone(), kind, units, points).map_err(|e| format!("{site}/{kind}: {e}"))
        })
        .collect()
}

/// Parameters for computing all indices over one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndexConfig {
    pub low_band: BandSpec,
    pub high_band: BandSpec,
    pub aci_step_s: f64,
    pub aci_overlap: f64,
    pub aci_window: WindowKind,
    /// ACI temporal segment length; converted to a whole number of steps.
    pub aci_segment_s: f64,
    pub snap: SnapConfig,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            low_band: BandSpec::low(),
            high_band: BandSpec::high(),
            aci_step_s: 0.128,
            aci_overlap: 0.5,
            aci_window: WindowKind::Hann,
            aci_segment_s: 5.0,
            snap: SnapConfig::default(),
        }
    }
}

impl IndexConfig {
    pub fn aci_segment_steps(&self, hop_s: f64) -> usize {
        (self.aci_segment_s / hop_s).round() as usize
    }
}

/// All four indices of one clip. SPL is `None` when the band-limited signal is silent.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipIndices {
    pub spl_low: Option<Spl>,
    pub spl_high: Option<Spl>,
    pub aci_low: f64,
    pub snap_rate: f64,
    pub snap_count: usize,
}

impl ClipIndices {
    pub fn compute(clip: &AudioClip, cfg: &IndexConfig) -> Result<Self> {
        let spl_low = spl(clip, &cfg.low_band)?;
        let spl_high = spl(clip, &cfg.high_band)?;
        let spec = dsp::spectrogram(clip, cfg.aci_step_s, cfg.aci_overlap, cfg.aci_window)?;
        let aci_low = aci(&spec, &cfg.low_band, cfg.aci_segment_steps(spec.hop_s))?;
        let events = detect_snaps(clip, &cfg.snap)?;
        Ok(Self {
            spl_low,
            spl_high,
            aci_low,
            snap_rate: snap_rate(&events, clip.duration_s())?,
            snap_count: events.len(),
        })
    }

    pub fn value(&self, kind: IndexKind) -> Option<f64> {
        match kind {
            IndexKind::SplLow => self.spl_low.map(|s| s.db),
            IndexKind::SplHigh => self.spl_high.map(|s| s.db),
            IndexKind::AciLow => Some(self.aci_low),
            IndexKind::SnapRate => Some(self.snap_rate),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn kind_round_trip() {
        for k in IndexKind::ALL {
            assert_eq!(k.as_str().parse::<IndexKind>().unwrap(), k);
        }
        assert!("aci_high".parse::<IndexKind>().is_err());
    }

    #[test]
    fn series_requires_increasing_time() {
        let t = Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap();
        let p = |m: i64, v: f64| IndexPoint {
            time: t + chrono::TimeDelta::minutes(m),
            value: v,
        };
        assert!(IndexSeries::new("a", IndexKind::SplLow, Units::DbReMicroPascal, vec![p(0, 1.0), p(1, 2.0)]).is_ok());
        assert_eq!(
            IndexSeries::new("a", IndexKind::SplLow, Units::DbReMicroPascal, vec![p(1, 1.0), p(1, 2.0)]).unwrap_err(),
            IndexError::NotIncreasing(1)
        );
        assert_eq!(
            IndexSeries::new("a", IndexKind::SnapRate, Units::SnapsPerSecond, vec![p(0, -1.0)]).unwrap_err(),
            IndexError::NegativeRate(0)
        );
    }

    #[test]
    fn power_domain_db_mean() {
        let m = mean_db(&[100.0, 106.0]).unwrap();
        let hand = 10.0 * ((1e10 + 10f64.powf(10.6)) / 2.0).log10();
        assert!((m - hand).abs() < 1e-12);
        assert!((m - 103.96).abs() < 0.01);
        assert!(mean_db(&[]).is_none());
    }

    #[test]
    fn records_group_into_series() {
        let rec = |site: &str, ts: &str, kind, v| IndexRecord {
            site_id: site.into(),
            timestamp_iso8601: ts.into(),
            index_kind: kind,
            value: v,
            units: kind.units(true),
            denoised_flag: false,
        };
        let rows = vec![
            rec("b", "2023-01-01T00:01:00Z", IndexKind::SnapRate, 2.0),
            rec("b", "2023-01-01T00:00:00Z", IndexKind::SnapRate, 1.0),
            rec("a", "2023-01-01T00:00:00Z", IndexKind::SplLow, 90.0),
        ];
        let s = series_from_records(&rows).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].site_id, "a");
        assert_eq!(s[1].points()[0].value, 1.0);
    }
}
