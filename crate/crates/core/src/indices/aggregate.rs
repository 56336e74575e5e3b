use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate, Timelike};

use super::{mean_db, IndexError, IndexKind, IndexSeries, Result};

/// Mean appropriate for the index kind: power domain for dB, arithmetic otherwise.
pub fn mean_of(kind: IndexKind, values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else if kind.is_db() {
        mean_db(values)
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DielBin {
    pub start_minute: u32,
    pub mean: Option<f64>,
    pub count: usize,
}

/// Time-of-day profile pooled over all days. Bins tile 00:00–24:00.
#[derive(Debug, Clone, PartialEq)]
pub struct DielProfile {
    pub bin_minutes: u32,
    pub bins: Vec<DielBin>,
}

impl DielProfile {
    pub fn is_empty(&self) -> bool {
        self.bins.iter().all(|b| b.count == 0)
    }
}

pub fn diel_profile(series: &IndexSeries, bin_minutes: u32) -> Result<DielProfile> {
    if bin_minutes == 0 || 1440 % bin_minutes != 0 {
        return Err(IndexError::BadBinWidth(bin_minutes));
    }
    let n_bins = (1440 / bin_minutes) as usize;
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    for p in series.points() {
        let minute = p.time.hour() * 60 + p.time.minute();
        groups[(minute / bin_minutes) as usize].push(p.value);
    }
    let bins = groups
        .iter()
        .enumerate()
        .map(|(i, g)| DielBin {
            start_minute: i as u32 * bin_minutes,
            mean: mean_of(series.kind, g),
            count: g.len(),
        })
        .collect();
    Ok(DielProfile { bin_minutes, bins })
}

/// Date × hour-of-day grid; `None` marks hours without data.
#[derive(Debug, Clone, PartialEq)]
pub struct DateHourMatrix {
    /// Every calendar date from the first to the last observation.
    pub dates: Vec<NaiveDate>,
    pub cells: Vec<[Option<f64>; 24]>,
}

pub fn date_hour_matrix(series: &IndexSeries) -> DateHourMatrix {
    let mut groups: BTreeMap<(NaiveDate, u32), Vec<f64>> = BTreeMap::new();
    for p in series.points() {
        groups.entry((p.time.date_naive(), p.time.hour())).or_default().push(p.value);
    }
    let (Some(first), Some(last)) = (series.points().first(), series.points().last()) else {
        return DateHourMatrix {
            dates: Vec::new(),
            cells: Vec::new(),
        };
    };
    let dates: Vec<NaiveDate> = first
        .time
        .date_naive()
        .iter_days()
        .take_while(|d| *d <= last.time.date_naive())
        .collect();
    let cells = dates
        .iter()
        .map(|d| std::array::from_fn(|h| groups.get(&(*d, h as u32)).and_then(|g| mean_of(series.kind, g))))
        .collect();
    DateHourMatrix { dates, cells }
}

/// Daily averages of the per-clip values, ordered by date.
pub fn daily_means(series: &IndexSeries) -> Vec<(NaiveDate, f64)> {
    let mut groups: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for p in series.points() {
        groups.entry(p.time.date_naive()).or_default().push(p.value);
    }
    groups
        .into_iter()
        .filter_map(|(d, g)| mean_of(series.kind, &g).map(|m| (d, m)))
        .collect()
}

/// Month-of-year averages (1..=12) of the daily means, pooled across years.
pub fn monthly_means(series: &IndexSeries) -> Vec<(u32, f64, usize)> {
    let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (d, v) in daily_means(series) {
        groups.entry(d.month()).or_default().push(v);
    }
    groups
        .into_iter()
        .filter_map(|(m, g)| mean_of(series.kind, &g).map(|v| (m, v, g.len())))
        .collect()
}
