use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Result, StatsError};

/// The seven diver-measured reef parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReefParameter {
    /// Number of live coral species.
    LiveCoralRichness,
    /// Mean colony diameter, cm.
    LiveCoralSize,
    LiveCoralCover,
    DeadCoralCover,
    InvertebrateCover,
    /// All algae, including macroalgae.
    AlgalCover,
    MacroalgalCover,
}

impl ReefParameter {
    pub const ALL: [ReefParameter; 7] = [
        ReefParameter::LiveCoralRichness,
        ReefParameter::LiveCoralSize,
        ReefParameter::LiveCoralCover,
        ReefParameter::DeadCoralCover,
        ReefParameter::InvertebrateCover,
        ReefParameter::AlgalCover,
        ReefParameter::MacroalgalCover,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReefParameter::LiveCoralRichness => "live_coral_richness",
            ReefParameter::LiveCoralSize => "live_coral_size",
            ReefParameter::LiveCoralCover => "live_coral_cover",
            ReefParameter::DeadCoralCover => "dead_coral_cover",
            ReefParameter::InvertebrateCover => "invertebrate_cover",
            ReefParameter::AlgalCover => "algal_cover",
            ReefParameter::MacroalgalCover => "macroalgal_cover",
        }
    }

    pub fn is_percent(self) -> bool {
        !matches!(self, ReefParameter::LiveCoralRichness | ReefParameter::LiveCoralSize)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ReefParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReefParameter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ReefParameter::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown reef parameter {s:?}"))
    }
}

/// One survey of one site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransectRecord {
    pub site_id: String,
    pub survey_date: NaiveDate,
    pub live_coral_richness: f64,
    pub live_coral_size: f64,
    pub live_coral_cover: f64,
    pub dead_coral_cover: f64,
    pub invertebrate_cover: f64,
    pub algal_cover: f64,
    pub macroalgal_cover: f64,
}

/// Values of all seven parameters, indexable by [`ReefParameter`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterValues(pub [f64; 7]);

impl ParameterValues {
    pub fn get(&self, p: ReefParameter) -> f64 {
        self.0[p.index()]
    }
}

impl TransectRecord {
    pub fn values(&self) -> ParameterValues {
        ParameterValues([
            self.live_coral_richness,
            self.live_coral_size,
            self.live_coral_cover,
            self.dead_coral_cover,
            self.invertebrate_cover,
            self.algal_cover,
            self.macroalgal_cover,
        ])
    }

    pub fn get(&self, p: ReefParameter) -> f64 {
        self.values().get(p)
    }

    /// Checks ranges and that macroalgal cover does not exceed total algal cover.
    pub fn validate(&self) -> std::result::Result<(), String> {
        for p in ReefParameter::ALL {
            let v = self.get(p);
            if !v.is_finite() || v < 0.0 {
                return Err(format!("{p} = {v} must be finite and non-negative"));
            }
            if p.is_percent() && v > 100.0 {
                return Err(format!("{p} = {v} exceeds 100%"));
            }
        }
        if self.macroalgal_cover > self.algal_cover {
            return Err(format!(
                "macroalgal_cover {} exceeds algal_cover {}",
                self.macroalgal_cover, self.algal_cover
            ));
        }
        Ok(())
    }
}

/// Reads and validates a transect CSV (site_id, survey_date, then the seven
/// parameter columns).
pub fn read_transect_csv(path: &Path) -> Result<Vec<TransectRecord>> {
    let csv_err = |source| StatsError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<TransectRecord>().enumerate() {
        let rec = rec.map_err(csv_err)?;
        rec.validate().map_err(|msg| StatsError::InvalidRecord { row: i + 1, msg })?;
        out.push(rec);
    }
    Ok(out)
}

/// Piecewise-linear interpolation of one site's surveys at `at`.
///
/// Dates outside `[first, last]` survey give `None`; survey dates give the
/// survey values exactly. With a single survey only its own date has a value.
pub fn interpolate_transect(records: &[TransectRecord], at: &[NaiveDate]) -> Result<Vec<Option<ParameterValues>>> {
    let first = records.first().ok_or_else(|| StatsError::NoSurveys(String::new()))?;
    if let Some(r) = records.iter().find(|r| r.site_id != first.site_id) {
        return Err(StatsError::InvalidRecord {
            row: 0,
            msg: format!("records mix sites {:?} and {:?}", first.site_id, r.site_id),
        });
    }
    let mut sorted: Vec<&TransectRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.survey_date);
    if let Some(w) = sorted.windows(2).find(|w| w[0].survey_date == w[1].survey_date) {
        return Err(StatsError::InvalidRecord {
            row: 0,
            msg: format!("two surveys of {} on {}", w[0].site_id, w[0].survey_date),
        });
    }
    Ok(at
        .iter()
        .map(|d| {
            let i = sorted.partition_point(|r| r.survey_date < *d);
            if i < sorted.len() && sorted[i].survey_date == *d {
                return Some(sorted[i].values());
            }
            if i == 0 || i == sorted.len() {
                return None;
            }
            let (a, b) = (sorted[i - 1], sorted[i]);
            let frac = (*d - a.survey_date).num_days() as f64 / (b.survey_date - a.survey_date).num_days() as f64;
            let (va, vb) = (a.values().0, b.values().0);
            Some(ParameterValues(std::array::from_fn(|k| va[k] + frac * (vb[k] - va[k]))))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn rec(site: &str, date: NaiveDate, cover: f64) -> TransectRecord {
        TransectRecord {
            site_id: site.into(),
            survey_date: date,
            live_coral_richness: 12.0,
            live_coral_size: 30.0,
            live_coral_cover: cover,
            dead_coral_cover: 10.0,
            invertebrate_cover: 5.0,
            algal_cover: 20.0,
            macroalgal_cover: 8.0,
        }
    }

    fn day(n: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::TimeDelta::days(n)
    }

    #[test]
    fn midpoint_and_no_extrapolation() {
        let r = vec![rec("s", day(0), 20.0), rec("s", day(100), 40.0)];
        let v = interpolate_transect(&r, &[day(50), day(150), day(-1)]).unwrap();
        assert_eq!(v[0].unwrap().get(ReefParameter::LiveCoralCover), 30.0);
        assert!(v[1].is_none() && v[2].is_none());
    }

    #[test]
    fn survey_dates_are_exact() {
        let r = vec![rec("s", day(0), 20.3), rec("s", day(37), 41.7), rec("s", day(91), 13.1)];
        let v = interpolate_transect(&r, &[day(0), day(37), day(91)]).unwrap();
        let got: Vec<f64> = v.iter().map(|x| x.unwrap().get(ReefParameter::LiveCoralCover)).collect();
        assert_eq!(got, vec![20.3, 41.7, 13.1]);
    }

    #[test]
    fn single_survey_only_on_its_date() {
        let r = vec![rec("s", day(10), 20.0)];
        let v = interpolate_transect(&r, &[day(9), day(10), day(11)]).unwrap();
        assert_eq!(v.iter().map(Option::is_some).collect::<Vec<_>>(), vec![false, true, false]);
    }

    #[test]
    fn validation_rules() {
        let mut r = rec("s", day(0), 20.0);
        assert!(r.validate().is_ok());
        r.macroalgal_cover = 25.0;
        assert!(r.validate().unwrap_err().contains("exceeds algal_cover"));
        let mut r = rec("s", day(0), 120.0);
        assert!(r.validate().is_err());
        r.live_coral_cover = 50.0;
        r.live_coral_size = 150.0; // cm, not a percentage
        assert!(r.validate().is_ok());
    }

    #[test]
    fn csv_rows_validated() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("t.csv");
        let header = "site_id,survey_date,live_coral_richness,live_coral_size,live_coral_cover,dead_coral_cover,invertebrate_cover,algal_cover,macroalgal_cover\n";
        std::fs::write(&p, format!("{header}hantu,2020-03-01,14,25.5,30,10,5,20,8\n")).unwrap();
        let r = read_transect_csv(&p).unwrap();
        assert_eq!(r[0].survey_date, NaiveDate::from_ymd_opt(2020, 3, 1).unwrap());
        std::fs::write(&p, format!("{header}hantu,2020-03-01,14,25.5,30,10,5,20,8\nhantu,2020-06-01,14,25.5,30,10,5,20,28\n")).unwrap();
        assert!(matches!(read_transect_csv(&p), Err(StatsError::InvalidRecord { row: 2, .. })));
    }

    #[test]
    fn parameter_names_round_trip() {
        for p in ReefParameter::ALL {
            assert_eq!(p.as_str().parse::<ReefParameter>().unwrap(), p);
        }
    }
}
