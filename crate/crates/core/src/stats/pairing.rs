use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{
    day_of_year, fit_cyclic, interpolate_transect, pearson, CorrelationResult, ParameterValues, ReefParameter, Result,
    StatsError, TransectRecord,
};
use crate::indices::{daily_means, mean_of, monthly_means, IndexKind, IndexSeries};
use crate::io::write_csv_records;

/// How acoustic and transect observations are paired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    /// Daily index means against surveys interpolated to that day, pooled over sites.
    #[default]
    Temporal,
    /// Index means over each inter-survey window against the window-mean survey values.
    TemporalWindowed,
    /// One (site-mean index, site-mean parameter) pair per site.
    Spatial,
    /// Per site: monthly index means against the fitted macroalgal annual cycle.
    PerSiteCyclic,
}

impl CorrelationMode {
    pub const ALL: [CorrelationMode; 4] = [
        CorrelationMode::Temporal,
        CorrelationMode::TemporalWindowed,
        CorrelationMode::Spatial,
        CorrelationMode::PerSiteCyclic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationMode::Temporal => "temporal",
            CorrelationMode::TemporalWindowed => "temporal_windowed",
            CorrelationMode::Spatial => "spatial",
            CorrelationMode::PerSiteCyclic => "per_site_cyclic",
        }
    }
}

impl fmt::Display for CorrelationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorrelationMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        CorrelationMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown correlation mode {s:?}"))
    }
}

/// One correlation of an index against a reef parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub index_kind: IndexKind,
    pub mode: CorrelationMode,
    /// `all` for pooled modes, otherwise the site id.
    pub scope: String,
    pub parameter: ReefParameter,
    /// `None` when the correlation is undefined; `note` says why.
    pub result: Option<CorrelationResult>,
    pub note: String,
}

fn group_sites(records: &[TransectRecord]) -> BTreeMap<&str, Vec<TransectRecord>> {
    let mut out: BTreeMap<&str, Vec<TransectRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.site_id.as_str()).or_default().push(r.clone());
    }
    out
}

/// Daily means of `series` paired with the site's surveys interpolated to each day.
fn daily_pairs(series: &IndexSeries, surveys: &[TransectRecord]) -> Result<Vec<(NaiveDate, f64, ParameterValues)>> {
    let daily = daily_means(series);
    let dates: Vec<NaiveDate> = daily.iter().map(|d| d.0).collect();
    let interp = interpolate_transect(surveys, &dates)?;
    Ok(daily
        .into_iter()
        .zip(interp)
        .filter_map(|((d, v), p)| p.map(|p| (d, v, p)))
        .collect())
}

fn survey_mean(surveys: &[TransectRecord]) -> ParameterValues {
    let vals: Vec<[f64; 7]> = surveys.iter().map(|s| s.values().0).collect();
    ParameterValues(std::array::from_fn(|k| vals.iter().map(|v| v[k]).sum::<f64>() / vals.len() as f64))
}

/// Window-mean pairs between consecutive surveys. Windows are `[s_i, s_{i+1})`,
/// the last one closed.
fn windowed_pairs(series: &IndexSeries, surveys: &[TransectRecord]) -> Result<Vec<(f64, ParameterValues)>> {
    let pairs = daily_pairs(series, surveys)?;
    let mut dates: Vec<NaiveDate> = surveys.iter().map(|s| s.survey_date).collect();
    dates.sort();
    let mut out = Vec::new();
    for (w, win) in dates.windows(2).enumerate() {
        let last = w + 2 == dates.len();
        let inside: Vec<&(NaiveDate, f64, ParameterValues)> = pairs
            .iter()
            .filter(|(d, _, _)| *d >= win[0] && (*d < win[1] || (last && *d == win[1])))
            .collect();
        if inside.is_empty() {
            continue;
        }
        let idx: Vec<f64> = inside.iter().map(|p| p.1).collect();
        let Some(m) = mean_of(series.kind, &idx) else { continue };
        let params = ParameterValues(std::array::from_fn(|k| {
            inside.iter().map(|p| p.2 .0[k]).sum::<f64>() / inside.len() as f64
        }));
        out.push((m, params));
    }
    Ok(out)
}

/// Day of year at the middle of a calendar month (non-leap year).
pub fn month_midpoint(month: u32) -> f64 {
    let first = NaiveDate::from_ymd_opt(2021, month, 1).expect("month in 1..=12");
    let next = if month == 12 {
        NaiveDate::from_ymd_opt(2022, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(2021, month + 1, 1)
    }
    .expect("valid date");
    day_of_year(first) + (next - first).num_days() as f64 / 2.0
}

fn row(
    kind: IndexKind,
    mode: CorrelationMode,
    scope: &str,
    parameter: ReefParameter,
    x: &[f64],
    y: &[f64],
) -> CorrelationRow {
    let (result, note) = match pearson(x, y) {
        Ok(r) => (Some(r), String::new()),
        Err(e) => (None, e.to_string()),
    };
    CorrelationRow {
        index_kind: kind,
        mode,
        scope: scope.to_string(),
        parameter,
        result,
        note,
    }
}

fn single_kind(series: &[IndexSeries]) -> Result<IndexKind> {
    let kind = series
        .first()
        .ok_or_else(|| StatsError::BadInput("no index series".into()))?
        .kind;
    if let Some(s) = series.iter().find(|s| s.kind != kind) {
        return Err(StatsError::BadInput(format!("mixed index kinds {kind} and {}", s.kind)));
    }
    let mut sites: Vec<&str> = series.iter().map(|s| s.site_id.as_str()).collect();
    sites.sort();
    if let Some(w) = sites.windows(2).find(|w| w[0] == w[1]) {
        return Err(StatsError::BadInput(format!("two {kind} series for site {:?}", w[0])));
    }
    Ok(kind)
}

/// Correlates one index (one series per site) against every reef parameter.
///
/// Sites without surveys are skipped. Undefined correlations yield rows with
/// `result: None` rather than errors.
pub fn correlate_index(
    series: &[IndexSeries],
    records: &[TransectRecord],
    mode: CorrelationMode,
) -> Result<Vec<CorrelationRow>> {
    let kind = single_kind(series)?;
    let sites = group_sites(records);
    let mut rows = Vec::new();
    match mode {
        CorrelationMode::Temporal | CorrelationMode::TemporalWindowed | CorrelationMode::Spatial => {
            let mut x = Vec::new();
            let mut params = Vec::new();
            for s in series {
                let Some(surveys) = sites.get(s.site_id.as_str()) else { continue };
                match mode {
                    CorrelationMode::Temporal => {
                        for (_, v, p) in daily_pairs(s, surveys)? {
                            x.push(v);
                            params.push(p);
                        }
                    }
                    CorrelationMode::TemporalWindowed => {
                        for (v, p) in windowed_pairs(s, surveys)? {
                            x.push(v);
                            params.push(p);
                        }
                    }
                    _ => {
                        let daily: Vec<f64> = daily_means(s).into_iter().map(|d| d.1).collect();
                        if let Some(m) = mean_of(kind, &daily) {
                            x.push(m);
                            params.push(survey_mean(surveys));
                        }
                    }
                }
            }
            for p in ReefParameter::ALL {
                let y: Vec<f64> = params.iter().map(|v| v.get(p)).collect();
                rows.push(row(kind, mode, "all", p, &x, &y));
            }
        }
        CorrelationMode::PerSiteCyclic => {
            let p = ReefParameter::MacroalgalCover;
            for s in series {
                let Some(surveys) = sites.get(s.site_id.as_str()) else { continue };
                let obs: Vec<(f64, f64)> = surveys.iter().map(|r| (day_of_year(r.survey_date), r.get(p))).collect();
                let fit = match fit_cyclic(&obs) {
                    Ok(f) => f,
                    Err(e) => {
                        rows.push(CorrelationRow {
                            index_kind: kind,
                            mode,
                            scope: s.site_id.clone(),
                            parameter: p,
                            result: None,
                            note: format!("cyclic fit: {e}"),
                        });
                        continue;
                    }
                };
                let monthly = monthly_means(s);
                let x: Vec<f64> = monthly.iter().map(|m| m.1).collect();
                let y: Vec<f64> = monthly.iter().map(|m| fit.eval(month_midpoint(m.0))).collect();
                rows.push(row(kind, mode, &s.site_id, p, &x, &y));
            }
        }
    }
    Ok(rows)
}

/// Rows of a composite design: `[snap_rate, spl_low, aci_low]` and the target.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompositeDesign {
    pub rows: Vec<[f64; 3]>,
    pub target: Vec<f64>,
    /// Site id, plus the date for temporal designs.
    pub labels: Vec<String>,
}

pub const COMPOSITE_KINDS: [IndexKind; 3] = [IndexKind::SnapRate, IndexKind::SplLow, IndexKind::AciLow];

/// Builds the composite design from per-site snap-rate, low-band SPL and
/// low-band ACI series. `Spatial` yields one row per site; any other mode
/// yields one row per day with all three indices and an interpolated survey.
pub fn composite_design(
    series: &[IndexSeries],
    records: &[TransectRecord],
    mode: CorrelationMode,
    parameter: ReefParameter,
) -> Result<CompositeDesign> {
    let sites = group_sites(records);
    let mut by_site: BTreeMap<&str, [Option<&IndexSeries>; 3]> = BTreeMap::new();
    for s in series {
        let Some(j) = COMPOSITE_KINDS.iter().position(|k| *k == s.kind) else { continue };
        let slot = &mut by_site.entry(s.site_id.as_str()).or_default()[j];
        if slot.is_some() {
            return Err(StatsError::BadInput(format!("two {} series for site {:?}", s.kind, s.site_id)));
        }
        *slot = Some(s);
    }
    let mut out = CompositeDesign::default();
    for (site, slots) in by_site {
        let [Some(snap), Some(spl), Some(aci)] = slots else { continue };
        let Some(surveys) = sites.get(site) else { continue };
        let daily: Vec<BTreeMap<NaiveDate, f64>> =
            [snap, spl, aci].iter().map(|s| daily_means(s).into_iter().collect()).collect();
        if mode == CorrelationMode::Spatial {
            let means: Vec<Option<f64>> = [snap, spl, aci]
                .iter()
                .zip(&daily)
                .map(|(s, d)| mean_of(s.kind, &d.values().copied().collect::<Vec<_>>()))
                .collect();
            if let [Some(a), Some(b), Some(c)] = means[..] {
                out.rows.push([a, b, c]);
                out.target.push(survey_mean(surveys).get(parameter));
                out.labels.push(site.to_string());
            }
            continue;
        }
        let dates: Vec<NaiveDate> = daily[0]
            .keys()
            .filter(|d| daily[1].contains_key(d) && daily[2].contains_key(d))
            .copied()
            .collect();
        let interp = interpolate_transect(surveys, &dates)?;
        for (d, p) in dates.iter().zip(interp) {
            let Some(p) = p else { continue };
            out.rows.push([daily[0][d], daily[1][d], daily[2][d]]);
            out.target.push(p.get(parameter));
            out.labels.push(format!("{site}@{d}"));
        }
    }
    Ok(out)
}

pub const CORRELATION_HEADER: [&str; 10] =
    ["index_kind", "mode", "scope", "reef_parameter", "r", "n", "t", "p_value", "significance", "note"];

pub fn write_correlation_csv(path: &Path, rows: &[CorrelationRow]) -> std::io::Result<()> {
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![
                r.index_kind.to_string(),
                r.mode.to_string(),
                r.scope.clone(),
                r.parameter.to_string(),
            ];
            match &r.result {
                Some(c) => v.extend([
                    c.r.to_string(),
                    c.n.to_string(),
                    c.t.to_string(),
                    c.p_value.to_string(),
                    c.tier.to_string(),
                ]),
                None => v.extend(std::iter::repeat_n(String::new(), 5)),
            }
            v.push(r.note.clone());
            v
        })
        .collect();
    write_csv_records(path, &CORRELATION_HEADER, &records)
}
