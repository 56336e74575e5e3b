use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::Deserialize;

use super::FigureKind;
use crate::indices::{date_hour_matrix, diel_profile, monthly_means, IndexKind, IndexSeries, Units};
use crate::stats::{fit_cyclic, month_midpoint};

/// A polyline; `None` values break the line.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub name: String,
    pub points: Vec<(f64, Option<f64>)>,
    pub dashed: bool,
    pub markers: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plot {
    Lines {
        title: String,
        x_label: String,
        y_label: String,
        x_range: (f64, f64),
        y_range: (f64, f64),
        lines: Vec<Line>,
    },
    /// Rows are dates, columns hours; `None` cells are drawn in the no-data color.
    Heatmap {
        title: String,
        value_label: String,
        dates: Vec<NaiveDate>,
        cells: Vec<[Option<f64>; 24]>,
    },
    Bars {
        title: String,
        y_label: String,
        labels: Vec<String>,
        values: Vec<Option<f64>>,
        marks: Vec<String>,
    },
}

/// Plot data plus its CSV table. Numbers in the table are the drawn numbers,
/// printed in shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub kind: FigureKind,
    pub stem: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub plot: Plot,
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn stem(prefix: &str, s: &IndexSeries, denoised: bool) -> String {
    let suffix = if denoised { "_denoised" } else { "" };
    format!("{prefix}_{}_{}{suffix}", slug(&s.site_id), s.kind)
}

/// Axis label; dB axes say when levels are relative to full scale.
pub fn value_label(kind: IndexKind, units: Units) -> String {
    match kind {
        IndexKind::SplLow | IndexKind::SplHigh => {
            let band = if kind == IndexKind::SplLow { "low band" } else { "high band" };
            if units.is_relative() {
                format!("SPL, {band} (dB re full scale, relative)")
            } else {
                format!("SPL, {band} (dB re 1 uPa)")
            }
        }
        IndexKind::AciLow => "ACI, low band".into(),
        IndexKind::SnapRate => "Snap rate (snaps/s)".into(),
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { lo.abs().max(1.0) * 0.05 };
    (lo - pad, hi + pad)
}

fn title(s: &IndexSeries, what: &str, denoised: bool) -> String {
    let d = if denoised { ", denoised" } else { "" };
    format!("{}: {} {what}{d}", s.site_id, s.kind)
}

/// Hourly means over all days.
pub fn diel_figure(s: &IndexSeries, denoised: bool) -> crate::indices::Result<Figure> {
    let p = diel_profile(s, 60)?;
    let points: Vec<(f64, Option<f64>)> = p.bins.iter().map(|b| ((b.start_minute / 60) as f64, b.mean)).collect();
    let rows = p
        .bins
        .iter()
        .zip(&points)
        .map(|(b, (h, m))| vec![num(*h), opt(*m), b.count.to_string()])
        .collect();
    Ok(Figure {
        kind: FigureKind::DielProfile,
        stem: stem("diel", s, denoised),
        header: header(&["hour", "mean", "n"]),
        rows,
        plot: Plot::Lines {
            title: title(s, "diel profile", denoised),
            x_label: "Hour of day".into(),
            y_label: value_label(s.kind, s.units),
            x_range: (0.0, 23.0),
            y_range: padded_range(points.iter().filter_map(|p| p.1)),
            lines: vec![Line {
                name: "hourly mean".into(),
                points,
                dashed: false,
                markers: true,
            }],
        },
    })
}

pub fn date_hour_figure(s: &IndexSeries, denoised: bool) -> Figure {
    let m = date_hour_matrix(s);
    let mut cols = vec!["date".to_string()];
    cols.extend((0..24).map(|h| format!("h{h:02}")));
    let rows = m
        .dates
        .iter()
        .zip(&m.cells)
        .map(|(d, c)| std::iter::once(d.to_string()).chain(c.iter().map(|v| opt(*v))).collect())
        .collect();
    Figure {
        kind: FigureKind::DateHourHeatmap,
        stem: stem("heatmap", s, denoised),
        header: cols,
        rows,
        plot: Plot::Heatmap {
            title: title(s, "by date and hour", denoised),
            value_label: value_label(s.kind, s.units),
            dates: m.dates,
            cells: m.cells,
        },
    }
}

/// Month-of-year means with an annual-cycle fit through them, evaluated at
/// month midpoints. The fit is omitted when the months cover too little of
/// the year.
pub fn monthly_figure(s: &IndexSeries, denoised: bool) -> Figure {
    let months = monthly_means(s);
    let obs: Vec<(f64, f64)> = months.iter().map(|m| (month_midpoint(m.0), m.1)).collect();
    let fit = fit_cyclic(&obs).ok();
    let fitted: Vec<Option<f64>> = obs.iter().map(|o| fit.map(|f| f.eval(o.0))).collect();
    let rows = months
        .iter()
        .zip(&obs)
        .zip(&fitted)
        .map(|((m, o), f)| vec![m.0.to_string(), num(o.0), num(m.1), m.2.to_string(), opt(*f)])
        .collect();
    let mut lines = vec![Line {
        name: "monthly mean".into(),
        points: months.iter().map(|m| (m.0 as f64, Some(m.1))).collect(),
        dashed: false,
        markers: true,
    }];
    if fit.is_some() {
        lines.push(Line {
            name: "annual cycle fit".into(),
            points: months.iter().zip(&fitted).map(|(m, f)| (m.0 as f64, *f)).collect(),
            dashed: true,
            markers: false,
        });
    }
    Figure {
        kind: FigureKind::MonthlyTrend,
        stem: stem("monthly", s, denoised),
        header: header(&["month", "midpoint_day", "mean", "n_days", "cyclic_fit"]),
        rows,
        plot: Plot::Lines {
            title: title(s, "monthly mean", denoised),
            x_label: "Month".into(),
            y_label: value_label(s.kind, s.units),
            x_range: (0.5, 12.5),
            y_range: padded_range(obs.iter().map(|o| o.1).chain(fitted.iter().flatten().copied())),
            lines,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RocCsvRow {
    pub condition: String,
    pub snr_db: f64,
    pub threshold: f64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

fn snr_slug(snr: f64) -> String {
    let s = num(snr).replace('-', "m").replace('.', "p");
    format!("roc_snr_{s}db")
}

/// One figure per SNR with a curve per condition; undefined points are dropped.
pub fn roc_figures(rows: &[RocCsvRow]) -> Vec<Figure> {
    let mut by_snr: BTreeMap<String, (f64, BTreeMap<&str, Vec<(f64, f64, f64)>>)> = BTreeMap::new();
    for r in rows {
        let (Some(tpr), Some(fpr)) = (r.tpr, r.fpr) else { continue };
        let e = by_snr.entry(snr_slug(r.snr_db)).or_insert_with(|| (r.snr_db, BTreeMap::new()));
        e.1.entry(r.condition.as_str()).or_default().push((r.threshold, fpr, tpr));
    }
    let mut figs: Vec<(f64, Figure)> = by_snr
        .into_iter()
        .map(|(stem, (snr, conds))| {
            let mut table = Vec::new();
            let mut lines = Vec::new();
            for (cond, pts) in conds {
                for (t, f, p) in &pts {
                    table.push(vec![cond.to_string(), num(*t), num(*f), num(*p)]);
                }
                lines.push(Line {
                    name: cond.to_string(),
                    points: pts.iter().map(|(_, f, p)| (*f, Some(*p))).collect(),
                    dashed: false,
                    markers: false,
                });
            }
            let fig = Figure {
                kind: FigureKind::Roc,
                stem,
                header: header(&["condition", "threshold", "fpr", "tpr"]),
                rows: table,
                plot: Plot::Lines {
                    title: format!("ROC at SNR {} dB", num(snr)),
                    x_label: "False positive rate".into(),
                    y_label: "True positive rate".into(),
                    x_range: (0.0, 1.0),
                    y_range: (0.0, 1.0),
                    lines,
                },
            };
            (snr, fig)
        })
        .collect();
    figs.sort_by(|a, b| a.0.total_cmp(&b.0));
    figs.into_iter().map(|f| f.1).collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CorrelationCsvRow {
    pub index_kind: String,
    pub mode: String,
    pub scope: String,
    pub reef_parameter: String,
    pub r: Option<f64>,
    pub n: Option<usize>,
    pub t: Option<f64>,
    pub p_value: Option<f64>,
    pub significance: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
}

/// One bar chart of r per (index, mode, scope), bars in input order.
pub fn correlation_figures(rows: &[CorrelationCsvRow]) -> Vec<Figure> {
    let mut groups: BTreeMap<(&str, &str, &str), Vec<&CorrelationCsvRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((&r.index_kind, &r.mode, &r.scope)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((kind, mode, scope), rs)| Figure {
            kind: FigureKind::CorrelationBars,
            stem: format!("correlation_{}_{}_{}", slug(kind), slug(mode), slug(scope)),
            header: header(&["reef_parameter", "r", "significance"]),
            rows: rs
                .iter()
                .map(|r| vec![r.reef_parameter.clone(), opt(r.r), r.significance.clone().unwrap_or_default()])
                .collect(),
            plot: Plot::Bars {
                title: format!("{kind} vs reef parameters ({mode}, {scope})"),
                y_label: "Pearson r".into(),
                labels: rs.iter().map(|r| r.reef_parameter.clone()).collect(),
                values: rs.iter().map(|r| r.r).collect(),
                marks: rs.iter().map(|r| r.significance.clone().unwrap_or_default()).collect(),
            },
        })
        .collect()
}
