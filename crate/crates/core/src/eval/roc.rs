use super::{EvalError, Result};
use crate::dsp::Envelope;

/// Normalized clean-envelope level above which a sample is a signal event.
pub const EVENT_THRESHOLD: f64 = 0.01;

const GRID_POINTS: usize = 512;
const MAX_EXACT_VALUES: usize = 1_000_000;

/// Min-max normalization to `[0, 1]`. A constant envelope has no dynamic
/// range and maps to all zeros.
pub fn normalize_envelope(env: &Envelope) -> Envelope {
    let (lo, hi) = env
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let values = if hi > lo {
        let span = hi - lo;
        env.values.iter().map(|v| (v - lo) / span).collect()
    } else {
        log::warn!("constant envelope of {} samples normalized to zeros", env.len());
        vec![0.0; env.len()]
    };
    Envelope {
        values,
        sample_rate: env.sample_rate,
    }
}

/// Signal-event mask of a normalized clean envelope (strictly above 0.01).
pub fn label_signal_events(clean_norm: &Envelope) -> Vec<bool> {
    clean_norm.values.iter().map(|&v| v > EVENT_THRESHOLD).collect()
}

/// Block-mean decimation to roughly `target_hz`; the last block may be partial.
pub fn decimate_envelope(env: &Envelope, target_hz: f64) -> Envelope {
    let q = ((env.sample_rate as f64 / target_hz).round() as usize).max(1);
    if q == 1 {
        return env.clone();
    }
    Envelope {
        values: env.values.chunks(q).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect(),
        sample_rate: ((env.sample_rate as f64 / q as f64).round() as u32).max(1),
    }
}

/// `GRID_POINTS` evenly spaced thresholds on `[0, 1]`, descending.
pub fn linear_grid() -> Vec<f64> {
    (0..GRID_POINTS).rev().map(|i| i as f64 / (GRID_POINTS - 1) as f64).collect()
}

/// The linear grid plus every distinct value of `values` (when there are at
/// most a million), sorted descending.
pub fn threshold_grid(values: &[f64]) -> Vec<f64> {
    let mut g = linear_grid();
    if values.len() <= MAX_EXACT_VALUES {
        g.extend(values.iter().map(|v| v.clamp(0.0, 1.0)));
    }
    g.sort_by(|a, b| b.total_cmp(a));
    g.dedup();
    g
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    /// `None` when the mask has no signal samples.
    pub tpr: Option<f64>,
    /// `None` when the mask has no non-signal samples.
    pub fpr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Ordered by threshold, descending.
    pub points: Vec<RocPoint>,
    /// Trapezoidal area; `None` when TPR or FPR is undefined.
    pub auc: Option<f64>,
}

impl RocCurve {
    fn from_points(points: Vec<RocPoint>) -> Self {
        let auc = area(&points);
        Self { points, auc }
    }

    /// TPR and FPR never increase with the threshold.
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| {
            let ok = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(a), Some(b)) => b >= a,
                _ => true,
            };
            ok(w[0].tpr, w[1].tpr) && ok(w[0].fpr, w[1].fpr)
        })
    }

    /// The operating point at exactly `threshold`, if it is on the grid.
    pub fn at(&self, threshold: f64) -> Option<RocPoint> {
        self.points.iter().copied().find(|p| p.threshold == threshold)
    }
}

/// Trapezoid over FPR. The curve is anchored at (0, 0); after the lowest
/// threshold it is closed horizontally to FPR = 1 and then vertically to
/// (1, 1), which adds no area. A detector that never fires thus scores 0.
fn area(points: &[RocPoint]) -> Option<f64> {
    let mut prev = (0.0, 0.0);
    let mut a = 0.0;
    for p in points {
        let (f, t) = (p.fpr?, p.tpr?);
        a += (f - prev.0) * (t + prev.1) / 2.0;
        prev = (f, t);
    }
    a += (1.0 - prev.0) * prev.1;
    Some(a)
}

/// Sample-level ROC: at each threshold τ, a test sample is detected when its
/// value is strictly above τ.
pub fn roc(test_norm: &[f64], mask: &[bool], thresholds: &[f64]) -> Result<RocCurve> {
    if test_norm.len() != mask.len() {
        return Err(EvalError::LengthMismatch {
            what: "test envelope".into(),
            got: test_norm.len(),
            want: mask.len(),
        });
    }
    if test_norm.is_empty() {
        return Err(EvalError::Empty("empty envelope".into()));
    }
    if let Some(&t) = thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(EvalError::BadThreshold(t));
    }
    let mut taus = thresholds.to_vec();
    taus.sort_by(|a, b| b.total_cmp(a));
    taus.dedup();

    let mut order: Vec<usize> = (0..test_norm.len()).collect();
    order.sort_by(|&a, &b| test_norm[b].total_cmp(&test_norm[a]));
    let positives = mask.iter().filter(|m| **m).count();
    let negatives = mask.len() - positives;

    let (mut tp, mut fp, mut next) = (0usize, 0usize, 0usize);
    let points = taus
        .into_iter()
        .map(|tau| {
            while next < order.len() && test_norm[order[next]] > tau {
                if mask[order[next]] {
                    tp += 1;
                } else {
                    fp += 1;
                }
                next += 1;
            }
            RocPoint {
                threshold: tau,
                tpr: (positives > 0).then(|| tp as f64 / positives as f64),
                fpr: (negatives > 0).then(|| fp as f64 / negatives as f64),
            }
        })
        .collect();
    Ok(RocCurve::from_points(points))
}

/// Threshold-wise mean of curves computed on one common grid; undefined
/// rates are skipped.
pub fn average_curves(curves: &[RocCurve]) -> Result<RocCurve> {
    let first = curves.first().ok_or_else(|| EvalError::Empty("no curves to average".into()))?;
    if curves
        .iter()
        .any(|c| c.points.len() != first.points.len() || c.points.iter().zip(&first.points).any(|(a, b)| a.threshold != b.threshold))
    {
        return Err(EvalError::GridMismatch);
    }
    let mean = |vals: Vec<f64>| (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
    let points = (0..first.points.len())
        .map(|i| RocPoint {
            threshold: first.points[i].threshold,
            tpr: mean(curves.iter().filter_map(|c| c.points[i].tpr).collect()),
            fpr: mean(curves.iter().filter_map(|c| c.points[i].fpr).collect()),
        })
        .collect();
    Ok(RocCurve::from_points(points))
}
