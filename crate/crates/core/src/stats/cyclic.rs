use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate};
use nalgebra::{DMatrix, DVector};

use super::{Result, StatsError};

const YEAR: f64 = 365.0;
/// Minimum circular day-of-year coverage for a fit.
pub const MIN_SPAN_DAYS: f64 = 120.0;

/// Day of year with January 1 as day 0.
pub fn day_of_year(d: NaiveDate) -> f64 {
    d.ordinal0() as f64
}

/// `C(d) = A·cos(2π(d − φ)/365) + B`; the curve peaks at `d = φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicFit {
    /// Amplitude, non-negative.
    pub a: f64,
    /// Offset.
    pub b: f64,
    /// Phase in days, `[0, 365)`; `None` when the amplitude vanishes.
    pub phi: Option<f64>,
    pub residual_rms: f64,
    pub n: usize,
}

impl CyclicFit {
    pub fn eval(&self, day: f64) -> f64 {
        match self.phi {
            Some(phi) => self.a * (2.0 * PI * (day - phi) / YEAR).cos() + self.b,
            None => self.b,
        }
    }
}

/// Length of the shortest arc of the year containing every day.
fn circular_span(days: &[f64]) -> f64 {
    let mut d: Vec<f64> = days.iter().map(|v| v.rem_euclid(YEAR)).collect();
    d.sort_by(f64::total_cmp);
    let wrap_gap = d[0] + YEAR - d[d.len() - 1];
    let max_gap = d.windows(2).map(|w| w[1] - w[0]).fold(wrap_gap, f64::max);
    YEAR - max_gap
}

/// Least-squares fit of the annual cycle through the linearization
/// `C = α·cos(2πd/365) + β·sin(2πd/365) + B`, which is exact for this model
/// class, so the fit is the global optimum.
pub fn fit_cyclic(obs: &[(f64, f64)]) -> Result<CyclicFit> {
    let n = obs.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples { need: 3, got: n });
    }
    if obs.iter().any(|(d, c)| !d.is_finite() || !c.is_finite()) {
        return Err(StatsError::NonFinite("cyclic observations"));
    }
    let days: Vec<f64> = obs.iter().map(|o| o.0).collect();
    let span = circular_span(&days);
    if span < MIN_SPAN_DAYS {
        return Err(StatsError::ShortSpan {
            span_days: span,
            min: MIN_SPAN_DAYS,
        });
    }
    let w = 2.0 * PI / YEAR;
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => (w * obs[i].0).cos(),
        1 => (w * obs[i].0).sin(),
        _ => 1.0,
    });
    let y = DVector::from_iterator(n, obs.iter().map(|o| o.1));
    let coef = x
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|_| StatsError::RankDeficient {
            condition: f64::INFINITY,
            limit: 1e8,
        })?;
    let (alpha, beta, b) = (coef[0], coef[1], coef[2]);
    let a = alpha.hypot(beta);
    let phi = (a > 1e-9 * b.abs().max(1.0)).then(|| (beta.atan2(alpha) / w).rem_euclid(YEAR));
    let resid = &y - &x * &coef;
    Ok(CyclicFit {
        a: if phi.is_some() { a } else { 0.0 },
        b,
        phi,
        residual_rms: (resid.norm_squared() / n as f64).sqrt(),
        n,
    })
}
