use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{Result, StatsError};

/// Significance notation: `*` p < 0.05, `**` p < 0.01, `***` p < 0.001.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Significance {
    #[serde(rename = "ns")]
    NotSignificant,
    #[serde(rename = "*")]
    P05,
    #[serde(rename = "**")]
    P01,
    #[serde(rename = "***")]
    P001,
}

impl Significance {
    pub fn from_p(p: f64) -> Self {
        if p < 0.001 {
            Significance::P001
        } else if p < 0.01 {
            Significance::P01
        } else if p < 0.05 {
            Significance::P05
        } else {
            Significance::NotSignificant
        }
    }

    pub fn is_significant(self) -> bool {
        self != Significance::NotSignificant
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Significance::NotSignificant => "ns",
            Significance::P05 => "*",
            Significance::P01 => "**",
            Significance::P001 => "***",
        }
    }
}

impl fmt::Display for Significance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationResult {
    pub r: f64,
    pub n: usize,
    /// `r·sqrt((n-2)/(1-r²))`; infinite for a perfect correlation.
    pub t: f64,
    /// Two-tailed, Student-t with `n - 2` degrees of freedom.
    pub p_value: f64,
    pub tier: Significance,
}

/// Two-tailed p-value of a t statistic.
pub(crate) fn t_test_p(t: f64, dof: f64) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Pearson product-moment correlation with its t-test.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples { need: 3, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("correlation input"));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::Constant("x"));
    }
    if syy == 0.0 {
        return Err(StatsError::Constant("y"));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let dof = (n - 2) as f64;
    let t = if r.abs() == 1.0 {
        r.signum() * f64::INFINITY
    } else {
        r * (dof / (1.0 - r * r)).sqrt()
    };
    let p_value = t_test_p(t, dof);
    Ok(CorrelationResult {
        r,
        n,
        t,
        p_value,
        tier: Significance::from_p(p_value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_correlations() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| -2.0 * v + 7.0).collect();
        assert_eq!(pearson(&x, &x).unwrap().r, 1.0);
        let c = pearson(&x, &y).unwrap();
        assert_eq!(c.r, -1.0);
        assert_eq!(c.p_value, 0.0);
        assert_eq!(c.tier, Significance::P001);
    }

    #[test]
    fn tier_boundaries_are_strict() {
        assert_eq!(Significance::from_p(0.05), Significance::NotSignificant);
        assert_eq!(Significance::from_p(0.0499999), Significance::P05);
        assert_eq!(Significance::from_p(0.01), Significance::P05);
        assert_eq!(Significance::from_p(0.001), Significance::P01);
        assert_eq!(Significance::from_p(0.000999), Significance::P001);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::TooFewSamples { .. })));
        assert!(matches!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(StatsError::Constant("x"))));
        assert!(matches!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(StatsError::LengthMismatch(3, 2))));
        assert!(matches!(pearson(&[1.0, f64::NAN, 3.0], &[1.0, 2.0, 3.0]), Err(StatsError::NonFinite(_))));
    }

    #[test]
    fn uncorrelated_gives_p_one() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.0, 1.0, 0.0, 1.0, 2.0];
        let c = pearson(&x, &y).unwrap();
        assert!(c.r.abs() < 1e-15);
        assert!((c.p_value - 1.0).abs() < 1e-9);
    }
}
