use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::correlation::t_test_p;
use super::{pearson, Result, StatsError};
use crate::io::write_csv_records;

/// Largest accepted condition number of the column-scaled design.
pub const CONDITION_LIMIT: f64 = 1e8;

pub const COMPOSITE_HEADER: [&str; 11] = ["reef_parameter", "a_i", "b_i", "c_i", "d_i", "p_a", "p_b", "p_c", "p_d", "R", "p"];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompositeOptions {
    /// Z-score each index column before fitting; coefficients are then per standard deviation.
    pub standardize: bool,
}

/// `H = a·snap_rate + b·spl + c·aci + d` fitted by ordinary least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeModel {
    /// `[a, b, c, d]`.
    pub coefficients: [f64; 4],
    pub std_errors: [f64; 4],
    /// Two-tailed t-test per coefficient, `n - 4` degrees of freedom.
    pub p_values: [f64; 4],
    /// Pearson correlation between fitted and observed values.
    pub r: f64,
    pub r_p_value: f64,
    pub f_statistic: f64,
    /// Overall regression p-value (F-test, 3 and `n - 4` degrees of freedom).
    pub p: f64,
    pub n: usize,
    pub condition_number: f64,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Column means and standard deviations when fitted standardized.
    pub standardization: Option<[(f64, f64); 3]>,
}

impl CompositeModel {
    pub fn predict(&self, row: [f64; 3]) -> f64 {
        let x = match &self.standardization {
            Some(s) => std::array::from_fn(|j| (row[j] - s[j].0) / s[j].1),
            None => row,
        };
        let c = &self.coefficients;
        c[0] * x[0] + c[1] * x[1] + c[2] * x[2] + c[3]
    }

    /// Coefficients with p ≥ 0.05.
    pub fn insignificant(&self) -> [bool; 4] {
        self.p_values.map(|p| !(p < 0.05))
    }
}

fn column_stats(rows: &[[f64; 3]], j: usize) -> (f64, f64) {
    let n = rows.len() as f64;
    let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
    let var = rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Multi-linear least squares of `target` on `(snap_rate, spl, aci)` rows plus
/// an intercept, via SVD of the column-normalized design.
pub fn fit_composite(rows: &[[f64; 3]], target: &[f64], opts: CompositeOptions) -> Result<CompositeModel> {
    let n = rows.len();
    if n != target.len() {
        return Err(StatsError::LengthMismatch(n, target.len()));
    }
    if n < 5 {
        return Err(StatsError::TooFewSamples { need: 5, got: n });
    }
    if rows.iter().flatten().chain(target).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("composite design"));
    }
    let standardization = opts
        .standardize
        .then(|| std::array::from_fn(|j| column_stats(rows, j)))
        .filter(|s: &[(f64, f64); 3]| s.iter().all(|(_, sd)| *sd > 0.0));
    if opts.standardize && standardization.is_none() {
        return Err(StatsError::RankDeficient {
            condition: f64::INFINITY,
            limit: CONDITION_LIMIT,
        });
    }
    let x = DMatrix::from_fn(n, 4, |i, j| match (j, &standardization) {
        (3, _) => 1.0,
        (j, Some(s)) => (rows[i][j] - s[j].0) / s[j].1,
        (j, None) => rows[i][j],
    });
    let norms: Vec<f64> = (0..4).map(|j| x.column(j).norm()).collect();
    let mut xs = x.clone();
    for (j, nj) in norms.iter().enumerate() {
        if *nj > 0.0 {
            xs.column_mut(j).unscale_mut(*nj);
        }
    }
    let svd = xs.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition_number <= CONDITION_LIMIT) {
        return Err(StatsError::RankDeficient {
            condition: condition_number,
            limit: CONDITION_LIMIT,
        });
    }
    let y = DVector::from_column_slice(target);
    let gamma = svd.solve(&y, 0.0).expect("U and V were computed");
    let beta = DVector::from_fn(4, |j, _| gamma[j] / norms[j]);
    let fitted = &x * &beta;
    let resid = &y - &fitted;

    let dof = (n - 4) as f64;
    let rss = resid.norm_squared();
    let s2 = rss / dof;
    let v = svd.v_t.as_ref().expect("V was computed").transpose();
    let inv_sv2 = svd.singular_values.map(|s| 1.0 / (s * s));
    let mut std_errors = [0.0; 4];
    let mut p_values = [0.0; 4];
    for j in 0..4 {
        let var_gamma: f64 = (0..4).map(|k| v[(j, k)] * v[(j, k)] * inv_sv2[k]).sum::<f64>() * s2;
        let se = var_gamma.sqrt() / norms[j];
        std_errors[j] = se;
        p_values[j] = if se > 0.0 {
            t_test_p(beta[j] / se, dof)
        } else if beta[j] != 0.0 {
            0.0
        } else {
            1.0
        };
    }

    let mean_y = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    if tss == 0.0 {
        return Err(StatsError::Constant("target"));
    }
    let f_statistic = ((tss - rss).max(0.0) / 3.0) / s2;
    let p = if rss == 0.0 {
        0.0
    } else {
        FisherSnedecor::new(3.0, dof).expect("positive degrees of freedom").sf(f_statistic)
    };
    let fitted: Vec<f64> = fitted.iter().copied().collect();
    let (r, r_p_value) = match pearson(&fitted, target) {
        Ok(c) => (c.r, c.p_value),
        Err(_) => (0.0, 1.0),
    };
    Ok(CompositeModel {
        coefficients: [beta[0], beta[1], beta[2], beta[3]],
        std_errors,
        p_values,
        r,
        r_p_value,
        f_statistic,
        p,
        n,
        condition_number,
        fitted,
        residuals: resid.iter().copied().collect(),
        standardization,
    })
}

/// Table layout: reef_parameter, a_i, b_i, c_i, d_i, p_a, p_b, p_c, p_d, R, p.
pub fn write_composite_csv(path: &Path, models: &[(String, CompositeModel)]) -> std::io::Result<()> {
    let rows: Vec<Vec<String>> = models
        .iter()
        .map(|(name, m)| {
            let mut row = vec![name.clone()];
            row.extend(m.coefficients.iter().map(f64::to_string));
            row.extend(m.p_values.iter().map(f64::to_string));
            row.push(m.r.to_string());
            row.push(m.p.to_string());
            row
        })
        .collect();
    write_csv_records(path, &COMPOSITE_HEADER, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Normal};

    fn design(n: usize, rng: &mut impl Rng) -> Vec<[f64; 3]> {
        (0..n)
            .map(|_| [rng.random_range(0.5..8.0), rng.random_range(110.0..130.0), rng.random_range(1500.0..2500.0)])
            .collect()
    }

    #[test]
    fn planted_coefficients_recovered() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x = design(40, &mut rng);
        let y: Vec<f64> = x.iter().map(|r| 0.2 * r[0] - 0.066 * r[1] + 0.038 * r[2] - 53.42).collect();
        let m = fit_composite(&x, &y, CompositeOptions::default()).unwrap();
        for (got, want) in m.coefficients.iter().zip([0.2, -0.066, 0.038, -53.42]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        assert!((m.r - 1.0).abs() < 1e-12);
        for (i, row) in x.iter().enumerate() {
            assert!((m.predict(*row) - m.fitted[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn residuals_orthogonal_to_columns() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x = design(60, &mut rng);
        let noise = Normal::new(0.0, 3.0).unwrap();
        let y: Vec<f64> = x.iter().map(|r| 0.5 * r[0] + 0.1 * r[1] + 0.01 * r[2] + noise.sample(&mut rng)).collect();
        let m = fit_composite(&x, &y, CompositeOptions::default()).unwrap();
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..4 {
            let col: Vec<f64> = x.iter().map(|r| if j == 3 { 1.0 } else { r[j] }).collect();
            let dot: f64 = col.iter().zip(&m.residuals).map(|(a, b)| a * b).sum();
            let cn = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(dot.abs() <= 1e-8 * cn * ynorm, "column {j}: {dot}");
        }
    }

    #[test]
    fn collinear_designs_rejected() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x: Vec<[f64; 3]> = design(20, &mut rng).into_iter().map(|r| [r[0], r[0], r[2]]).collect();
        let y: Vec<f64> = (0..20).map(f64::from).collect();
        assert!(matches!(fit_composite(&x, &y, CompositeOptions::default()), Err(StatsError::RankDeficient { .. })));
        let x: Vec<[f64; 3]> = design(20, &mut rng).into_iter().map(|r| [r[0], 120.0, r[2]]).collect();
        assert!(matches!(fit_composite(&x, &y, CompositeOptions::default()), Err(StatsError::RankDeficient { .. })));
        assert!(matches!(
            fit_composite(&x, &y, CompositeOptions { standardize: true }),
            Err(StatsError::RankDeficient { .. })
        ));
    }

    #[test]
    fn standardized_mode_predicts_identically() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let x = design(30, &mut rng);
        let y: Vec<f64> = x.iter().map(|r| r[0] - 0.2 * r[1] + rng.random_range(-1.0..1.0)).collect();
        let raw = fit_composite(&x, &y, CompositeOptions::default()).unwrap();
        let std = fit_composite(&x, &y, CompositeOptions { standardize: true }).unwrap();
        assert!(std.standardization.is_some());
        for (a, b) in raw.fitted.iter().zip(&std.fitted) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((raw.p - std.p).abs() < 1e-12);
        let sd0 = std.standardization.unwrap()[0].1;
        assert!((std.coefficients[0] - raw.coefficients[0] * sd0).abs() < 1e-9);
    }

    #[test]
    fn too_few_rows() {
        let x = vec![[1.0, 2.0, 3.0]; 4];
        assert!(matches!(
            fit_composite(&x, &[1.0, 2.0, 3.0, 4.0], CompositeOptions::default()),
            Err(StatsError::TooFewSamples { need: 5, got: 4 })
        ));
    }

    #[test]
    fn csv_schema() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x = design(12, &mut rng);
        let y: Vec<f64> = x.iter().map(|r| r[0] + rng.random_range(-1.0..1.0)).collect();
        let m = fit_composite(&x, &y, CompositeOptions::default()).unwrap();
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("c.csv");
        write_composite_csv(&p, &[("live_coral_cover".into(), m)]).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "reef_parameter,a_i,b_i,c_i,d_i,p_a,p_b,p_c,p_d,R,p");
        assert_eq!(lines.next().unwrap().split(',').count(), 11);
    }
}
