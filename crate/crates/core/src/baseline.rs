//! OLS lag-regression baseline.
//!
//! Predicts the next day from the previous `T_x` days and forecasts further
//! ahead by feeding each prediction back into the window.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::DailySeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LagModelConfig {
    pub input_sequence_length: usize,
    pub ridge_epsilon: f64,
}

impl Default for LagModelConfig {
    fn default() -> Self {
        Self {
            input_sequence_length: 300,
            ridge_epsilon: 1e-8,
        }
    }
}

impl LagModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_sequence_length == 0 {
            return Err(Error::InvalidConfig("input_sequence_length must be at least 1".into()));
        }
        if !(self.ridge_epsilon >= 0.0 && self.ridge_epsilon.is_finite()) {
            return Err(Error::InvalidConfig("ridge_epsilon must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedLagModel {
    pub intercept: f64,
    /// Oldest lag first; the last weight applies to the previous day.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagMatrix {
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

/// One row per date whose `T_x` preceding calendar days are all present.
pub fn build_lag_matrix(series: &DailySeries, lags: usize) -> Result<LagMatrix> {
    if lags == 0 {
        return Err(Error::InvalidConfig("lag length must be at least 1".into()));
    }
    let dates = series.dates();
    let values = series.values();
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for i in lags..dates.len() {
        // Dates are strictly increasing, so a full calendar window is exactly
        // `lags` days wide in `lags` steps.
        if (dates[i] - dates[i - lags]).num_days() == lags as i64 {
            rows.push(values[i - lags..i].to_vec());
            targets.push(values[i]);
        }
    }
    if rows.is_empty() {
        return Err(Error::TooFewObservations {
            required: lags + 1,
            actual: series.len(),
        });
    }
    Ok(LagMatrix { rows, targets })
}

/// Minimizes `Σ(y - b - w·x)² + ε‖w‖²` through the normal equations.
pub fn fit_ols(rows: &[Vec<f64>], targets: &[f64], config: &LagModelConfig) -> Result<FittedLagModel> {
    config.validate()?;
    let p = config.input_sequence_length;
    if rows.len() != targets.len() {
        return Err(Error::LengthMismatch(targets.len(), rows.len()));
    }
    if rows.len() < p + 1 {
        return Err(Error::TooFewObservations {
            required: p + 1,
            actual: rows.len(),
        });
    }
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::InvalidConfig(format!("every row must have {p} lags")));
    }
    if rows.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("lag matrix"));
    }

    // Centering removes the unpenalized intercept from the system exactly.
    let n = rows.len();
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let y = DVector::from_column_slice(targets);
    let x_mean = x.row_mean();
    let y_mean = y.mean();
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= &x_mean;
    }
    let yc = y.add_scalar(-y_mean);

    let mut gram = xc.tr_mul(&xc);
    for i in 0..p {
        gram[(i, i)] += config.ridge_epsilon;
    }
    let rhs = xc.tr_mul(&yc);
    let w = match gram.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => gram.lu().solve(&rhs).ok_or(Error::Singular("lag normal equations"))?,
    };
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("lag normal equations"));
    }
    let intercept = y_mean - x_mean.transpose().dot(&w);
    Ok(FittedLagModel {
        intercept,
        weights: w.iter().copied().collect(),
    })
}

pub fn fit_series(series: &DailySeries, config: &LagModelConfig) -> Result<FittedLagModel> {
    let m = build_lag_matrix(series, config.input_sequence_length)?;
    fit_ols(&m.rows, &m.targets, config)
}

impl FittedLagModel {
    pub fn lags(&self) -> usize {
        self.weights.len()
    }

    pub fn predict_one(&self, window: &[f64]) -> f64 {
        self.intercept + window.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>()
    }

    /// Recursive multi-step forecast from exactly `T_x` history values.
    pub fn forecast_recursive(&self, history: &[f64], horizon: usize) -> Result<Vec<f64>> {
        if horizon < 1 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        if history.len() != self.lags() {
            return Err(Error::InvalidConfig(format!(
                "history has {} values, model needs {}",
                history.len(),
                self.lags()
            )));
        }
        let mut window: std::collections::VecDeque<f64> = history.iter().copied().collect();
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let next = self.predict_one(window.make_contiguous());
            out.push(next);
            window.pop_front();
            window.push_back(next);
        }
        Ok(out)
    }
}

pub fn forecast_recursive(model: &FittedLagModel, history: &[f64], horizon: usize) -> Result<Vec<f64>> {
    model.forecast_recursive(history, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn day(i: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Duration::days(i)
    }

    fn contiguous(values: &[f64]) -> DailySeries {
        DailySeries::new((0..values.len() as i64).map(day).collect(), values.to_vec()).unwrap()
    }

    fn cfg(lags: usize, eps: f64) -> LagModelConfig {
        LagModelConfig {
            input_sequence_length: lags,
            ridge_epsilon: eps,
        }
    }

    #[test]
    fn contiguous_row_count() {
        let s = contiguous(&(0..50).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(build_lag_matrix(&s, 7).unwrap().rows.len(), 43);
    }

    #[test]
    fn lag_one_small_series() {
        let m = build_lag_matrix(&contiguous(&[1.0, 2.0, 3.0]), 1).unwrap();
        assert_eq!(m.rows, vec![vec![1.0], vec![2.0]]);
        assert_eq!(m.targets, vec![2.0, 3.0]);
    }

    #[test]
    fn windows_across_gap_are_skipped() {
        let n = 30i64;
        let missing = 12i64;
        let lags = 4usize;
        let dates: Vec<_> = (0..n).filter(|i| *i != missing).map(day).collect();
        let values: Vec<f64> = dates.iter().map(|_| 1.0).collect();
        let s = DailySeries::new(dates.clone(), values).unwrap();
        // Oracle: enumerate every calendar day and check its full window.
        let present = |i: i64| i != missing && (0..n).contains(&i);
        let expected = (0..n)
            .filter(|&d| present(d) && (1..=lags as i64).all(|k| present(d - k)))
            .count();
        assert_eq!(expected, 30 - 1 - 4 - 4);
        assert_eq!(build_lag_matrix(&s, lags).unwrap().rows.len(), expected);
    }

    #[test]
    fn no_windows_errors() {
        assert!(build_lag_matrix(&contiguous(&[1.0, 2.0]), 5).is_err());
    }

    #[test]
    fn identity_on_last_lag() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lags = 5;
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..lags).map(|_| rng.random_range(0.0..10.0)).collect())
            .collect();
        let targets: Vec<f64> = rows.iter().map(|r| r[lags - 1]).collect();
        let m = fit_ols(&rows, &targets, &cfg(lags, 1e-8)).unwrap();
        assert!(m.intercept.abs() < 1e-6, "{}", m.intercept);
        for (i, w) in m.weights.iter().enumerate() {
            let want = if i == lags - 1 { 1.0 } else { 0.0 };
            assert!((w - want).abs() < 1e-6, "w[{i}] = {w}");
        }
        let fc = m.forecast_recursive(&rows[0], 4).unwrap();
        for v in fc {
            assert!((v - rows[0][lags - 1]).abs() < 1e-5);
        }
    }

    #[test]
    fn constant_series_predicts_constant() {
        let s = contiguous(&[5.0; 40]);
        let m = fit_series(&s, &cfg(3, 1e-8)).unwrap();
        let one = m.predict_one(&[5.0, 5.0, 5.0]);
        assert!((one - 5.0).abs() < 1e-9);
        for v in m.forecast_recursive(&[5.0; 3], 10).unwrap() {
            assert!((v - 5.0).abs() < 1e-9);
        }
    }

    fn ar1_series() -> Vec<f64> {
        let mut y = vec![10.0];
        for _ in 0..30 {
            let prev = *y.last().unwrap();
            y.push(0.5 * prev + 1.0);
        }
        y
    }

    #[test]
    fn recovers_affine_ar1() {
        let m = fit_series(&contiguous(&ar1_series()), &cfg(1, 1e-8)).unwrap();
        assert!((m.weights[0] - 0.5).abs() < 1e-6, "{:?}", m.weights);
        assert!((m.intercept - 1.0).abs() < 1e-6, "{}", m.intercept);

        // Hand iteration from y = 10: 6, 4, 3.
        let fc = m.forecast_recursive(&[10.0], 3).unwrap();
        for (got, want) in fc.iter().zip([6.0, 4.0, 3.0]) {
            assert!((got - want).abs() < 1e-5, "{got} vs {want}");
        }
        assert_eq!(fc[0], m.predict_one(&[10.0]));
    }

    #[test]
    fn horizon_zero_rejected() {
        let m = FittedLagModel {
            intercept: 0.0,
            weights: vec![1.0],
        };
        assert!(m.forecast_recursive(&[1.0], 0).is_err());
        assert!(m.forecast_recursive(&[1.0, 2.0], 1).is_err());
    }

    proptest! {
        #[test]
        fn residuals_orthogonal_without_ridge(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lags = 3;
            let rows: Vec<Vec<f64>> = (0..40)
                .map(|_| (0..lags).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let targets: Vec<f64> = rows.iter().map(|r| r[0] - 2.0 * r[2] + rng.random_range(-0.5..0.5)).collect();
            let m = fit_ols(&rows, &targets, &cfg(lags, 0.0)).unwrap();
            let resid: Vec<f64> = rows.iter().zip(&targets).map(|(r, y)| y - m.predict_one(r)).collect();
            prop_assert!(resid.iter().sum::<f64>().abs() < 1e-8);
            for j in 0..lags {
                let dotp: f64 = rows.iter().zip(&resid).map(|(r, e)| r[j] * e).sum();
                prop_assert!(dotp.abs() < 1e-8, "column {} dot {}", j, dotp);
            }
        }

        #[test]
        fn recursive_forecast_splits(h1 in 1usize..10, h2 in 1usize..10,
                                     w in prop::collection::vec(-0.4f64..0.4, 3),
                                     hist in prop::collection::vec(0.0f64..10.0, 3)) {
            let m = FittedLagModel { intercept: 1.0, weights: w };
            let whole = m.forecast_recursive(&hist, h1 + h2).unwrap();
            let first = m.forecast_recursive(&hist, h1).unwrap();
            let joined: Vec<f64> = hist.iter().chain(&first).copied().collect();
            let second = m.forecast_recursive(&joined[joined.len() - 3..], h2).unwrap();
            let concat: Vec<f64> = first.into_iter().chain(second).collect();
            prop_assert_eq!(whole, concat);
        }
    }
}
