//! Error metrics and rolling-origin cross-validation.
//!
//! The observed records are cut into `n_quantiles` contiguous blocks. Fold
//! `k` drops the latest `k` blocks, tests on the next-latest one and trains on
//! everything before it, so fold 0 tests on the most recent block.

use std::ops::Range;
use std::sync::Arc;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{self, FittedLagModel, LagModelConfig};
use crate::calendar::HolidayTable;
use crate::error::{Error, Result};
use crate::forecaster::{self, ForecasterConfig};
use crate::series::DailySeries;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSet {
    pub mae: f64,
    /// Percent.
    pub mape: f64,
    pub mse: f64,
    pub rmse: f64,
}

pub fn compute_metrics(actual: &[f64], predicted: &[f64]) -> Result<MetricSet> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(Error::EmptySeries);
    }
    if let Some(i) = actual.iter().position(|a| *a == 0.0) {
        return Err(Error::ZeroActual(i));
    }
    let n = actual.len() as f64;
    let (mut abs, mut pct, mut sq) = (0.0, 0.0, 0.0);
    for (a, p) in actual.iter().zip(predicted) {
        let e = a - p;
        abs += e.abs();
        pct += e.abs() / a.abs();
        sq += e * e;
    }
    let mse = sq / n;
    Ok(MetricSet {
        mae: abs / n,
        mape: 100.0 * pct / n,
        mse,
        rmse: mse.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub fold: usize,
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_start: NaiveDate,
    pub test_end: NaiveDate,
    /// Record positions within the series.
    pub train_records: Range<usize>,
    pub test_records: Range<usize>,
}

/// Record ranges of the `n_quantiles` blocks; the remainder of
/// `N / n_quantiles` goes to the earliest block.
pub fn quantile_blocks(n_records: usize, n_quantiles: usize) -> Vec<Range<usize>> {
    let size = n_records / n_quantiles;
    let rem = n_records - size * n_quantiles;
    (0..n_quantiles)
        .map(|i| {
            if i == 0 {
                0..size + rem
            } else {
                rem + i * size..rem + (i + 1) * size
            }
        })
        .collect()
}

pub fn make_folds(series: &DailySeries, n_quantiles: usize, n_folds: usize) -> Result<Vec<FoldSpec>> {
    if n_folds == 0 || n_folds >= n_quantiles {
        return Err(Error::InvalidConfig(format!(
            "need 0 < n_folds < n_quantiles, got {n_folds} folds and {n_quantiles} quantiles"
        )));
    }
    if series.len() < n_quantiles {
        return Err(Error::TooFewObservations {
            required: n_quantiles,
            actual: series.len(),
        });
    }
    let blocks = quantile_blocks(series.len(), n_quantiles);
    let dates = series.dates();
    Ok((0..n_folds)
        .map(|k| {
            let test = blocks[n_quantiles - 1 - k].clone();
            let train = 0..test.start;
            FoldSpec {
                fold: k,
                train_start: dates[train.start],
                train_end: dates[train.end - 1],
                test_start: dates[test.start],
                test_end: dates[test.end - 1],
                train_records: train,
                test_records: test,
            }
        })
        .collect())
}

/// Anything that can be trained on one fold and scored on the next block.
pub trait FoldModel: Sync {
    fn fit_predict(&self, train: &DailySeries, test_dates: &[NaiveDate]) -> Result<Vec<f64>>;
}

impl<F> FoldModel for F
where
    F: Fn(&DailySeries, &[NaiveDate]) -> Result<Vec<f64>> + Sync,
{
    fn fit_predict(&self, train: &DailySeries, test_dates: &[NaiveDate]) -> Result<Vec<f64>> {
        self(train, test_dates)
    }
}

/// The two model families the tool evaluates.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    Additive {
        config: ForecasterConfig,
        holidays: Arc<HolidayTable>,
    },
    Lag(LagModelConfig),
}

impl FoldModel for ModelSpec {
    fn fit_predict(&self, train: &DailySeries, test_dates: &[NaiveDate]) -> Result<Vec<f64>> {
        match self {
            ModelSpec::Additive { config, holidays } => {
                let model = forecaster::fit(train, config, holidays)?;
                Ok(model.predict(test_dates).yhat())
            }
            ModelSpec::Lag(config) => {
                let model = baseline::fit_series(train, config)?;
                lag_predict_dates(&model, train, test_dates)
            }
        }
    }
}

/// Recursive forecast from the end of `train`, read off at `dates`.
pub fn lag_predict_dates(model: &FittedLagModel, train: &DailySeries, dates: &[NaiveDate]) -> Result<Vec<f64>> {
    let last = train.last_date().ok_or(Error::EmptySeries)?;
    let lags = model.lags();
    if train.len() < lags {
        return Err(Error::TooFewObservations {
            required: lags,
            actual: train.len(),
        });
    }
    let history = &train.values()[train.len() - lags..];
    let horizon = dates.iter().map(|d| (*d - last).num_days()).max().unwrap_or(0);
    if horizon < 1 {
        return Err(Error::InvalidConfig(
            "prediction dates must follow the training data".into(),
        ));
    }
    let path = model.forecast_recursive(history, horizon as usize)?;
    dates
        .iter()
        .map(|d| {
            let h = (*d - last).num_days();
            if h < 1 {
                Err(Error::InvalidConfig(format!("date {d} precedes the forecast origin")))
            } else {
                Ok(path[h as usize - 1])
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub spec: FoldSpec,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    pub mean: MetricSet,
    /// Population standard deviation across folds.
    pub std: MetricSet,
}

impl CvReport {
    pub fn from_folds(folds: Vec<FoldResult>) -> Self {
        let metrics: Vec<MetricSet> = folds.iter().map(|f| f.metrics).collect();
        let (mean, std) = summarize(&metrics);
        Self { folds, mean, std }
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["fold", "mae", "mape", "mse", "rmse"])?;
        let mut row = |label: String, m: &MetricSet| {
            w.write_record([
                label,
                m.mae.to_string(),
                m.mape.to_string(),
                m.mse.to_string(),
                m.rmse.to_string(),
            ])
        };
        for f in &self.folds {
            row(f.spec.fold.to_string(), &f.metrics)?;
        }
        row("mean".into(), &self.mean)?;
        row("std".into(), &self.std)?;
        w.flush()?;
        Ok(())
    }
}

fn summarize(metrics: &[MetricSet]) -> (MetricSet, MetricSet) {
    let n = metrics.len() as f64;
    let pick: [fn(&MetricSet) -> f64; 4] = [|m| m.mae, |m| m.mape, |m| m.mse, |m| m.rmse];
    let mut mean = [0.0; 4];
    let mut std = [0.0; 4];
    for (i, f) in pick.iter().enumerate() {
        let mu = metrics.iter().map(f).sum::<f64>() / n;
        let var = metrics.iter().map(|m| (f(m) - mu).powi(2)).sum::<f64>() / n;
        mean[i] = mu;
        std[i] = var.sqrt();
    }
    let build = |v: [f64; 4]| MetricSet {
        mae: v[0],
        mape: v[1],
        mse: v[2],
        rmse: v[3],
    };
    (build(mean), build(std))
}

/// Fits and scores every fold. Folds run in parallel on the current rayon
/// pool; results are assembled in fold order.
pub fn run_cv<M: FoldModel + ?Sized>(
    series: &DailySeries,
    model: &M,
    n_quantiles: usize,
    n_folds: usize,
) -> Result<CvReport> {
    let folds = make_folds(series, n_quantiles, n_folds)?;
    let results: Vec<Result<FoldResult>> = folds
        .into_par_iter()
        .map(|spec| {
            let wrap = |e: Error| Error::Fold {
                fold: spec.fold,
                source: Box::new(e),
            };
            let train = series.slice(spec.train_records.clone());
            let test = series.slice(spec.test_records.clone());
            let predicted = model.fit_predict(&train, test.dates()).map_err(wrap)?;
            let metrics = compute_metrics(test.values(), &predicted).map_err(wrap)?;
            Ok(FoldResult { spec, metrics })
        })
        .collect();
    let folds = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CvReport::from_folds(folds))
}
