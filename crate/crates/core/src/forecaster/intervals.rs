//! Monte-Carlo uncertainty intervals.
//!
//! Each sample perturbs the trend beyond the training window with changepoints
//! drawn at the historical rate (one Bernoulli trial per future day) and
//! magnitudes from `Laplace(0, mean|δ|)`, then adds `Normal(0, σ)` noise.
//! Sample `i` uses its own ChaCha stream derived from the seed and `i`, so the
//! result does not depend on how samples are scheduled across threads.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::config::ForecasterConfig;
use super::model::{FittedForecaster, Forecast};

/// Sorted-sample quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn laplace(rng: &mut impl Rng, scale: f64) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

impl FittedForecaster {
    /// Expected number of new changepoints per future day.
    pub fn future_changepoint_probability(&self) -> f64 {
        if self.changepoints.is_empty() {
            return 0.0;
        }
        // Fraction of the training window eligible for changepoints.
        let eligible = ((self.n_train as f64 * self.config.changepoint_range) + 1e-9)
            .floor()
            .max(1.0);
        let window = eligible / self.n_train as f64;
        let rate = self.changepoints.len() as f64 / window;
        (rate * self.time_scale.day()).min(1.0)
    }

    pub fn mean_abs_delta(&self) -> f64 {
        if self.delta.is_empty() {
            0.0
        } else {
            self.delta.iter().map(|d| d.abs()).sum::<f64>() / self.delta.len() as f64
        }
    }

    /// Raw per-date samples of `yhat`, `samples[i][j]` for sample `i`, date `j`.
    pub fn sample_paths(&self, dates: &[NaiveDate], n_samples: usize, seed: u64) -> Vec<Vec<f64>> {
        let last = self.time_scale.last();
        let horizon = dates.iter().map(|d| (*d - last).num_days()).max().unwrap_or(0).max(0);
        let p_change = self.future_changepoint_probability();
        let lap_scale = self.mean_abs_delta();
        let raws: Vec<_> = dates.iter().map(|d| (self.model_time(*d), self.raw(*d))).collect();
        let day = self.time_scale.day();
        let noise = Normal::new(0.0, self.sigma.max(0.0)).expect("finite sigma");

        (0..n_samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let mut new_cps: Vec<(f64, f64)> = Vec::new();
                if lap_scale > 0.0 && p_change > 0.0 {
                    for h in 1..=horizon {
                        if rng.random::<f64>() < p_change {
                            new_cps.push((1.0 + h as f64 * day, laplace(&mut rng, lap_scale)));
                        }
                    }
                }
                raws.iter()
                    .map(|(t, raw)| {
                        let extra: f64 = new_cps.iter().filter(|(s, _)| t >= s).map(|(s, d)| d * (t - s)).sum();
                        let eps = noise.sample(&mut rng);
                        let trend = (raw.trend + extra) * self.y_scale;
                        let yhat = match self.config.seasonality_mode {
                            super::SeasonalityMode::Additive => {
                                trend + (raw.yearly + raw.weekly + raw.holidays) * self.y_scale
                            }
                            super::SeasonalityMode::Multiplicative => {
                                trend * (1.0 + raw.yearly + raw.weekly + raw.holidays)
                            }
                        };
                        yhat + eps * self.y_scale
                    })
                    .collect()
            })
            .collect()
    }

    /// Point forecast plus `interval_width` bounds from the sampled paths.
    pub fn predict_with_intervals(&self, dates: &[NaiveDate], config: &ForecasterConfig) -> Forecast {
        let samples = self.sample_paths(dates, config.n_interval_samples, config.rng_seed);
        let mut forecast = self.predict(dates);
        let lo_q = (1.0 - config.interval_width) / 2.0;
        let hi_q = 1.0 - lo_q;
        let mut column = vec![0.0; samples.len()];
        for (j, row) in forecast.rows.iter_mut().enumerate() {
            for (c, s) in column.iter_mut().zip(&samples) {
                *c = s[j];
            }
            column.sort_by(f64::total_cmp);
            row.yhat_lower = Some(quantile(&column, lo_q));
            row.yhat_upper = Some(quantile(&column, hi_q));
        }
        forecast
    }
}

pub fn predict_with_intervals(model: &FittedForecaster, dates: &[NaiveDate], config: &ForecasterConfig) -> Forecast {
    model.predict_with_intervals(dates, config)
}
