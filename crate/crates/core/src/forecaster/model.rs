use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::config::{ForecasterConfig, SeasonalityMode};
use super::features::{days_since_reference, dot, fourier_terms, WEEK_DAYS, YEAR_DAYS};
use super::objective::{ParamLayout, PenalizedObjective, PriorScales};
use super::optimize::{minimize, NewtonOptions, OptimizeTrace, StopReason};
use super::trend::{place_changepoints, trend_slope, trend_value, TrendParams};
use crate::calendar::{HolidayTable, TimeScale};
use crate::error::{Error, Result};
use crate::series::DailySeries;

/// Fitted parameters. Trend, seasonal and holiday coefficients are in
/// normalized units (observations divided by `y_scale`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedForecaster {
    pub config: ForecasterConfig,
    pub time_scale: TimeScale,
    pub y_scale: f64,
    pub n_train: usize,
    pub changepoint_dates: Vec<NaiveDate>,
    pub changepoints: Vec<f64>,
    pub k: f64,
    pub m: f64,
    pub delta: Vec<f64>,
    pub beta_yearly: Vec<f64>,
    pub beta_weekly: Vec<f64>,
    pub kappa: Vec<f64>,
    /// Residual standard deviation, normalized units.
    pub sigma: f64,
    pub holidays: HolidayTable,
    pub fit_report: FitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    pub stop: StopReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub date: NaiveDate,
    pub yhat: f64,
    pub yhat_lower: Option<f64>,
    pub yhat_upper: Option<f64>,
    pub trend: f64,
    pub yearly: f64,
    pub weekly: f64,
    pub holidays: f64,
}

pub const FORECAST_HEADER: [&str; 8] = [
    "date",
    "yhat",
    "yhat_lower",
    "yhat_upper",
    "trend",
    "yearly",
    "weekly",
    "holidays",
];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Forecast {
    pub rows: Vec<ForecastRow>,
}

impl Forecast {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn yhat(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.yhat).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(FORECAST_HEADER)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.date.to_string(),
                r.yhat.to_string(),
                opt(r.yhat_lower),
                opt(r.yhat_upper),
                r.trend.to_string(),
                r.yearly.to_string(),
                r.weekly.to_string(),
                r.holidays.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-component series for inspection.
///
/// Trend and holidays are indexed by date; yearly by days since 1 January
/// (0..=365) and weekly by day of week (0 = Monday).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Components {
    pub trend: Vec<(NaiveDate, f64)>,
    pub yearly: Vec<(u32, f64)>,
    pub weekly: Vec<(u32, f64)>,
    pub holidays: Vec<(NaiveDate, f64)>,
}

pub const COMPONENTS_HEADER: [&str; 3] = ["component", "x", "value"];

impl Components {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(COMPONENTS_HEADER)?;
        for (d, v) in &self.trend {
            w.write_record(["trend", &d.to_string(), &v.to_string()])?;
        }
        for (x, v) in &self.yearly {
            w.write_record(["yearly", &x.to_string(), &v.to_string()])?;
        }
        for (x, v) in &self.weekly {
            w.write_record(["weekly", &x.to_string(), &v.to_string()])?;
        }
        for (d, v) in &self.holidays {
            w.write_record(["holidays", &d.to_string(), &v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Intermediate result of fitting, exposing the objective for diagnostics.
pub struct FitProblem {
    pub objective: PenalizedObjective,
    pub start: DVector<f64>,
    pub time_scale: TimeScale,
    pub y_scale: f64,
    pub changepoint_dates: Vec<NaiveDate>,
    pub changepoints: Vec<f64>,
}

/// One design row: `[t, 1, hinge.., fourier_yearly.., fourier_weekly.., holiday..]`.
fn design_row(
    date: NaiveDate,
    t: f64,
    changepoints: &[f64],
    config: &ForecasterConfig,
    holidays: &HolidayTable,
) -> Vec<f64> {
    let mut row = Vec::with_capacity(2 + changepoints.len());
    row.push(t);
    row.push(1.0);
    row.extend(changepoints.iter().map(|&s| if t >= s { t - s } else { 0.0 }));
    let u = days_since_reference(date);
    row.extend(fourier_terms(u, YEAR_DAYS, config.yearly_order));
    row.extend(fourier_terms(u, WEEK_DAYS, config.weekly_order));
    let mut hol = vec![0.0; holidays.names().len()];
    if let Some(i) = holidays.name_index(date) {
        hol[i] = 1.0;
    }
    row.extend(hol);
    row
}

/// Builds the penalized objective and the deterministic starting point.
pub fn build_problem(series: &DailySeries, config: &ForecasterConfig, holidays: &HolidayTable) -> Result<FitProblem> {
    config.validate()?;
    let required = config.min_observations().max(2);
    if series.len() < required {
        return Err(Error::TooFewObservations {
            required,
            actual: series.len(),
        });
    }
    if series.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training series"));
    }

    let dates = series.dates();
    let time_scale = TimeScale::new(dates[0], dates[dates.len() - 1])?;
    let y_scale = series.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let y_scale = if y_scale > 0.0 { y_scale } else { 1.0 };

    let changepoint_dates = place_changepoints(dates, config);
    let changepoints: Vec<f64> = changepoint_dates.iter().map(|d| time_scale.model_time(*d)).collect();

    let layout = ParamLayout {
        n_changepoints: changepoints.len(),
        n_yearly: 2 * config.yearly_order,
        n_weekly: 2 * config.weekly_order,
        n_holidays: holidays.names().len(),
    };
    let n = series.len();
    let p = layout.len();
    let mut design = DMatrix::<f64>::zeros(n, p);
    for (i, d) in dates.iter().enumerate() {
        let row = design_row(*d, time_scale.model_time(*d), &changepoints, config, holidays);
        for (j, v) in row.into_iter().enumerate() {
            design[(i, j)] = v;
        }
    }
    let target = DVector::from_iterator(n, series.values().iter().map(|v| v / y_scale));

    let y0 = target[0];
    let y1 = target[n - 1];
    let mut start = DVector::zeros(p);
    start[0] = y1 - y0;
    start[1] = y0;

    let priors = PriorScales {
        changepoint: config.changepoint_prior_scale,
        seasonality: config.seasonality_prior_scale,
        holiday: config.holiday_prior_scale,
    };
    Ok(FitProblem {
        objective: PenalizedObjective::new(layout, config.seasonality_mode, priors, design, target),
        start,
        time_scale,
        y_scale,
        changepoint_dates,
        changepoints,
    })
}

pub fn fit(series: &DailySeries, config: &ForecasterConfig, holidays: &HolidayTable) -> Result<FittedForecaster> {
    fit_traced(series, config, holidays).map(|(m, _)| m)
}

/// As [`fit`], also returning the optimizer trace.
pub fn fit_traced(
    series: &DailySeries,
    config: &ForecasterConfig,
    holidays: &HolidayTable,
) -> Result<(FittedForecaster, OptimizeTrace)> {
    let problem = build_problem(series, config, holidays)?;
    let (theta, trace) = minimize(&problem.objective, problem.start.clone(), NewtonOptions::default())?;
    let layout = problem.objective.layout();
    let resid = problem.objective.residuals(&theta);
    let n = resid.len() as f64;
    let mean = resid.sum() / n;
    let sigma = (resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    let th = theta.as_slice();

    let model = FittedForecaster {
        config: config.clone(),
        time_scale: problem.time_scale,
        y_scale: problem.y_scale,
        n_train: series.len(),
        changepoint_dates: problem.changepoint_dates,
        changepoints: problem.changepoints,
        k: th[0],
        m: th[1],
        delta: th[layout.delta()].to_vec(),
        beta_yearly: th[layout.yearly()].to_vec(),
        beta_weekly: th[layout.weekly()].to_vec(),
        kappa: th[layout.kappa()].to_vec(),
        sigma,
        holidays: holidays.clone(),
        fit_report: FitReport {
            iterations: trace.iterations,
            objective: *trace.objective.last().expect("non-empty trace"),
            gradient_norm: trace.gradient_norm,
            stop: trace.stop,
        },
    };
    if !model.parameters_finite() {
        return Err(Error::NonFinite("fitted parameters"));
    }
    Ok((model, trace))
}

/// Normalized components at one date, before de-normalization.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RawComponents {
    pub trend: f64,
    pub yearly: f64,
    pub weekly: f64,
    pub holidays: f64,
}

impl FittedForecaster {
    pub fn trend_params(&self) -> TrendParams<'_> {
        TrendParams {
            k: self.k,
            m: self.m,
            changepoints: &self.changepoints,
            delta: &self.delta,
        }
    }

    pub fn parameters_finite(&self) -> bool {
        [self.k, self.m, self.sigma, self.y_scale]
            .iter()
            .chain(&self.delta)
            .chain(&self.beta_yearly)
            .chain(&self.beta_weekly)
            .chain(&self.kappa)
            .all(|v| v.is_finite())
    }

    pub fn model_time(&self, date: NaiveDate) -> f64 {
        self.time_scale.model_time(date)
    }

    /// Normalized trend at model time `t`.
    pub fn trend_at(&self, t: f64) -> f64 {
        trend_value(t, self.trend_params())
    }

    /// Trend slope after the last changepoint, in m³ per day.
    pub fn final_slope_per_day(&self) -> f64 {
        trend_slope(f64::INFINITY, self.trend_params()) * self.y_scale / self.time_scale.span_days as f64
    }

    /// Normalized yearly term at `u` days since the phase reference.
    pub fn yearly_at(&self, u: f64) -> f64 {
        dot(
            &fourier_terms(u, YEAR_DAYS, self.config.yearly_order),
            &self.beta_yearly,
        )
    }

    pub fn weekly_at(&self, u: f64) -> f64 {
        dot(
            &fourier_terms(u, WEEK_DAYS, self.config.weekly_order),
            &self.beta_weekly,
        )
    }

    pub fn holiday_at(&self, date: NaiveDate) -> f64 {
        self.holidays
            .name_index(date)
            .and_then(|i| self.kappa.get(i).copied())
            .unwrap_or(0.0)
    }

    pub fn holiday_effect(&self, name: &str) -> Option<f64> {
        let i = self.holidays.names().iter().position(|n| n == name)?;
        let k = self.kappa[i];
        Some(match self.config.seasonality_mode {
            SeasonalityMode::Additive => k * self.y_scale,
            SeasonalityMode::Multiplicative => k,
        })
    }

    pub(crate) fn raw(&self, date: NaiveDate) -> RawComponents {
        let u = days_since_reference(date);
        RawComponents {
            trend: self.trend_at(self.model_time(date)),
            yearly: self.yearly_at(u),
            weekly: self.weekly_at(u),
            holidays: self.holiday_at(date),
        }
    }

    /// Scales non-trend components to output units: m³ in additive mode,
    /// fractions of the trend in multiplicative mode.
    fn seasonal_out(&self, v: f64) -> f64 {
        match self.config.seasonality_mode {
            SeasonalityMode::Additive => v * self.y_scale,
            SeasonalityMode::Multiplicative => v,
        }
    }

    pub(crate) fn compose(&self, trend: f64, yearly: f64, weekly: f64, holidays: f64) -> f64 {
        match self.config.seasonality_mode {
            SeasonalityMode::Additive => trend + yearly + weekly + holidays,
            SeasonalityMode::Multiplicative => trend * (1.0 + yearly + weekly + holidays),
        }
    }

    pub(crate) fn row(&self, date: NaiveDate) -> ForecastRow {
        let raw = self.raw(date);
        let trend = raw.trend * self.y_scale;
        let yearly = self.seasonal_out(raw.yearly);
        let weekly = self.seasonal_out(raw.weekly);
        let holidays = self.seasonal_out(raw.holidays);
        ForecastRow {
            date,
            yhat: self.compose(trend, yearly, weekly, holidays),
            yhat_lower: None,
            yhat_upper: None,
            trend,
            yearly,
            weekly,
            holidays,
        }
    }

    /// Point forecast with components; beyond the last changepoint the trend
    /// is the straight-line continuation.
    pub fn predict(&self, dates: &[NaiveDate]) -> Forecast {
        Forecast {
            rows: dates.iter().map(|d| self.row(*d)).collect(),
        }
    }

    pub fn decompose(&self, dates: &[NaiveDate]) -> Components {
        let trend = dates
            .iter()
            .map(|d| (*d, self.trend_at(self.model_time(*d)) * self.y_scale))
            .collect();
        let yearly = (0..=365u32)
            .map(|x| (x, self.seasonal_out(self.yearly_at(x as f64))))
            .collect();
        // 1970-01-05 was a Monday.
        let weekly = (0..7u32)
            .map(|x| (x, self.seasonal_out(self.weekly_at(4.0 + x as f64))))
            .collect();
        let holidays = dates
            .iter()
            .map(|d| (*d, self.seasonal_out(self.holiday_at(*d))))
            .collect();
        Components {
            trend,
            yearly,
            weekly,
            holidays,
        }
    }

    /// Every calendar day of the training window.
    pub fn training_days(&self) -> Vec<NaiveDate> {
        self.time_scale
            .epoch
            .iter_days()
            .take(self.time_scale.span_days as usize + 1)
            .collect()
    }

    /// `horizon` consecutive days after the last training date.
    pub fn future_days(&self, horizon: usize) -> Vec<NaiveDate> {
        self.time_scale.last().iter_days().skip(1).take(horizon).collect()
    }
}
