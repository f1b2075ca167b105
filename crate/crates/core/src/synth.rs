//! Synthetic daily demand with known structure, for tests, demos and fixtures.

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::calendar::HolidayTable;
use crate::forecaster::features::{days_since_reference, YEAR_DAYS};
use crate::series::DailySeries;

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub start: NaiveDate,
    pub n_days: usize,
    /// Level on the first day, m³.
    pub level: f64,
    /// Daily slope before and after the single trend changepoint.
    pub slope_before: f64,
    pub slope_after: f64,
    /// Day offset of the changepoint.
    pub changepoint_day: usize,
    /// Yearly `(sin, cos)` amplitudes in m³ for harmonics 1, 2, ...
    pub yearly: Vec<(f64, f64)>,
    /// Weekly `(sin, cos)` amplitudes in m³.
    pub weekly: Vec<(f64, f64)>,
    /// Annual holiday `(name, month, day, effect m³)`.
    pub holiday: Option<(String, u32, u32, f64)>,
    /// Holiday rows are emitted this many years past the data.
    pub holiday_years_ahead: i32,
    /// Noise standard deviation as a fraction of the mean noiseless level.
    pub noise_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2009, 7, 7).expect("valid date"),
            n_days: 4000,
            level: 450.0,
            slope_before: 0.02,
            slope_after: 0.08,
            changepoint_day: 1600,
            yearly: vec![(60.0, -40.0), (15.0, 10.0), (-5.0, 8.0)],
            weekly: Vec::new(),
            holiday: Some(("Canada Day".to_string(), 7, 1, 100.0)),
            holiday_years_ahead: 5,
            noise_fraction: 0.02,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub series: DailySeries,
    /// Noiseless values on the same dates.
    pub truth: Vec<f64>,
    pub holidays: HolidayTable,
    /// Noise standard deviation, m³.
    pub sigma: f64,
}

impl SyntheticSpec {
    pub fn trend_at(&self, day: usize) -> f64 {
        let d = day as f64;
        let cp = self.changepoint_day as f64;
        if d < cp {
            self.level + self.slope_before * d
        } else {
            self.level + self.slope_before * cp + self.slope_after * (d - cp)
        }
    }

    fn seasonal_at(&self, date: NaiveDate) -> f64 {
        let u = days_since_reference(date);
        let wave = |terms: &[(f64, f64)], period: f64| -> f64 {
            terms
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let arg = 2.0 * PI * (i + 1) as f64 * u / period;
                    a * arg.sin() + b * arg.cos()
                })
                .sum()
        };
        wave(&self.yearly, YEAR_DAYS) + wave(&self.weekly, 7.0)
    }

    pub fn holiday_table(&self) -> HolidayTable {
        let Some((name, month, day, _)) = &self.holiday else {
            return HolidayTable::default();
        };
        let last = self.start + chrono::Duration::days(self.n_days as i64);
        let rows = (self.start.year()..=last.year() + self.holiday_years_ahead)
            .filter_map(|y| NaiveDate::from_ymd_opt(y, *month, *day))
            .map(|d| (d, name.clone()));
        HolidayTable::from_rows(rows).expect("one row per year")
    }

    pub fn generate(&self) -> SyntheticData {
        let holidays = self.holiday_table();
        let effect = self.holiday.as_ref().map_or(0.0, |h| h.3);
        let dates: Vec<NaiveDate> = self.start.iter_days().take(self.n_days).collect();
        let truth: Vec<f64> = dates
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let h = if holidays.lookup(*d).is_some() { effect } else { 0.0 };
                self.trend_at(i) + self.seasonal_at(*d) + h
            })
            .collect();
        let mean = truth.iter().sum::<f64>() / truth.len() as f64;
        let sigma = self.noise_fraction * mean;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
        let values: Vec<f64> = truth.iter().map(|t| (t + noise.sample(&mut rng)).max(0.0)).collect();
        SyntheticData {
            series: DailySeries::new(dates, values).expect("valid synthetic series"),
            truth,
            holidays,
            sigma,
        }
    }
}

/// The two billing outages of the reference dataset, as offsets in days
/// from its first date (2009-07-07), with their inclusive lengths.
pub const REFERENCE_GAPS: [(i64, i64); 2] = [(1698, 214), (2818, 68)];

/// Drops the reference outages, re-anchored on the series' first date.
pub fn remove_reference_gaps(series: &DailySeries) -> DailySeries {
    let Some(first) = series.first_date() else {
        return series.clone();
    };
    series.filter(|d| {
        let off = (d - first).num_days();
        !REFERENCE_GAPS
            .iter()
            .any(|(start, len)| off >= *start && off < start + len)
    })
}
