use std::f64::consts::PI;

use chrono::NaiveDate;

use crate::calendar::HolidayTable;

pub const YEAR_DAYS: f64 = 365.25;
pub const WEEK_DAYS: f64 = 7.0;

/// Fourier phase reference, fixed so features do not depend on the fit.
pub fn phase_reference() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date")
}

pub fn days_since_reference(date: NaiveDate) -> f64 {
    (date - phase_reference()).num_days() as f64
}

/// `[sin(2πn·u/P), cos(2πn·u/P)]` for `n = 1..=order`, interleaved.
pub fn fourier_terms(u: f64, period_days: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * order);
    for n in 1..=order {
        let arg = 2.0 * PI * n as f64 * u / period_days;
        out.push(arg.sin());
        out.push(arg.cos());
    }
    out
}

pub fn fourier_features(date: NaiveDate, period_days: f64, order: usize) -> Vec<f64> {
    fourier_terms(days_since_reference(date), period_days, order)
}

/// Indicator over the table's distinct names.
pub fn holiday_features(date: NaiveDate, table: &HolidayTable) -> Vec<f64> {
    let mut v = vec![0.0; table.names().len()];
    if let Some(i) = table.name_index(date) {
        v[i] = 1.0;
    }
    v
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
