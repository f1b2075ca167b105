//! Continuous piecewise-linear trend.

use chrono::NaiveDate;

use super::config::ForecasterConfig;

/// Positions (indices into `train_dates`) of the trend changepoints.
///
/// Changepoints are spread uniformly by record index over the first
/// `changepoint_range` fraction of the observed dates, never on the first
/// date. With fewer observed dates than requested changepoints, `count - 1`
/// are used.
pub fn changepoint_indices(n_dates: usize, config: &ForecasterConfig) -> Vec<usize> {
    if n_dates < 2 {
        return Vec::new();
    }
    let n_cp = config.n_changepoints.min(n_dates - 1);
    if n_cp == 0 {
        return Vec::new();
    }
    let window = ((n_dates as f64 * config.changepoint_range) + 1e-9).floor() as usize;
    let window = window.clamp(1, n_dates);
    let mut idx: Vec<usize> = (1..=n_cp).map(|j| j * window / (n_cp + 1)).collect();
    idx.dedup();
    idx.retain(|&i| i > 0);
    idx
}

pub fn place_changepoints(train_dates: &[NaiveDate], config: &ForecasterConfig) -> Vec<NaiveDate> {
    changepoint_indices(train_dates.len(), config)
        .into_iter()
        .map(|i| train_dates[i])
        .collect()
}

/// Trend parameters in normalized units.
#[derive(Debug, Clone, Copy)]
pub struct TrendParams<'a> {
    pub k: f64,
    pub m: f64,
    pub changepoints: &'a [f64],
    pub delta: &'a [f64],
}

/// `g(t) = (k + a(t)·δ)·t + (m + a(t)·γ)` with `γ_j = -s_j·δ_j`.
pub fn trend_value(t: f64, p: TrendParams<'_>) -> f64 {
    let mut slope = p.k;
    let mut offset = p.m;
    for (&s, &d) in p.changepoints.iter().zip(p.delta) {
        if t >= s {
            slope += d;
            offset += -s * d;
        }
    }
    slope * t + offset
}

/// Slope of the trend to the right of `t`.
pub fn trend_slope(t: f64, p: TrendParams<'_>) -> f64 {
    p.k + p
        .changepoints
        .iter()
        .zip(p.delta)
        .filter(|(s, _)| t >= **s)
        .map(|(_, d)| d)
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(n: usize, range: f64) -> ForecasterConfig {
        ForecasterConfig {
            n_changepoints: n,
            changepoint_range: range,
            ..Default::default()
        }
    }

    /// Enumerates the index grid directly: the j-th of n points splitting
    /// the first `window` records into n + 1 equal parts.
    fn grid_oracle(n_dates: usize, n: usize, tenths: usize) -> Vec<usize> {
        let window = n_dates * tenths / 10;
        let mut out = Vec::new();
        for j in 1..=n {
            let exact = (j * window) as f64 / (n + 1) as f64;
            out.push(exact.floor() as usize);
        }
        out
    }

    #[test]
    fn four_changepoints_in_hundred() {
        assert_eq!(changepoint_indices(100, &cfg(4, 0.8)), vec![16, 32, 48, 64]);
        assert_eq!(grid_oracle(100, 4, 8), vec![16, 32, 48, 64]);
    }

    #[test]
    fn zero_changepoints() {
        assert!(changepoint_indices(100, &cfg(0, 0.8)).is_empty());
    }

    #[test]
    fn midpoint_of_full_range() {
        assert_eq!(changepoint_indices(11, &cfg(1, 1.0)), vec![5]);
        assert_eq!(grid_oracle(11, 1, 10), vec![5]);
    }

    #[test]
    fn fewer_dates_than_changepoints() {
        let idx = changepoint_indices(6, &cfg(25, 1.0));
        assert_eq!(idx, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn degenerate_line() {
        let p = TrendParams {
            k: 1.0,
            m: 0.0,
            changepoints: &[],
            delta: &[],
        };
        for t in [0.0, 0.3, 1.7] {
            assert_eq!(trend_value(t, p), t);
        }
    }

    #[test]
    fn single_changepoint_hand_values() {
        let p = TrendParams {
            k: 1.0,
            m: 0.0,
            changepoints: &[0.5],
            delta: &[1.0],
        };
        assert_eq!(trend_value(0.5, p), 0.5);
        let left = trend_value(0.5 - 1e-12, p);
        assert!((left - 0.5).abs() < 1e-11);
        assert_eq!(trend_value(1.0, p), 1.5);
    }

    #[test]
    fn zero_delta_matches_line() {
        let with = TrendParams {
            k: 0.7,
            m: 0.2,
            changepoints: &[0.2, 0.6],
            delta: &[0.0, 0.0],
        };
        let without = TrendParams {
            k: 0.7,
            m: 0.2,
            changepoints: &[],
            delta: &[],
        };
        for t in [0.0, 0.25, 0.9, 2.0] {
            assert_eq!(trend_value(t, with), trend_value(t, without));
        }
    }

    proptest! {
        #[test]
        fn indices_match_oracle(n_dates in 2usize..2000, n in 0usize..40, tenths in 1usize..=10) {
            let range = tenths as f64 / 10.0;
            let got = changepoint_indices(n_dates, &cfg(n, range));
            let n_eff = n.min(n_dates - 1);
            let mut want = grid_oracle(n_dates, n_eff, tenths);
            want.dedup();
            want.retain(|&i| i > 0);
            prop_assert_eq!(got, want);
        }

        #[test]
        fn continuity(k in -2.0f64..2.0, m in -1.0f64..1.0,
                      cps in prop::collection::vec((0.01f64..0.99, -3.0f64..3.0), 1..10)) {
            let s: Vec<f64> = cps.iter().map(|c| c.0).collect();
            let d: Vec<f64> = cps.iter().map(|c| c.1).collect();
            let p = TrendParams { k, m, changepoints: &s, delta: &d };
            for &sj in &s {
                // Evaluate the two linear pieces meeting at sj.
                let left_slope: f64 = k + s.iter().zip(&d).filter(|(x, _)| **x < sj).map(|(_, y)| y).sum::<f64>();
                let left_off: f64 = m + s.iter().zip(&d).filter(|(x, _)| **x < sj).map(|(x, y)| -x * y).sum::<f64>();
                let left = left_slope * sj + left_off;
                prop_assert!((left - trend_value(sj, p)).abs() <= 1e-12);
            }
        }
    }
}
