//! Additive forecaster: `y(d) = g(d) + s(d) + h(d) + ε_d`.
//!
//! `g` is a continuous piecewise-linear trend, `s` a sum of yearly and weekly
//! Fourier series and `h` one coefficient per holiday name. Parameters are the
//! MAP estimate under a Laplace prior on the trend changes and normal priors
//! on the seasonal and holiday coefficients, found by damped Newton steps on
//! the penalized least-squares objective.

mod config;
pub mod features;
mod intervals;
mod model;
pub mod objective;
pub mod optimize;
pub mod trend;

pub use config::{ForecasterConfig, SeasonalityMode};
pub use features::{fourier_features, fourier_terms, holiday_features};
pub use intervals::{predict_with_intervals, quantile};
pub use model::{
    build_problem, fit, fit_traced, Components, FitProblem, FitReport, FittedForecaster, Forecast, ForecastRow,
    COMPONENTS_HEADER, FORECAST_HEADER,
};
pub use trend::{place_changepoints, trend_value, TrendParams};
