use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeasonalityMode {
    Additive,
    Multiplicative,
}

impl SeasonalityMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SeasonalityMode::Additive => "additive",
            SeasonalityMode::Multiplicative => "multiplicative",
        }
    }
}

impl std::str::FromStr for SeasonalityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "additive" => Ok(Self::Additive),
            "multiplicative" => Ok(Self::Multiplicative),
            other => Err(Error::InvalidConfig(format!("unknown seasonality mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for SeasonalityMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Hyperparameters of the additive trend + seasonality + holiday model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecasterConfig {
    /// Laplace prior scale on changepoint rate adjustments.
    pub changepoint_prior_scale: f64,
    /// Normal prior scale on Fourier coefficients.
    pub seasonality_prior_scale: f64,
    /// Normal prior scale on holiday coefficients.
    pub holiday_prior_scale: f64,
    pub seasonality_mode: SeasonalityMode,
    pub n_changepoints: usize,
    /// Leading fraction of the training records eligible for changepoints.
    pub changepoint_range: f64,
    pub yearly_order: usize,
    pub weekly_order: usize,
    pub interval_width: f64,
    pub n_interval_samples: usize,
    pub rng_seed: u64,
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        Self {
            changepoint_prior_scale: 5.0,
            seasonality_prior_scale: 10.0,
            holiday_prior_scale: 10.0,
            seasonality_mode: SeasonalityMode::Additive,
            n_changepoints: 25,
            changepoint_range: 0.8,
            yearly_order: 10,
            weekly_order: 3,
            interval_width: 0.8,
            n_interval_samples: 300,
            rng_seed: 42,
        }
    }
}

impl ForecasterConfig {
    pub fn validate(&self) -> Result<()> {
        let scales = [
            ("changepoint_prior_scale", self.changepoint_prior_scale),
            ("seasonality_prior_scale", self.seasonality_prior_scale),
            ("holiday_prior_scale", self.holiday_prior_scale),
        ];
        for (name, v) in scales {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.changepoint_range > 0.0 && self.changepoint_range <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "changepoint_range must lie in (0, 1], got {}",
                self.changepoint_range
            )));
        }
        if !(self.interval_width > 0.0 && self.interval_width < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "interval_width must lie in (0, 1), got {}",
                self.interval_width
            )));
        }
        if self.n_interval_samples == 0 {
            return Err(Error::InvalidConfig("n_interval_samples must be positive".into()));
        }
        Ok(())
    }

    /// Smallest training set `fit` accepts.
    pub fn min_observations(&self) -> usize {
        2 * (self.yearly_order + self.weekly_order) + self.n_changepoints + 10
    }
}
