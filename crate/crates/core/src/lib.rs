//! Daily demand estimation from staggered billing records, an interpretable
//! additive forecaster, an OLS lag baseline, rolling-origin evaluation and
//! Gaussian-process hyperparameter search.

pub mod baseline;
pub mod calendar;
pub mod error;
pub mod evaluation;
pub mod forecaster;
pub mod ingest;
pub mod model_file;
pub mod series;
pub mod synth;
pub mod tuner;

pub use error::{Error, Result};
pub use series::DailySeries;
