use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gp::{suggest_next, SurrogateOptions, SurrogateState};
use super::space::{Assignment, SearchSpace, Value};
use crate::error::{Error, Result};
use crate::evaluation::{run_cv, MetricSet, ModelSpec};
use crate::forecaster::SeasonalityMode;
use crate::model_file::ModelConfig;
use crate::series::DailySeries;

#[derive(Debug, Clone)]
pub struct SearchSettings {
    pub n_iterations: usize,
    /// Random iterations before the surrogate takes over; `None` means
    /// `max(5, n_iterations / 10)`.
    pub n_initial: Option<usize>,
    pub n_candidates: usize,
    pub seed: u64,
    pub surrogate: SurrogateOptions,
}

impl SearchSettings {
    pub fn new(n_iterations: usize, seed: u64) -> Self {
        Self {
            n_iterations,
            n_initial: None,
            n_candidates: 1000,
            seed,
            surrogate: SurrogateOptions {
                seed,
                ..Default::default()
            },
        }
    }

    /// Every iteration random: the control for guided search.
    pub fn random(n_iterations: usize, seed: u64) -> Self {
        Self {
            n_initial: Some(n_iterations),
            ..Self::new(n_iterations, seed)
        }
    }

    pub fn initial_random(&self) -> usize {
        self.n_initial.unwrap_or((self.n_iterations / 10).max(5))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// Objective being minimized: mean test MAPE in percent for CV trials.
    pub mape_mean: f64,
    pub mape_std: f64,
    pub mae_mean: f64,
    pub folds: Vec<MetricSet>,
}

impl TrialOutcome {
    /// An outcome carrying only an objective value.
    pub fn scalar(objective: f64) -> Self {
        Self {
            mape_mean: objective,
            mape_std: 0.0,
            mae_mean: f64::NAN,
            folds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub iteration: usize,
    pub assignment: Assignment,
    /// Mean MAPE, or the failure penalty.
    pub objective: f64,
    pub status: TrialStatus,
    pub outcome: Option<TrialOutcome>,
    pub guided: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub space: SearchSpace,
    pub trials: Vec<TrialRecord>,
    /// Index into `trials`.
    pub best: usize,
    /// Surrogate over all successful trials, when one could be fit.
    pub surrogate: Option<SurrogateState>,
}

impl SearchResult {
    pub fn best_trial(&self) -> &TrialRecord {
        &self.trials[self.best]
    }

    pub fn best_so_far(&self) -> Vec<f64> {
        self.trials
            .iter()
            .scan(f64::INFINITY, |b, t| {
                *b = b.min(t.objective);
                Some(*b)
            })
            .collect()
    }

    /// `iteration,<dimensions>,mape_mean,mape_std,mae_mean,status,seconds`.
    /// Wall times are left blank unless `with_seconds`, which keeps the file
    /// reproducible by default.
    pub fn write_history_csv<W: Write>(&self, writer: W, with_seconds: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["iteration".to_string()];
        header.extend(self.space.dimensions.iter().map(|d| d.name.clone()));
        header.extend(["mape_mean", "mape_std", "mae_mean", "status", "seconds"].map(String::from));
        w.write_record(&header)?;
        let num = |v: f64| if v.is_finite() { v.to_string() } else { String::new() };
        for t in &self.trials {
            let mut row = vec![t.iteration.to_string()];
            row.extend(t.assignment.0.iter().map(Value::to_string));
            match &t.outcome {
                Some(o) => row.extend([num(o.mape_mean), num(o.mape_std), num(o.mae_mean)]),
                None => row.extend([num(t.objective), String::new(), String::new()]),
            }
            row.push(match &t.status {
                TrialStatus::Ok => "ok".to_string(),
                TrialStatus::Failed(reason) => format!("failed: {reason}"),
            });
            row.push(if with_seconds {
                t.seconds.to_string()
            } else {
                String::new()
            });
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sequential search: random start, then expected-improvement suggestions.
/// `objective` receives the iteration index and the assignment.
pub fn search<F>(space: &SearchSpace, settings: &SearchSettings, mut objective: F) -> Result<SearchResult>
where
    F: FnMut(usize, &Assignment) -> Result<TrialOutcome>,
{
    if settings.n_iterations < 5 {
        return Err(Error::InvalidConfig(format!(
            "n_iterations must be at least 5, got {}",
            settings.n_iterations
        )));
    }
    let n_initial = settings.initial_random();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut trials: Vec<TrialRecord> = Vec::with_capacity(settings.n_iterations);

    for iteration in 0..settings.n_iterations {
        let mut guided = false;
        let assignment = if iteration < n_initial {
            space.sample(&mut rng)
        } else {
            match SurrogateState::fit(space, &successes(&trials), &settings.surrogate) {
                Ok(s) => {
                    guided = true;
                    suggest_next(&s, &mut rng, settings.n_candidates)?
                }
                Err(_) => space.sample(&mut rng),
            }
        };
        let started = Instant::now();
        let result = objective(iteration, &assignment);
        let seconds = started.elapsed().as_secs_f64();
        let (objective, status, outcome) = match result {
            Ok(o) if o.mape_mean.is_finite() => (o.mape_mean, TrialStatus::Ok, Some(o)),
            Ok(_) => (f64::NAN, TrialStatus::Failed("non-finite objective".into()), None),
            Err(e) => (f64::NAN, TrialStatus::Failed(e.to_string()), None),
        };
        trials.push(TrialRecord {
            iteration,
            assignment,
            objective,
            status,
            outcome,
            guided,
            seconds,
        });
    }

    let worst = trials
        .iter()
        .filter(|t| t.status == TrialStatus::Ok)
        .map(|t| t.objective)
        .fold(f64::NEG_INFINITY, f64::max);
    if worst == f64::NEG_INFINITY {
        return Err(Error::AllTrialsFailed);
    }
    // Twice the worst for non-negative objectives; always no better than it.
    let penalty = worst + worst.abs();
    for t in trials.iter_mut().filter(|t| t.status != TrialStatus::Ok) {
        t.objective = penalty;
    }
    let best = trials
        .iter()
        .enumerate()
        .filter(|(_, t)| t.status == TrialStatus::Ok)
        .fold(None::<(usize, f64)>, |acc, (i, t)| match acc {
            Some((_, b)) if b <= t.objective => acc,
            _ => Some((i, t.objective)),
        })
        .map(|(i, _)| i)
        .expect("at least one success");
    let surrogate = SurrogateState::fit(space, &successes(&trials), &settings.surrogate).ok();
    Ok(SearchResult {
        space: space.clone(),
        trials,
        best,
        surrogate,
    })
}

fn successes(trials: &[TrialRecord]) -> Vec<(Assignment, f64)> {
    trials
        .iter()
        .filter(|t| t.status == TrialStatus::Ok)
        .map(|t| (t.assignment.clone(), t.objective))
        .collect()
}

/// Overrides fields of `base` with the assignment, matching dimension names
/// to configuration field names.
pub fn apply_assignment(base: &ModelSpec, space: &SearchSpace, a: &Assignment) -> Result<ModelSpec> {
    let mut spec = base.clone();
    for (dim, value) in space.dimensions.iter().zip(&a.0) {
        let name = dim.name.as_str();
        let real = || {
            value
                .as_f64()
                .ok_or_else(|| Error::InvalidSpace(format!("{name} needs a numeric value")))
        };
        let count = || match value {
            Value::Int(i) if *i >= 0 => Ok(*i as usize),
            _ => Err(Error::InvalidSpace(format!("{name} needs a non-negative integer"))),
        };
        match &mut spec {
            ModelSpec::Additive { config, .. } => match name {
                "changepoint_prior_scale" => config.changepoint_prior_scale = real()?,
                "seasonality_prior_scale" => config.seasonality_prior_scale = real()?,
                "holiday_prior_scale" | "holidays_prior_scale" => config.holiday_prior_scale = real()?,
                "changepoint_range" => config.changepoint_range = real()?,
                "n_changepoints" => config.n_changepoints = count()?,
                "yearly_order" => config.yearly_order = count()?,
                "weekly_order" => config.weekly_order = count()?,
                "seasonality_mode" => {
                    let label = value
                        .as_label()
                        .ok_or_else(|| Error::InvalidSpace(format!("{name} needs a label")))?;
                    config.seasonality_mode = label.parse::<SeasonalityMode>()?;
                }
                _ => return Err(Error::UnknownDimension(name.to_string())),
            },
            ModelSpec::Lag(config) => match name {
                "input_sequence_length" => config.input_sequence_length = count()?,
                "ridge_epsilon" => config.ridge_epsilon = real()?,
                _ => return Err(Error::UnknownDimension(name.to_string())),
            },
        }
    }
    Ok(spec)
}

pub fn model_config(spec: &ModelSpec) -> ModelConfig {
    match spec {
        ModelSpec::Additive { config, .. } => ModelConfig::Additive(config.clone()),
        ModelSpec::Lag(config) => ModelConfig::Lag(config.clone()),
    }
}

/// Cross-validated search over `space` around the base model.
pub fn run_search(
    series: &DailySeries,
    base: &ModelSpec,
    space: &SearchSpace,
    settings: &SearchSettings,
    n_quantiles: usize,
    n_folds: usize,
) -> Result<SearchResult> {
    // Unknown dimension names fail before any fitting.
    apply_assignment(base, space, &space.sample(&mut ChaCha8Rng::seed_from_u64(0)))?;
    search(space, settings, |_, a| {
        let spec = apply_assignment(base, space, a)?;
        let report = run_cv(series, &spec, n_quantiles, n_folds)?;
        Ok(TrialOutcome {
            mape_mean: report.mean.mape,
            mape_std: report.std.mape,
            mae_mean: report.mean.mae,
            folds: report.folds.iter().map(|f| f.metrics).collect(),
        })
    })
}
