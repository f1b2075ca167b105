use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use aquacast::baseline::{self, LagModelConfig};
use aquacast::calendar::{load_holidays, HolidayTable};
use aquacast::evaluation::{run_cv, ModelSpec};
use aquacast::forecaster::{self, predict_with_intervals, ForecasterConfig, SeasonalityMode, FORECAST_HEADER};
use aquacast::ingest::{detect_gaps, estimate_daily, parse_billing, write_gaps_csv, ParseMode};
use aquacast::model_file::{LagModelFile, ModelConfig, ModelFile, SavedModel};
use aquacast::tuner::{
    model_config, partial_dependence_all, run_search, write_pdp_csv, SearchSettings, SearchSpace, PDP_GRID_SIZE,
};
use aquacast::DailySeries;

use crate::{Cli, Command, Mode, ModelArgs, ModelType};

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    let holidays = cli.holidays.as_deref();
    match cli.command {
        Command::Ingest {
            input,
            output,
            gaps,
            strict,
        } => ingest(&input, &output, gaps, strict),
        Command::Fit { data, model, spec } => fit(&data, &model, &spec, holidays, seed),
        Command::Forecast {
            model,
            horizon_days,
            output,
            interval_width,
            n_interval_samples,
        } => forecast(&model, horizon_days, &output, interval_width, n_interval_samples, seed),
        Command::Decompose { model, output } => decompose(&model, &output),
        Command::Cv {
            data,
            output,
            n_quantiles,
            n_folds,
            spec,
        } => cv(&data, &output, n_quantiles, n_folds, &spec, holidays, seed),
        Command::Tune {
            data,
            space,
            iterations,
            out_prefix,
            n_quantiles,
            n_folds,
            timings,
            spec,
        } => {
            let run = TuneRun {
                space,
                iterations,
                n_quantiles,
                n_folds,
                timings,
                seed,
            };
            tune(&data, &out_prefix, &run, &spec, holidays)
        }
    }
}

fn buffer(write: impl FnOnce(&mut Vec<u8>) -> aquacast::Result<()>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write(&mut out)?;
    Ok(out)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_series(path: &Path) -> Result<DailySeries> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    DailySeries::read_csv(file).with_context(|| format!("reading {}", path.display()))
}

fn read_holidays(path: Option<&Path>) -> Result<HolidayTable> {
    match path {
        None => Ok(HolidayTable::default()),
        Some(p) => {
            let file = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
            load_holidays(file).with_context(|| format!("reading {}", p.display()))
        }
    }
}

fn sidecar(output: &Path, suffix: &str) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    output.with_file_name(format!("{stem}{suffix}"))
}

fn ingest(input: &Path, output: &Path, gaps: Option<PathBuf>, strict: bool) -> Result<()> {
    let mode = if strict { ParseMode::Strict } else { ParseMode::Lenient };
    let file = fs::File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let parsed = parse_billing(file, mode).with_context(|| format!("parsing {}", input.display()))?;
    for (line, reason) in &parsed.skipped {
        eprintln!("skipped line {line}: {reason}");
    }
    let series = estimate_daily(&parsed.records)?;
    let gap_ranges = detect_gaps(&series);
    let series_csv = buffer(|w| series.write_csv(w))?;
    let gaps_csv = buffer(|w| write_gaps_csv(&gap_ranges, w))?;
    let gaps_path = gaps.unwrap_or_else(|| sidecar(output, "_gaps.csv"));
    write_file(output, &series_csv)?;
    write_file(&gaps_path, &gaps_csv)?;
    println!(
        "{} records, {} skipped, {} days, {} gaps",
        parsed.records.len(),
        parsed.skipped.len(),
        series.len(),
        gap_ranges.len()
    );
    for g in &gap_ranges {
        println!("gap {} .. {} ({} days)", g.start, g.end, g.days());
    }
    Ok(())
}

/// Base configuration from `--config` (if any), then flag overrides.
fn model_spec(args: &ModelArgs, holidays: Option<&Path>, seed: u64) -> Result<ModelSpec> {
    let from_file = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(ModelConfig::from_json(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => None,
    };
    let kind = match (args.model_type, &from_file) {
        (Some(k), _) => k,
        (None, Some(ModelConfig::Lag(_))) => ModelType::Lag,
        (None, _) => ModelType::Additive,
    };
    match kind {
        ModelType::Additive => {
            let mut c = match from_file {
                Some(ModelConfig::Additive(c)) => c,
                Some(ModelConfig::Lag(_)) => bail!("--config holds a lag configuration"),
                None => ForecasterConfig::default(),
            };
            if let Some(v) = args.changepoint_prior_scale {
                c.changepoint_prior_scale = v;
            }
            if let Some(v) = args.seasonality_prior_scale {
                c.seasonality_prior_scale = v;
            }
            if let Some(v) = args.holiday_prior_scale {
                c.holiday_prior_scale = v;
            }
            if let Some(m) = args.seasonality_mode {
                c.seasonality_mode = match m {
                    Mode::Additive => SeasonalityMode::Additive,
                    Mode::Multiplicative => SeasonalityMode::Multiplicative,
                };
            }
            if let Some(v) = args.n_changepoints {
                c.n_changepoints = v;
            }
            if let Some(v) = args.changepoint_range {
                c.changepoint_range = v;
            }
            if let Some(v) = args.yearly_order {
                c.yearly_order = v;
            }
            if let Some(v) = args.weekly_order {
                c.weekly_order = v;
            }
            if let Some(v) = args.interval_width {
                c.interval_width = v;
            }
            if let Some(v) = args.n_interval_samples {
                c.n_interval_samples = v;
            }
            c.rng_seed = seed;
            c.validate()?;
            Ok(ModelSpec::Additive {
                config: c,
                holidays: Arc::new(read_holidays(holidays)?),
            })
        }
        ModelType::Lag => {
            let mut c = match from_file {
                Some(ModelConfig::Lag(c)) => c,
                Some(ModelConfig::Additive(_)) => bail!("--config holds an additive configuration"),
                None => LagModelConfig::default(),
            };
            if let Some(v) = args.input_sequence_length {
                c.input_sequence_length = v;
            }
            if let Some(v) = args.ridge_epsilon {
                c.ridge_epsilon = v;
            }
            c.validate()?;
            Ok(ModelSpec::Lag(c))
        }
    }
}

fn fit(data: &Path, model: &Path, args: &ModelArgs, holidays: Option<&Path>, seed: u64) -> Result<()> {
    let series = read_series(data)?;
    let saved = match model_spec(args, holidays, seed)? {
        ModelSpec::Additive { config, holidays } => {
            let m = forecaster::fit(&series, &config, &holidays)?;
            println!(
                "fitted additive model: {} iterations, objective {:.6e}",
                m.fit_report.iterations, m.fit_report.objective
            );
            SavedModel::Additive(Box::new(m))
        }
        ModelSpec::Lag(config) => {
            let m = baseline::fit_series(&series, &config)?;
            let lags = config.input_sequence_length;
            let history = series.values()[series.len() - lags..].to_vec();
            println!("fitted lag model with {lags} lags");
            SavedModel::Lag(LagModelFile {
                config,
                model: m,
                last_date: series.last_date().expect("non-empty after fit"),
                history,
            })
        }
    };
    write_file(model, ModelFile::new(saved).to_json()?.as_bytes())
}

fn load_model(path: &Path) -> Result<SavedModel> {
    Ok(ModelFile::load(path)
        .with_context(|| format!("loading {}", path.display()))?
        .model)
}

fn forecast(
    model: &Path,
    horizon: usize,
    output: &Path,
    interval_width: Option<f64>,
    n_interval_samples: Option<usize>,
    seed: u64,
) -> Result<()> {
    ensure!(horizon >= 1, "--horizon-days must be at least 1");
    let bytes = match load_model(model)? {
        SavedModel::Additive(m) => {
            let mut config = m.config.clone();
            if let Some(w) = interval_width {
                config.interval_width = w;
            }
            if let Some(n) = n_interval_samples {
                config.n_interval_samples = n;
            }
            config.rng_seed = seed;
            config.validate()?;
            let fc = predict_with_intervals(&m, &m.future_days(horizon), &config);
            buffer(|w| fc.write_csv(w))?
        }
        SavedModel::Lag(f) => {
            let path = f.model.forecast_recursive(&f.history, horizon)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(FORECAST_HEADER)?;
            for (d, y) in f.last_date.iter_days().skip(1).zip(path) {
                let mut row = vec![d.to_string(), y.to_string()];
                row.resize(FORECAST_HEADER.len(), String::new());
                w.write_record(&row)?;
            }
            w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?
        }
    };
    write_file(output, &bytes)
}

fn decompose(model: &Path, output: &Path) -> Result<()> {
    let SavedModel::Additive(m) = load_model(model)? else {
        bail!("decompose needs an additive model");
    };
    let comps = m.decompose(&m.training_days());
    write_file(output, &buffer(|w| comps.write_csv(w))?)
}

fn check_cv(n_quantiles: usize, n_folds: usize) -> Result<()> {
    ensure!(
        n_folds >= 1 && n_folds < n_quantiles,
        "--n-folds must be at least 1 and below --n-quantiles ({n_folds} vs {n_quantiles})"
    );
    Ok(())
}

fn cv(
    data: &Path,
    output: &Path,
    n_quantiles: usize,
    n_folds: usize,
    args: &ModelArgs,
    holidays: Option<&Path>,
    seed: u64,
) -> Result<()> {
    check_cv(n_quantiles, n_folds)?;
    let series = read_series(data)?;
    let spec = model_spec(args, holidays, seed)?;
    let report = run_cv(&series, &spec, n_quantiles, n_folds)?;
    println!("mean MAPE {:.4}% (std {:.4})", report.mean.mape, report.std.mape);
    write_file(output, &buffer(|w| report.write_csv(w))?)
}

struct TuneRun {
    space: Option<PathBuf>,
    iterations: usize,
    n_quantiles: usize,
    n_folds: usize,
    timings: bool,
    seed: u64,
}

fn tune(data: &Path, prefix: &Path, run: &TuneRun, args: &ModelArgs, holidays: Option<&Path>) -> Result<()> {
    check_cv(run.n_quantiles, run.n_folds)?;
    let series = read_series(data)?;
    let base = model_spec(args, holidays, run.seed)?;
    let space = match &run.space {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SearchSpace::from_json(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => match base {
            ModelSpec::Additive { .. } => SearchSpace::additive_default(),
            ModelSpec::Lag(_) => SearchSpace::lag_default(),
        },
    };
    let settings = SearchSettings::new(run.iterations, run.seed);
    let result = run_search(&series, &base, &space, &settings, run.n_quantiles, run.n_folds)?;
    let best = result.best_trial();
    let best_spec = aquacast::tuner::apply_assignment(&base, &space, &best.assignment)?;

    let history = buffer(|w| result.write_history_csv(w, run.timings))?;
    let pdp_rows = match &result.surrogate {
        Some(s) => partial_dependence_all(s, PDP_GRID_SIZE, run.seed)?,
        None => Vec::new(),
    };
    let pdp = buffer(|w| write_pdp_csv(&pdp_rows, w))?;
    let best_json = model_config(&best_spec).to_json()?;

    let path = |suffix: &str| {
        let name = prefix
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        prefix.with_file_name(format!("{name}{suffix}"))
    };
    write_file(&path("_history.csv"), &history)?;
    write_file(&path("_pdp.csv"), &pdp)?;
    write_file(&path("_best.json"), best_json.as_bytes())?;
    println!(
        "best iteration {} with mean MAPE {:.4}%",
        best.iteration, best.objective
    );
    Ok(())
}
