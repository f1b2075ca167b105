mod common;

use aquacast::ingest::{estimate_daily, parse_billing, ParseMode};
use aquacast::model_file::ModelConfig;
use aquacast::DailySeries;
use common::{aquacast, fixture, ok, p, read, small_spec};

const TWO_RECORDS: &str = "client_id,period_start,period_end,consumption\n\
a,2020-01-01,2020-01-10,100\n\
b,2020-01-05,2020-01-14,50\n";

#[test]
fn ingest_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("billing.csv");
    std::fs::write(&input, TWO_RECORDS).unwrap();
    let out = dir.path().join("daily.csv");
    ok(&["ingest", "--input", p(&input), "--output", p(&out)]);
    let expected = estimate_daily(
        &parse_billing(TWO_RECORDS.as_bytes(), ParseMode::Strict)
            .unwrap()
            .records,
    )
    .unwrap();
    let got = DailySeries::read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(got, expected);
    assert_eq!(read(&dir.path().join("daily_gaps.csv")), "start,end,days\n");
}

#[test]
fn ingest_empty_file_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("billing.csv");
    std::fs::write(&input, "client_id,period_start,period_end,consumption\n").unwrap();
    let out = dir.path().join("daily.csv");
    let res = aquacast(&["ingest", "--input", p(&input), "--output", p(&out)]);
    assert!(!res.status.success());
    assert!(!out.exists());
}

#[test]
fn ingest_reports_gap_and_skips_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("billing.csv");
    std::fs::write(
        &input,
        "client_id,period_start,period_end,consumption\n\
         a,2020-01-01,2020-01-10,100\n\
         x,2020-02-01,2020-01-01,5\n\
         b,2020-01-15,2020-01-20,60\n",
    )
    .unwrap();
    let out = dir.path().join("daily.csv");
    let gaps = dir.path().join("gaps.csv");
    let res = ok(&["ingest", "--input", p(&input), "--output", p(&out), "--gaps", p(&gaps)]);
    assert_eq!(read(&gaps), "start,end,days\n2020-01-11,2020-01-14,4\n");
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 3"));
    let strict = aquacast(&[
        "ingest",
        "--strict",
        "--input",
        p(&input),
        "--output",
        p(&dir.path().join("s.csv")),
    ]);
    assert!(!strict.status.success());
}

#[test]
fn fit_forecast_decompose() {
    let dir = tempfile::tempdir().unwrap();
    let (_, series, holidays) = fixture(dir.path(), &small_spec());
    let model = dir.path().join("model.json");
    ok(&[
        "--holidays",
        p(&holidays),
        "fit",
        "--data",
        p(&series),
        "--model",
        p(&model),
    ]);

    let fc = dir.path().join("fc.csv");
    ok(&[
        "forecast",
        "--model",
        p(&model),
        "--horizon-days",
        "1461",
        "--output",
        p(&fc),
    ]);
    let text = read(&fc);
    assert_eq!(text.lines().count(), 1 + 1461);
    assert!(text.starts_with("date,yhat,yhat_lower,yhat_upper,trend,yearly,weekly,holidays\n"));

    let comps = dir.path().join("comps.csv");
    ok(&["decompose", "--model", p(&model), "--output", p(&comps)]);
    let groups: std::collections::BTreeSet<String> = read(&comps)
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(
        groups.into_iter().collect::<Vec<_>>(),
        ["holidays", "trend", "weekly", "yearly"]
    );

    let zero = aquacast(&[
        "forecast",
        "--model",
        p(&model),
        "--horizon-days",
        "0",
        "--output",
        p(&fc),
    ]);
    assert!(!zero.status.success());
}

#[test]
fn lag_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (_, series, _) = fixture(dir.path(), &small_spec());
    let model = dir.path().join("lag.json");
    ok(&[
        "fit",
        "--data",
        p(&series),
        "--model",
        p(&model),
        "--model-type",
        "lag",
        "--input-sequence-length",
        "30",
    ]);
    let fc = dir.path().join("fc.csv");
    ok(&[
        "forecast",
        "--model",
        p(&model),
        "--horizon-days",
        "10",
        "--output",
        p(&fc),
    ]);
    assert_eq!(read(&fc).lines().count(), 11);
    let res = aquacast(&[
        "decompose",
        "--model",
        p(&model),
        "--output",
        p(&dir.path().join("c.csv")),
    ]);
    assert!(!res.status.success());
}

#[test]
fn cv_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (_, series, holidays) = fixture(dir.path(), &small_spec());
    let additive = dir.path().join("cv_additive.csv");
    ok(&[
        "--holidays",
        p(&holidays),
        "cv",
        "--data",
        p(&series),
        "--output",
        p(&additive),
    ]);
    let text = read(&additive);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 4 + 2);
    assert_eq!(lines[0], "fold,mae,mape,mse,rmse");

    let lag = dir.path().join("cv_lag.csv");
    ok(&[
        "cv",
        "--data",
        p(&series),
        "--output",
        p(&lag),
        "--model-type",
        "lag",
        "--input-sequence-length",
        "30",
    ]);
    let mape = |t: &str| -> f64 {
        let row = t.lines().find(|l| l.starts_with("mean,")).unwrap();
        row.split(',').nth(2).unwrap().parse().unwrap()
    };
    assert!(mape(&read(&lag)) >= mape(&text));

    let bad = aquacast(&[
        "cv",
        "--data",
        p(&series),
        "--output",
        p(&lag),
        "--n-quantiles",
        "4",
        "--n-folds",
        "4",
    ]);
    assert!(!bad.status.success());
}

#[test]
fn tune_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (_, series, holidays) = fixture(dir.path(), &small_spec());
    let run = |prefix: &str| {
        let prefix = dir.path().join(prefix);
        ok(&[
            "--holidays",
            p(&holidays),
            "tune",
            "--data",
            p(&series),
            "--iterations",
            "10",
            "--out-prefix",
            p(&prefix),
        ]);
        prefix
    };
    let a = run("a");
    let b = run("b");
    let hist = |x: &std::path::Path| {
        read(&x.with_file_name(format!("{}_history.csv", x.file_name().unwrap().to_str().unwrap())))
    };
    let ha = hist(&a);
    assert_eq!(ha.lines().count(), 1 + 10);
    assert!(ha.starts_with(
        "iteration,changepoint_prior_scale,seasonality_prior_scale,holiday_prior_scale,seasonality_mode,mape_mean,mape_std,mae_mean,status,seconds\n"
    ));
    assert_eq!(ha, hist(&b));

    let best = dir.path().join("a_best.json");
    let config = ModelConfig::from_json(&read(&best)).unwrap();
    assert!(matches!(config, ModelConfig::Additive(_)));
    let model = dir.path().join("tuned.json");
    ok(&[
        "--holidays",
        p(&holidays),
        "fit",
        "--data",
        p(&series),
        "--model",
        p(&model),
        "--config",
        p(&best),
    ]);

    let pdp = read(&dir.path().join("a_pdp.csv"));
    let mut one_d = std::collections::BTreeSet::new();
    let mut two_d = std::collections::BTreeSet::new();
    for line in pdp.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[1].is_empty() {
            one_d.insert(f[0].to_string());
        } else {
            two_d.insert((f[0].to_string(), f[1].to_string()));
        }
    }
    assert_eq!(one_d.len(), 4);
    assert_eq!(two_d.len(), 6);
}
