#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aquacast::synth::{SyntheticData, SyntheticSpec};

pub fn aquacast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aquacast"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn ok(args: &[&str]) -> Output {
    let out = aquacast(args);
    assert!(
        out.status.success(),
        "aquacast {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Writes the synthetic series and its holiday table into `dir`.
pub fn fixture(dir: &Path, spec: &SyntheticSpec) -> (SyntheticData, PathBuf, PathBuf) {
    let data = spec.generate();
    let series = dir.join("daily.csv");
    let holidays = dir.join("holidays.csv");
    data.series.write_csv(std::fs::File::create(&series).unwrap()).unwrap();
    data.holidays
        .write_csv(std::fs::File::create(&holidays).unwrap())
        .unwrap();
    (data, series, holidays)
}

pub fn small_spec() -> SyntheticSpec {
    SyntheticSpec {
        n_days: 900,
        changepoint_day: 400,
        ..Default::default()
    }
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}
