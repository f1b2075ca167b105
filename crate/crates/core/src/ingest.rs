//! Billing records to citywide daily consumption.
//!
//! Each client is assumed to consume uniformly across its billing period, so
//! a record of `C` cubic metres over an inclusive period of `n` days
//! contributes `C / n` to every day in that period. The citywide estimate for
//! a day is the sum of contributions from every record covering it. Days no
//! record covers are gaps, not zeros.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{parse_date, DailySeries};

pub const BILLING_HEADER: [&str; 4] = ["client_id", "period_start", "period_end", "consumption"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillingRecord {
    pub client_id: String,
    pub period_start: NaiveDate,
    pub period_end: NaiveDate,
    /// Cubic metres over the whole period.
    pub consumption: f64,
}

impl BillingRecord {
    pub fn new(
        client_id: impl Into<String>,
        period_start: NaiveDate,
        period_end: NaiveDate,
        consumption: f64,
    ) -> Result<Self> {
        if period_end < period_start {
            return Err(Error::InvalidSeries(format!(
                "inverted period {period_start}..{period_end}"
            )));
        }
        if !consumption.is_finite() || consumption < 0.0 {
            return Err(Error::InvalidSeries(format!(
                "consumption {consumption} must be finite and non-negative"
            )));
        }
        Ok(Self {
            client_id: client_id.into(),
            period_start,
            period_end,
            consumption,
        })
    }

    /// Inclusive number of days in the billing period.
    pub fn period_days(&self) -> i64 {
        (self.period_end - self.period_start).num_days() + 1
    }

    pub fn daily_share(&self) -> f64 {
        self.consumption / self.period_days() as f64
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        self.period_start.iter_days().take(self.period_days() as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Abort on the first bad row.
    #[default]
    Strict,
    /// Skip bad rows and report them.
    Lenient,
}

#[derive(Debug, Default)]
pub struct ParsedBilling {
    pub records: Vec<BillingRecord>,
    /// Rows dropped in lenient mode, as `(line, reason)`.
    pub skipped: Vec<(u64, String)>,
}

pub fn parse_billing<R: Read>(source: R, mode: ParseMode) -> Result<ParsedBilling> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != BILLING_HEADER {
        return Err(Error::Row {
            line: 1,
            message: format!("expected header {:?}", BILLING_HEADER.join(",")),
        });
    }

    let mut out = ParsedBilling::default();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        match parse_row(&row, line) {
            Ok(rec) => out.records.push(rec),
            Err(e) => match mode {
                ParseMode::Strict => return Err(e),
                ParseMode::Lenient => out.skipped.push((line, e.to_string())),
            },
        }
    }
    Ok(out)
}

fn parse_row(row: &csv::StringRecord, line: u64) -> Result<BillingRecord> {
    let row_err = |message: String| Error::Row { line, message };
    if row.len() != 4 {
        return Err(row_err(format!("expected 4 fields, found {}", row.len())));
    }
    let start = parse_date(&row[1], line)?;
    let end = parse_date(&row[2], line)?;
    let consumption: f64 = row[3]
        .parse()
        .map_err(|_| row_err(format!("bad consumption {:?}", &row[3])))?;
    if end < start {
        return Err(row_err(format!("inverted period {start}..{end}")));
    }
    if !consumption.is_finite() || consumption < 0.0 {
        return Err(row_err(format!("negative or non-finite consumption {consumption}")));
    }
    Ok(BillingRecord {
        client_id: row[0].to_string(),
        period_start: start,
        period_end: end,
        consumption,
    })
}

/// Citywide daily estimate: per-record division first, then summation over
/// covering records in input order.
pub fn estimate_daily(records: &[BillingRecord]) -> Result<DailySeries> {
    estimate_daily_within(records, None)
}

/// As [`estimate_daily`], keeping only dates inside `range` (inclusive).
/// Records straddling the range edges keep their full-period daily share;
/// consumption is not rescaled to the clipped length.
pub fn estimate_daily_within(records: &[BillingRecord], range: Option<(NaiveDate, NaiveDate)>) -> Result<DailySeries> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let mut totals: BTreeMap<NaiveDate, f64> = BTreeMap::new();
    for rec in records {
        let share = rec.daily_share();
        for day in rec.days() {
            if let Some((lo, hi)) = range {
                if day < lo || day > hi {
                    continue;
                }
            }
            *totals.entry(day).or_insert(0.0) += share;
        }
    }
    let (dates, values) = totals.into_iter().unzip();
    DailySeries::new(dates, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl GapRange {
    pub fn days(&self) -> i64 {
        (self.end - self.start).num_days() + 1
    }
}

/// Maximal runs of absent dates strictly between the first and last dates.
pub fn detect_gaps(series: &DailySeries) -> Vec<GapRange> {
    series
        .dates()
        .windows(2)
        .filter(|w| (w[1] - w[0]).num_days() > 1)
        .map(|w| GapRange {
            start: w[0].succ_opt().expect("date in range"),
            end: w[1].pred_opt().expect("date in range"),
        })
        .collect()
}

pub fn write_gaps_csv<W: std::io::Write>(gaps: &[GapRange], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["start", "end", "days"])?;
    for g in gaps {
        w.write_record([g.start.to_string(), g.end.to_string(), g.days().to_string()])?;
    }
    w.flush()?;
    Ok(())
}
