//! Holiday lookup and conversion from calendar dates to model time.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::parse_date;

pub const HOLIDAY_HEADER: [&str; 2] = ["date", "name"];

/// Dated holiday occurrences. Each distinct name gets one model coefficient,
/// shared by all of its occurrences.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(NaiveDate, String)>", into = "Vec<(NaiveDate, String)>")]
pub struct HolidayTable {
    by_date: BTreeMap<NaiveDate, String>,
    names: Vec<String>,
}

impl HolidayTable {
    pub fn from_rows(rows: impl IntoIterator<Item = (NaiveDate, String)>) -> Result<Self> {
        let mut by_date = BTreeMap::new();
        for (date, name) in rows {
            if name.trim().is_empty() {
                return Err(Error::InvalidConfig(format!("empty holiday name on {date}")));
            }
            if by_date.insert(date, name).is_some() {
                return Err(Error::DuplicateHoliday(date));
            }
        }
        let names: BTreeSet<&String> = by_date.values().collect();
        let names = names.into_iter().cloned().collect();
        Ok(Self { by_date, names })
    }

    pub fn is_empty(&self) -> bool {
        self.by_date.is_empty()
    }

    pub fn len(&self) -> usize {
        self.by_date.len()
    }

    /// Distinct names in sorted order; a name's position is its coefficient index.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, date: NaiveDate) -> Option<&str> {
        self.by_date.get(&date).map(String::as_str)
    }

    pub fn name_index(&self, date: NaiveDate) -> Option<usize> {
        let name = self.by_date.get(&date)?;
        self.names.binary_search(name).ok()
    }

    pub fn rows(&self) -> impl Iterator<Item = (NaiveDate, &str)> {
        self.by_date.iter().map(|(d, n)| (*d, n.as_str()))
    }

    pub fn dates_for(&self, name: &str) -> Vec<NaiveDate> {
        self.by_date
            .iter()
            .filter(|(_, n)| n.as_str() == name)
            .map(|(d, _)| *d)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(HOLIDAY_HEADER)?;
        for (d, n) in self.rows() {
            w.write_record([d.to_string().as_str(), n])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl TryFrom<Vec<(NaiveDate, String)>> for HolidayTable {
    type Error = Error;

    fn try_from(rows: Vec<(NaiveDate, String)>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<HolidayTable> for Vec<(NaiveDate, String)> {
    fn from(t: HolidayTable) -> Self {
        t.by_date.into_iter().collect()
    }
}

/// Reads a `date,name` CSV. A completely empty source yields an empty table.
pub fn load_holidays<R: Read>(source: R) -> Result<HolidayTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .has_headers(false)
        .from_reader(source);
    let mut rows = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if i == 0 {
            if row.iter().collect::<Vec<_>>() != HOLIDAY_HEADER {
                return Err(Error::Row {
                    line,
                    message: format!("expected header {:?}", HOLIDAY_HEADER.join(",")),
                });
            }
            continue;
        }
        if row.len() != 2 {
            return Err(Error::Row {
                line,
                message: format!("expected 2 fields, found {}", row.len()),
            });
        }
        let date = parse_date(&row[0], line)?;
        if row[1].is_empty() {
            return Err(Error::Row {
                line,
                message: "empty holiday name".into(),
            });
        }
        if rows.iter().any(|(d, _)| *d == date) {
            return Err(Error::Row {
                line,
                message: format!("duplicate holiday date {date}"),
            });
        }
        rows.push((date, row[1].to_string()));
    }
    HolidayTable::from_rows(rows)
}

/// Affine map from dates to model time: the epoch maps to 0 and the last
/// training date to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeScale {
    pub epoch: NaiveDate,
    /// Days between first and last training date.
    pub span_days: i64,
}

impl TimeScale {
    pub fn new(epoch: NaiveDate, last: NaiveDate) -> Result<Self> {
        let span_days = (last - epoch).num_days();
        if span_days < 1 {
            return Err(Error::InvalidConfig(format!(
                "time scale needs a positive span, got {span_days} days"
            )));
        }
        Ok(Self { epoch, span_days })
    }

    pub fn last(&self) -> NaiveDate {
        self.epoch + chrono::Duration::days(self.span_days)
    }

    pub fn model_time(&self, date: NaiveDate) -> f64 {
        (date - self.epoch).num_days() as f64 / self.span_days as f64
    }

    /// Model-time length of one day.
    pub fn day(&self) -> f64 {
        1.0 / self.span_days as f64
    }
}

pub fn to_model_time(date: NaiveDate, scale: &TimeScale) -> f64 {
    scale.model_time(date)
}
