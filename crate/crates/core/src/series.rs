//! Date-indexed daily consumption series.
//!
//! A [`DailySeries`] holds strictly increasing dates paired with finite,
//! non-negative values. Missing dates are simply absent; nothing in this crate
//! fills them with zeros.

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SERIES_HEADER: [&str; 2] = ["date", "consumption_m3"];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DailySeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl DailySeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} dates but {} values",
                dates.len(),
                values.len()
            )));
        }
        for pair in dates.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidSeries(format!(
                    "dates not strictly increasing at {}",
                    pair[1]
                )));
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidSeries(format!(
                "value {v} is not finite and non-negative"
            )));
        }
        Ok(Self { dates, values })
    }

    /// Builds a series from unordered pairs, sorting by date.
    pub fn from_pairs(mut pairs: Vec<(NaiveDate, f64)>) -> Result<Self> {
        pairs.sort_by_key(|(d, _)| *d);
        let (dates, values) = pairs.into_iter().unzip();
        Self::new(dates, values)
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.dates.first().copied()
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.dates.last().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.dates.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        self.dates.binary_search(&date).ok().map(|i| self.values[i])
    }

    /// Records with index in `range`, by position rather than by date.
    pub fn slice(&self, range: std::ops::Range<usize>) -> DailySeries {
        DailySeries {
            dates: self.dates[range.clone()].to_vec(),
            values: self.values[range].to_vec(),
        }
    }

    /// Keeps only the records whose date satisfies `keep`.
    pub fn filter(&self, mut keep: impl FnMut(NaiveDate) -> bool) -> DailySeries {
        let (dates, values) = self.iter().filter(|(d, _)| keep(*d)).unzip();
        DailySeries { dates, values }
    }

    /// Pointwise sum over the union of dates.
    pub fn merge(&self, other: &DailySeries) -> DailySeries {
        let mut map: std::collections::BTreeMap<NaiveDate, f64> = self.iter().collect();
        for (d, v) in other.iter() {
            *map.entry(d).or_insert(0.0) += v;
        }
        let (dates, values) = map.into_iter().unzip();
        DailySeries { dates, values }
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != SERIES_HEADER {
            return Err(Error::Row {
                line: 1,
                message: format!("expected header {:?}", SERIES_HEADER.join(",")),
            });
        }
        let mut pairs = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            let date = parse_date(row.get(0).unwrap_or(""), line)?;
            let value: f64 = row.get(1).unwrap_or("").parse().map_err(|_| Error::Row {
                line,
                message: format!("bad consumption {:?}", row.get(1).unwrap_or("")),
            })?;
            pairs.push((date, value));
        }
        let series = Self::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())?;
        Ok(series)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(SERIES_HEADER)?;
        for (d, v) in self.iter() {
            w.write_record([d.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn parse_date(text: &str, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d").map_err(|_| Error::Row {
        line,
        message: format!("malformed date {text:?}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn rejects_duplicate_and_negative() {
        assert!(DailySeries::new(vec![d(2020, 1, 1), d(2020, 1, 1)], vec![1.0, 2.0]).is_err());
        assert!(DailySeries::new(vec![d(2020, 1, 1)], vec![-1.0]).is_err());
        assert!(DailySeries::new(vec![d(2020, 1, 1)], vec![f64::NAN]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = DailySeries::new(vec![d(2020, 1, 1), d(2020, 1, 3)], vec![1.5, 0.1]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "date,consumption_m3\n2020-01-01,1.5\n2020-01-03,0.1\n"
        );
        assert_eq!(DailySeries::read_csv(&buf[..]).unwrap(), s);
    }

    #[test]
    fn merge_sums_overlap() {
        let a = DailySeries::new(vec![d(2020, 1, 1), d(2020, 1, 2)], vec![1.0, 2.0]).unwrap();
        let b = DailySeries::new(vec![d(2020, 1, 2), d(2020, 1, 5)], vec![3.0, 4.0]).unwrap();
        let m = a.merge(&b);
        assert_eq!(m.values(), &[1.0, 5.0, 4.0]);
    }
}
