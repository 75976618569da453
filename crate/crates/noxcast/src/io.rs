//! CSV and JSON file formats.
//!
//! Every CSV written here starts with one `# units: ...` comment line; the
//! readers skip `#` lines.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, Timelike};
use noxcast_core::eval::ScoreMatrix;
use noxcast_core::features::{CalendarFlags, CalendarTable, FeatureFrame, HourlySeries};
use noxcast_core::time::{Date, Hour};
use serde::Serialize;

use crate::error::{CliError, Result};

pub fn parse_date(s: &str) -> std::result::Result<Date, String> {
    let d = NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("bad date `{s}`: {e}"))?;
    Ok(Date::from_ymd(i64::from(chrono::Datelike::year(&d)), chrono::Datelike::month(&d), chrono::Datelike::day(&d)))
}

/// Whole UTC hour from an RFC 3339 timestamp such as `2017-01-31T10:00:00Z`.
pub fn parse_hour(s: &str) -> std::result::Result<Hour, String> {
    let t = DateTime::parse_from_rfc3339(s.trim()).map_err(|e| format!("bad timestamp `{s}`: {e}"))?;
    if t.minute() != 0 || t.second() != 0 || t.nanosecond() != 0 {
        return Err(format!("timestamp `{s}` is not on the hour"));
    }
    Ok(Hour(t.timestamp().div_euclid(3600)))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let f = File::open(path).map_err(|e| CliError::io(format!("cannot open {}", path.display()), e))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(f))
}

fn data_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}:{line}: {msg}", path.display()))
}

/// Read a `timestamp,<name>` series; empty fields are missing values.
pub fn read_series(path: &Path) -> Result<HourlySeries> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| data_err(path, 1, e))?.clone();
    if headers.len() != 2 || &headers[0] != "timestamp" {
        return Err(data_err(path, 1, "header must be `timestamp,<series name>`"));
    }
    let name = headers[1].to_string();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data_err(path, 0, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        times.push(parse_hour(&rec[0]).map_err(|e| data_err(path, line, e))?);
        let v = rec.get(1).unwrap_or("");
        values.push(if v.is_empty() {
            None
        } else {
            Some(v.parse::<f64>().map_err(|e| data_err(path, line, format!("`{v}`: {e}")))?)
        });
    }
    let s = HourlySeries::new(name, times, values).map_err(|e| data_err(path, 0, e))?;
    s.check_sorted().map_err(|e| data_err(path, 0, e))?;
    Ok(s)
}

fn parse_flag(s: &str) -> std::result::Result<bool, String> {
    match s {
        "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        _ => Err(format!("flag `{s}` is not 0/1")),
    }
}

/// Read `date,bank_holiday,heavy_traffic,school_holiday`.
pub fn read_calendar(path: &Path) -> Result<CalendarTable> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| data_err(path, 1, e))?.clone();
    let want = ["date", "bank_holiday", "heavy_traffic", "school_holiday"];
    if headers.iter().ne(want.iter().copied()) {
        return Err(data_err(path, 1, format!("header must be `{}`", want.join(","))));
    }
    let mut table = CalendarTable::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data_err(path, 0, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let date = parse_date(&rec[0]).map_err(|e| data_err(path, line, e))?;
        let f = |k: usize| parse_flag(&rec[k]).map_err(|e| data_err(path, line, e));
        let flags = CalendarFlags {
            bank_holiday: f(1)?,
            heavy_traffic: f(2)?,
            school_holiday: f(3)?,
        };
        if table.insert(date, flags).is_some() {
            return Err(data_err(path, line, format!("date {date} listed twice")));
        }
    }
    Ok(table)
}

/// CSV writer that prefixes a units comment.
pub struct CsvOut {
    path: String,
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(path: &Path, units: &str) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
        }
        let f = File::create(path).map_err(|e| CliError::io(format!("cannot create {}", path.display()), e))?;
        let mut w = BufWriter::new(f);
        writeln!(w, "# units: {units}").map_err(|e| CliError::io(path.display().to_string(), e))?;
        Ok(Self {
            path: path.display().to_string(),
            inner: csv::Writer::from_writer(w),
        })
    }

    pub fn row<I, T>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.inner
            .write_record(fields)
            .map_err(|e| CliError::Data(format!("{}: {e}", self.path)))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| CliError::io(self.path.clone(), e))
    }
}

pub fn write_series(path: &Path, s: &HourlySeries) -> Result<()> {
    let mut w = CsvOut::create(path, "µg/m³")?;
    w.row(["timestamp", s.name.as_str()])?;
    for (t, v) in s.timestamps.iter().zip(&s.values) {
        w.row([t.to_string(), v.map(|x| x.to_string()).unwrap_or_default()])?;
    }
    w.finish()
}

pub fn write_calendar(path: &Path, table: &CalendarTable) -> Result<()> {
    let mut w = CsvOut::create(path, "flags are 0/1")?;
    w.row(["date", "bank_holiday", "heavy_traffic", "school_holiday"])?;
    let b = |x: bool| if x { "1" } else { "0" }.to_string();
    for (d, f) in table.iter() {
        w.row([d.to_string(), b(f.bank_holiday), b(f.heavy_traffic), b(f.school_holiday)])?;
    }
    w.finish()
}

/// Design matrix dump: issue and target times, targets, then every column.
pub fn write_frame(path: &Path, frame: &FeatureFrame, epsilon: f64) -> Result<()> {
    let mut w = CsvOut::create(
        path,
        &format!("y_log and lag/exogenous columns are ln(µg/m³ + {epsilon}); y_raw is µg/m³"),
    )?;
    let mut header = vec!["issue_time".to_string(), "target_time".into(), "y_log".into(), "y_raw".into()];
    header.extend(frame.column_names.iter().cloned());
    w.row(&header)?;
    for i in 0..frame.len() {
        let t = frame.issue_times[i];
        let mut rec = vec![
            t.to_string(),
            t.offset(i64::from(frame.horizon_hours)).to_string(),
            frame.y[i].to_string(),
            frame.y_raw[i].to_string(),
        ];
        rec.extend(frame.x.row(i).iter().map(|v| v.to_string()));
        w.row(&rec)?;
    }
    w.finish()
}

/// `horizon,<model>...` with one row per dataset.
pub fn write_scores(path: &Path, m: &ScoreMatrix, units: &str) -> Result<()> {
    let mut w = CsvOut::create(path, units)?;
    let mut header = vec!["horizon".to_string()];
    header.extend(m.algorithms.iter().cloned());
    w.row(&header)?;
    for (name, row) in m.datasets.iter().zip(&m.values) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.row(&rec)?;
    }
    w.finish()
}

pub fn read_scores(path: &Path) -> Result<ScoreMatrix> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| data_err(path, 1, e))?.clone();
    if headers.len() < 3 || &headers[0] != "horizon" {
        return Err(data_err(path, 1, "header must be `horizon,<model>,<model>...`"));
    }
    let algorithms: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    let mut datasets = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data_err(path, 0, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        datasets.push(rec[0].to_string());
        let row = rec
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|e| data_err(path, line, format!("`{v}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        values.push(row);
    }
    ScoreMatrix::new(datasets, algorithms, values).map_err(|e| data_err(path, 0, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
    }
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.into()))?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
    serde_json::from_str(&s).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamps() {
        let h = parse_hour("2017-01-31T10:00:00Z").unwrap();
        assert_eq!(h, Hour::from_date_hour(Date::from_ymd(2017, 1, 31), 10));
        assert_eq!(h.to_string(), "2017-01-31T10:00:00Z");
        assert_eq!(parse_hour("2017-01-31T12:00:00+02:00").unwrap(), h);
        assert!(parse_hour("2017-01-31T10:30:00Z").is_err());
        assert!(parse_hour("yesterday").is_err());
        assert_eq!(parse_date("2017-02-28").unwrap(), Date::from_ymd(2017, 2, 28));
        assert!(parse_date("2017-02-30").is_err());
    }

    #[test]
    fn series_round_trip_with_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("no2.csv");
        let start = Hour::from_date_hour(Date::from_ymd(2017, 1, 1), 0);
        let s = HourlySeries::contiguous("no2", start, vec![Some(1.5), None, Some(0.1 + 0.2)]);
        write_series(&p, &s).unwrap();
        assert_eq!(read_series(&p).unwrap(), s);
    }

    #[test]
    fn malformed_inputs_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "timestamp,no2\n2017-01-01T00:00:00Z,abc\n").unwrap();
        assert!(matches!(read_series(&p), Err(CliError::Data(_))));
        std::fs::write(&p, "time,no2\n").unwrap();
        assert!(matches!(read_series(&p), Err(CliError::Data(_))));
        std::fs::write(&p, "timestamp,no2\n2017-01-01T01:00:00Z,1\n2017-01-01T00:00:00Z,2\n").unwrap();
        assert!(matches!(read_series(&p), Err(CliError::Data(_))));
        std::fs::write(&p, "date,bank_holiday,heavy_traffic,school_holiday\n2017-01-01,1,0,2\n").unwrap();
        assert!(matches!(read_calendar(&p), Err(CliError::Data(_))));
        assert!(matches!(read_series(&dir.path().join("missing.csv")), Err(CliError::Io { .. })));
    }

    #[test]
    fn scores_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scores.csv");
        let m = ScoreMatrix::new(
            vec!["1".into(), "6".into()],
            vec!["QGB".into(), "QRF".into()],
            vec![vec![0.25, 1.0 / 3.0], vec![0.5, 0.75]],
        )
        .unwrap();
        write_scores(&p, &m, "test").unwrap();
        assert_eq!(read_scores(&p).unwrap(), m);
    }
}
