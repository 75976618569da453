//! Hourly series alignment, log transform and per-horizon design matrices.
//!
//! Columns for one sample issued at `t` with horizon `h`:
//! lagged observations are read at `t - lag` (never after `t`); exogenous
//! forecasts, calendar flags, clock columns and Fourier terms describe the
//! target instant `t + h`, which is known in advance.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::time::{Date, Hour, HOURS_PER_DAY};

/// Longest run of missing hours that `align` forward-fills.
pub const MAX_FILL_HOURS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlySeries {
    pub name: String,
    pub timestamps: Vec<Hour>,
    pub values: Vec<Option<f64>>,
}

impl HourlySeries {
    pub fn new(name: impl Into<String>, timestamps: Vec<Hour>, values: Vec<Option<f64>>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::Dimension {
                expected: timestamps.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            name: name.into(),
            timestamps,
            values,
        })
    }

    /// Contiguous hourly series starting at `start`.
    pub fn contiguous(name: impl Into<String>, start: Hour, values: Vec<Option<f64>>) -> Self {
        let timestamps = (0..values.len() as i64).map(|i| start.offset(i)).collect();
        Self {
            name: name.into(),
            timestamps,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_sorted(&self) -> Result<()> {
        for w in self.timestamps.windows(2) {
            if w[1] == w[0] {
                return Err(Error::DuplicateTimestamp {
                    series: self.name.clone(),
                    hour: w[1].0,
                });
            }
            if w[1] < w[0] {
                return Err(Error::Unsorted {
                    series: self.name.clone(),
                    hour: w[1].0,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagSpec {
    pub source: String,
    pub lags_hours: Vec<u32>,
}

impl LagSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lags_hours.is_empty() {
            return Err(Error::Config(format!("lags for `{}` are empty", self.source)));
        }
        if self.lags_hours[0] < 1 || self.lags_hours.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "lags for `{}` must be distinct, ascending and >= 1",
                self.source
            )));
        }
        Ok(())
    }

    pub fn max_lag(&self) -> u32 {
        self.lags_hours.last().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonSpec {
    pub periods_hours: Vec<f64>,
}

impl Default for SeasonSpec {
    fn default() -> Self {
        Self {
            periods_hours: vec![12.0, 24.0, 168.0, 8766.0],
        }
    }
}

impl SeasonSpec {
    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.periods_hours.iter().enumerate() {
            if !(*p > 0.0) || !p.is_finite() {
                return Err(Error::Config(format!("period {p} must be positive")));
            }
            if self.periods_hours[..i].contains(p) {
                return Err(Error::Config(format!("period {p} listed twice")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarFlags {
    pub bank_holiday: bool,
    pub heavy_traffic: bool,
    pub school_holiday: bool,
}

impl CalendarFlags {
    pub const NAMES: [&'static str; 3] = ["bank_holiday", "heavy_traffic", "school_holiday"];

    fn as_array(self) -> [bool; 3] {
        [self.bank_holiday, self.heavy_traffic, self.school_holiday]
    }
}

/// One row of day-type flags per calendar date.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CalendarTable {
    rows: BTreeMap<Date, CalendarFlags>,
}

impl CalendarTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// All-zero table covering `first..=last`.
    pub fn empty_span(first: Date, last: Date) -> Self {
        let mut t = Self::new();
        let mut d = first;
        while d <= last {
            t.insert(d, CalendarFlags::default());
            d = d.offset(1);
        }
        t
    }

    pub fn insert(&mut self, date: Date, flags: CalendarFlags) -> Option<CalendarFlags> {
        self.rows.insert(date, flags)
    }

    pub fn get(&self, date: Date) -> Option<CalendarFlags> {
        self.rows.get(&date).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Date, CalendarFlags)> + '_ {
        self.rows.iter().map(|(d, f)| (*d, *f))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Named column of optional values, aligned with some timestamp list.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

/// Provenance of a design-matrix column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnKind {
    Lag { source: String, hours: u32 },
    Exogenous { source: String },
    Calendar { flag: String, day_lag: u32 },
    HourOfDay,
    DayOfWeek,
    Fourier { period_hours: f64, cosine: bool },
}

/// Put every series on the hourly grid `span.0..=span.1`.
///
/// Runs of at most [`MAX_FILL_HOURS`] missing hours that follow an observed
/// value are forward-filled; longer runs stay missing.
pub fn align(series: &[HourlySeries], span: (Hour, Hour)) -> Result<Vec<HourlySeries>> {
    let (start, end) = span;
    if end < start {
        return Err(Error::Config("alignment span is empty".into()));
    }
    let len = (end.0 - start.0 + 1) as usize;
    series
        .iter()
        .map(|s| {
            s.check_sorted()?;
            let mut grid: Vec<Option<f64>> = vec![None; len];
            for (t, v) in s.timestamps.iter().zip(&s.values) {
                if *t >= start && *t <= end {
                    grid[(t.0 - start.0) as usize] = v.filter(|x| !x.is_nan());
                }
            }
            forward_fill(&mut grid, MAX_FILL_HOURS);
            Ok(HourlySeries::contiguous(s.name.clone(), start, grid))
        })
        .collect()
}

fn forward_fill(values: &mut [Option<f64>], limit: usize) {
    let mut i = 0;
    while i < values.len() {
        if values[i].is_some() {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < values.len() && values[i].is_none() {
            i += 1;
        }
        if run_start > 0 && i - run_start <= limit {
            let fill = values[run_start - 1];
            for v in &mut values[run_start..i] {
                *v = fill;
            }
        }
    }
}

/// `v -> ln(v + epsilon)`; the name gains a `_log` suffix.
pub fn log_transform(s: &HourlySeries, epsilon: f64) -> Result<HourlySeries> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut values = Vec::with_capacity(s.len());
    for (t, v) in s.timestamps.iter().zip(&s.values) {
        values.push(match *v {
            Some(x) if x < 0.0 => {
                return Err(Error::NegativeValue {
                    series: s.name.clone(),
                    hour: t.0,
                    value: x,
                })
            }
            Some(x) => Some(libm::log(x + epsilon)),
            None => None,
        });
    }
    Ok(HourlySeries {
        name: format!("{}_log", s.name),
        timestamps: s.timestamps.clone(),
        values,
    })
}

#[inline]
pub fn inverse_log(v: f64, epsilon: f64) -> f64 {
    libm::exp(v) - epsilon
}

/// `name_lag_h` at position `i` holds the value observed `h` hours earlier.
/// Expects an aligned (contiguous) series.
pub fn lag_columns(s: &HourlySeries, spec: &LagSpec) -> Vec<Column> {
    spec.lags_hours
        .iter()
        .map(|&h| {
            let h = h as usize;
            let values = (0..s.len())
                .map(|i| if i >= h { s.values[i - h] } else { None })
                .collect();
            Column {
                name: format!("{}_lag_{}", spec.source, h),
                values,
            }
        })
        .collect()
}

/// `sin_P` and `cos_P` of `2*pi*t/P`, `t` in hours since the Unix epoch.
pub fn fourier_columns(timestamps: &[Hour], spec: &SeasonSpec) -> Vec<Column> {
    let mut out = Vec::with_capacity(2 * spec.periods_hours.len());
    for &p in &spec.periods_hours {
        let angle = |t: &Hour| {
            // reduce first so large epochs keep full precision
            let phase = libm::fmod(t.0 as f64, p) / p;
            2.0 * core::f64::consts::PI * phase
        };
        out.push(Column {
            name: format!("sin_{p}"),
            values: timestamps.iter().map(|t| Some(libm::sin(angle(t)))).collect(),
        });
        out.push(Column {
            name: format!("cos_{p}"),
            values: timestamps.iter().map(|t| Some(libm::cos(angle(t)))).collect(),
        });
    }
    out
}

/// Day-type flags shifted by each day lag, then `hour` and `weekday`.
pub fn calendar_columns(timestamps: &[Hour], table: &CalendarTable, day_lags: &[u32]) -> Result<Vec<Column>> {
    let mut missing = BTreeSet::new();
    for t in timestamps {
        for &d in day_lags {
            let date = t.date().offset(-i64::from(d));
            if table.get(date).is_none() {
                missing.insert(date);
            }
        }
    }
    if !missing.is_empty() {
        let missing: Vec<String> = missing.into_iter().map(|d| d.iso()).collect();
        return Err(Error::CalendarCoverage {
            first: missing[0].clone(),
            missing,
        });
    }
    let mut out = Vec::new();
    for (k, flag) in CalendarFlags::NAMES.iter().enumerate() {
        for &d in day_lags {
            let values = timestamps
                .iter()
                .map(|t| {
                    let date = t.date().offset(-i64::from(d));
                    let flags = table.get(date).unwrap_or_default().as_array();
                    Some(if flags[k] { 1.0 } else { 0.0 })
                })
                .collect();
            out.push(Column {
                name: format!("{flag}_d{d}"),
                values,
            });
        }
    }
    out.push(Column {
        name: "hour".into(),
        values: timestamps.iter().map(|t| Some(f64::from(t.hour_of_day()))).collect(),
    });
    out.push(Column {
        name: "weekday".into(),
        values: timestamps.iter().map(|t| Some(f64::from(t.date().weekday()))).collect(),
    });
    Ok(out)
}

/// Feature pipeline settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Series forecast by the models.
    pub target: String,
    pub lags: Vec<LagSpec>,
    /// Forecast series used at the target instant.
    pub exogenous: Vec<String>,
    pub seasons: SeasonSpec,
    pub calendar_day_lags: Vec<u32>,
    pub anchor_hour: u32,
    pub epsilon: f64,
    pub min_samples: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        let mut no2: Vec<u32> = (1..=5).collect();
        for day in 0..9 {
            no2.extend([11 + 24 * day, 12 + 24 * day, 13 + 24 * day]);
        }
        Self {
            target: "no2".into(),
            lags: vec![
                LagSpec {
                    source: "no2".into(),
                    lags_hours: no2,
                },
                LagSpec {
                    source: "o3".into(),
                    lags_hours: vec![24, 48, 72, 96],
                },
            ],
            exogenous: vec!["exo_no2".into()],
            seasons: SeasonSpec::default(),
            calendar_day_lags: vec![0, 1, 2, 7],
            anchor_hour: 10,
            epsilon: 1.0,
            min_samples: 100,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        for l in &self.lags {
            l.validate()?;
        }
        self.seasons.validate()?;
        if self.anchor_hour > 23 {
            return Err(Error::Config(format!("anchor_hour {} not in 0..=23", self.anchor_hour)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.exogenous.iter().any(|e| !e.starts_with("exo_")) {
            return Err(Error::Config("exogenous series names must start with `exo_`".into()));
        }
        Ok(())
    }

    /// Every series the configuration reads.
    pub fn required_series(&self) -> Vec<String> {
        let mut names: Vec<String> = vec![self.target.clone()];
        for n in self.lags.iter().map(|l| &l.source).chain(&self.exogenous) {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
        names
    }

    pub fn max_lag(&self) -> u32 {
        self.lags.iter().map(LagSpec::max_lag).max().unwrap_or(0)
    }

    pub fn column_names(&self) -> Vec<String> {
        self.column_kinds()
            .iter()
            .map(|k| match k {
                ColumnKind::Lag { source, hours } => format!("{source}_lag_{hours}"),
                ColumnKind::Exogenous { source } => source.clone(),
                ColumnKind::Calendar { flag, day_lag } => format!("{flag}_d{day_lag}"),
                ColumnKind::HourOfDay => "hour".into(),
                ColumnKind::DayOfWeek => "weekday".into(),
                ColumnKind::Fourier { period_hours, cosine } => {
                    format!("{}_{period_hours}", if *cosine { "cos" } else { "sin" })
                }
            })
            .collect()
    }

    /// Column provenance in design-matrix order (one entry per column).
    pub fn column_kinds(&self) -> Vec<ColumnKind> {
        let mut kinds = Vec::new();
        for l in &self.lags {
            for &h in &l.lags_hours {
                kinds.push(ColumnKind::Lag {
                    source: l.source.clone(),
                    hours: h,
                });
            }
        }
        for e in &self.exogenous {
            kinds.push(ColumnKind::Exogenous { source: e.clone() });
        }
        for flag in CalendarFlags::NAMES {
            for &d in &self.calendar_day_lags {
                kinds.push(ColumnKind::Calendar {
                    flag: flag.to_string(),
                    day_lag: d,
                });
            }
        }
        kinds.push(ColumnKind::HourOfDay);
        kinds.push(ColumnKind::DayOfWeek);
        for &p in &self.seasons.periods_hours {
            kinds.push(ColumnKind::Fourier {
                period_hours: p,
                cosine: false,
            });
            kinds.push(ColumnKind::Fourier {
                period_hours: p,
                cosine: true,
            });
        }
        kinds
    }
}

/// Aligned, log-transformed inputs on one hourly grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub start: Hour,
    pub len: usize,
    /// Log-space values keyed by the original series name.
    pub series: BTreeMap<String, Vec<Option<f64>>>,
    /// Original-unit target values.
    pub target_raw: Vec<Option<f64>>,
    pub calendar: CalendarTable,
}

impl PreparedData {
    pub fn end(&self) -> Hour {
        self.start.offset(self.len as i64 - 1)
    }

    #[inline]
    fn index(&self, t: Hour) -> Option<usize> {
        let i = t.0 - self.start.0;
        (i >= 0 && (i as usize) < self.len).then_some(i as usize)
    }

    /// Log-space value of `series` at `t`.
    pub fn value(&self, series: &str, t: Hour) -> Option<f64> {
        let i = self.index(t)?;
        self.series.get(series)?[i]
    }

    pub fn raw_target(&self, t: Hour) -> Option<f64> {
        self.target_raw[self.index(t)?]
    }
}

/// Align every series the configuration needs over `span` (defaults to the
/// target's own span) and log-transform them.
pub fn prepare(
    cfg: &FeatureConfig,
    series: &[HourlySeries],
    calendar: CalendarTable,
    span: Option<(Hour, Hour)>,
) -> Result<PreparedData> {
    cfg.validate()?;
    let find = |name: &str| {
        series
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::UnknownSeries(name.into()))
    };
    let target = find(&cfg.target)?;
    let span = match span {
        Some(s) => s,
        None => match (target.timestamps.first(), target.timestamps.last()) {
            (Some(a), Some(b)) => (*a, *b),
            _ => return Err(Error::EmptySample),
        },
    };
    let needed: Vec<HourlySeries> = cfg
        .required_series()
        .iter()
        .map(|n| find(n).cloned())
        .collect::<Result<_>>()?;
    let aligned = align(&needed, span)?;
    let mut out = BTreeMap::new();
    let mut target_raw = Vec::new();
    for s in &aligned {
        if s.name == cfg.target {
            target_raw = s.values.clone();
        }
        let logged = log_transform(s, cfg.epsilon)?;
        out.insert(s.name.clone(), logged.values);
    }
    Ok(PreparedData {
        start: span.0,
        len: (span.1 .0 - span.0 .0 + 1) as usize,
        series: out,
        target_raw,
        calendar,
    })
}

/// Design matrix and log-space target for one (horizon, anchor hour) task.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    pub column_names: Vec<String>,
    pub column_kinds: Vec<ColumnKind>,
    pub x: Matrix,
    /// `ln(target + epsilon)` at issue time + horizon.
    pub y: Vec<f64>,
    /// Target in original units.
    pub y_raw: Vec<f64>,
    pub issue_times: Vec<Hour>,
    pub horizon_hours: u32,
}

impl FeatureFrame {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Frame restricted to the given sample positions, in order.
    pub fn subset(&self, idx: &[usize]) -> FeatureFrame {
        FeatureFrame {
            column_names: self.column_names.clone(),
            column_kinds: self.column_kinds.clone(),
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            y_raw: idx.iter().map(|&i| self.y_raw[i]).collect(),
            issue_times: idx.iter().map(|&i| self.issue_times[i]).collect(),
            horizon_hours: self.horizon_hours,
        }
    }

    /// Same samples with a different target vector.
    pub fn with_target(&self, y: Vec<f64>) -> Result<FeatureFrame> {
        if y.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: y.len(),
            });
        }
        let mut f = self.clone();
        f.y = y;
        Ok(f)
    }

    pub fn from_parts(column_names: Vec<String>, x: Matrix, y: Vec<f64>) -> Result<FeatureFrame> {
        if x.rows() != y.len() || x.cols() != column_names.len() {
            return Err(Error::Dimension {
                expected: x.rows(),
                got: y.len(),
            });
        }
        let n = y.len();
        Ok(FeatureFrame {
            column_kinds: vec![ColumnKind::HourOfDay; column_names.len()],
            column_names,
            x,
            y_raw: y.iter().map(|v| inverse_log(*v, 1.0)).collect(),
            y,
            issue_times: (0..n as i64).map(|i| Hour(i * HOURS_PER_DAY)).collect(),
            horizon_hours: 1,
        })
    }
}

fn check_horizon(horizon: u32) -> Result<()> {
    if !(1..=60).contains(&horizon) {
        return Err(Error::Config(format!("horizon {horizon} not in 1..=60")));
    }
    Ok(())
}

/// Feature row for a single issue time; `None` when any input is missing.
pub fn feature_row(cfg: &FeatureConfig, data: &PreparedData, issue: Hour, horizon: u32) -> Result<Option<Vec<f64>>> {
    check_horizon(horizon)?;
    let target_time = issue.offset(i64::from(horizon));
    let mut row = Vec::new();
    for l in &cfg.lags {
        if !data.series.contains_key(&l.source) {
            return Err(Error::UnknownSeries(l.source.clone()));
        }
        for &h in &l.lags_hours {
            match data.value(&l.source, issue.offset(-i64::from(h))) {
                Some(v) => row.push(v),
                None => return Ok(None),
            }
        }
    }
    for e in &cfg.exogenous {
        if !data.series.contains_key(e) {
            return Err(Error::UnknownSeries(e.clone()));
        }
        match data.value(e, target_time) {
            Some(v) => row.push(v),
            None => return Ok(None),
        }
    }
    let at = [target_time];
    for c in calendar_columns(&at, &data.calendar, &cfg.calendar_day_lags)? {
        row.push(c.values[0].unwrap_or(0.0));
    }
    for c in fourier_columns(&at, &cfg.seasons) {
        row.push(c.values[0].unwrap_or(0.0));
    }
    Ok(Some(row))
}

/// One sample per day issued at `anchor_hour`, keeping only samples whose
/// target and every feature are present.
pub fn build_frame(cfg: &FeatureConfig, data: &PreparedData, horizon: u32, anchor_hour: u32) -> Result<FeatureFrame> {
    check_horizon(horizon)?;
    if anchor_hour > 23 {
        return Err(Error::Config(format!("anchor_hour {anchor_hour} not in 0..=23")));
    }
    let target = data
        .series
        .get(&cfg.target)
        .ok_or_else(|| Error::UnknownSeries(cfg.target.clone()))?;

    let mut lag_cols: Vec<Vec<Option<f64>>> = Vec::new();
    for l in &cfg.lags {
        let values = data
            .series
            .get(&l.source)
            .ok_or_else(|| Error::UnknownSeries(l.source.clone()))?;
        let s = HourlySeries::contiguous(l.source.clone(), data.start, values.clone());
        lag_cols.extend(lag_columns(&s, l).into_iter().map(|c| c.values));
    }
    let exo_cols: Vec<&Vec<Option<f64>>> = cfg
        .exogenous
        .iter()
        .map(|e| data.series.get(e).ok_or_else(|| Error::UnknownSeries(e.clone())))
        .collect::<Result<_>>()?;

    // candidate samples: lags and target observed
    let h = horizon as usize;
    let mut issues = Vec::new();
    let mut targets_at = Vec::new();
    let first_day = data.start.date();
    let last_day = data.end().date();
    let mut day = first_day;
    while day <= last_day {
        let issue = Hour::from_date_hour(day, anchor_hour);
        day = day.offset(1);
        let Some(i) = data.index(issue) else { continue };
        let j = i + h;
        if j >= data.len || target[j].is_none() {
            continue;
        }
        if lag_cols.iter().any(|c| c[i].is_none()) || exo_cols.iter().any(|c| c[j].is_none()) {
            continue;
        }
        issues.push((issue, i, j));
        targets_at.push(issue.offset(horizon as i64));
    }

    let cal = calendar_columns(&targets_at, &data.calendar, &cfg.calendar_day_lags)?;
    let four = fourier_columns(&targets_at, &cfg.seasons);

    let column_kinds = cfg.column_kinds();
    let column_names = cfg.column_names();
    let ncol = column_names.len();
    let mut xs = Vec::with_capacity(issues.len() * ncol);
    let mut y = Vec::with_capacity(issues.len());
    let mut y_raw = Vec::with_capacity(issues.len());
    let mut issue_times = Vec::with_capacity(issues.len());
    for (k, &(issue, i, j)) in issues.iter().enumerate() {
        let Some(raw) = data.target_raw[j] else { continue };
        xs.extend(lag_cols.iter().map(|c| c[i].unwrap_or_default()));
        xs.extend(exo_cols.iter().map(|c| c[j].unwrap_or_default()));
        xs.extend(cal.iter().map(|c| c.values[k].unwrap_or_default()));
        xs.extend(four.iter().map(|c| c.values[k].unwrap_or_default()));
        y.push(target[j].unwrap_or_default());
        y_raw.push(raw);
        issue_times.push(issue);
    }
    if y.len() < cfg.min_samples {
        return Err(Error::TooFewSamples {
            found: y.len(),
            required: cfg.min_samples,
        });
    }
    let x = Matrix::new(y.len(), ncol, xs)?;
    Ok(FeatureFrame {
        column_names,
        column_kinds,
        x,
        y,
        y_raw,
        issue_times,
        horizon_hours: horizon,
    })
}
