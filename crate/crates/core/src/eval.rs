//! Blocked cross-validation, per-fold scoring, aggregation and the Quade
//! rank test across horizon datasets.
//!
//! Parallel orchestration lives in the `noxcast` crate; everything here is a
//! pure function of its inputs.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dist::{self, NormalDist, QuantileSet};
use crate::error::{Error, Result};
use crate::features::FeatureFrame;
use crate::math::{f_distribution_sf, total_cmp};
use crate::metrics::{self, AlarmScores, IntervalWidth, PointMetrics, ReliabilityTable};
use crate::models::{self, FittedModel, ModelSpec, QuantileGrid};
use crate::time::{Date, Hour};

/// Default purge margin in hours.
pub const DEFAULT_GAP_HOURS: i64 = 264;

/// One test block and the training samples that survive purging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvFold {
    pub first_day: Date,
    pub last_day: Date,
    /// Earliest and latest test issue times.
    pub test_start: Hour,
    pub test_end: Hour,
    pub test: Vec<usize>,
    pub train: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPlan {
    pub gap_hours: i64,
    pub folds: Vec<CvFold>,
}

impl CvPlan {
    /// True if `t` may train a model tested on `fold`.
    pub fn admissible(fold: &CvFold, t: Hour, gap_hours: i64) -> bool {
        t.0 < fold.test_start.0 - gap_hours || t.0 > fold.test_end.0 + gap_hours
    }
}

/// Split samples into `folds` contiguous blocks of issue days. A sample
/// trains a fold only if its issue time is more than `gap_hours` away from
/// the test block.
pub fn make_cv_plan(issue_times: &[Hour], folds: usize, gap_hours: i64) -> Result<CvPlan> {
    if folds < 2 {
        return Err(Error::CrossValidation(format!("need at least 2 folds, got {folds}")));
    }
    if gap_hours < 0 {
        return Err(Error::CrossValidation(format!("gap {gap_hours} h is negative")));
    }
    let days: Vec<Date> = issue_times.iter().map(|t| t.date()).collect::<BTreeSet<_>>().into_iter().collect();
    if days.len() < folds {
        return Err(Error::CrossValidation(format!(
            "{} issue days cannot fill {folds} folds",
            days.len()
        )));
    }
    let base = days.len() / folds;
    let extra = days.len() % folds;
    let mut out = Vec::with_capacity(folds);
    let mut pos = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        let (first_day, last_day) = (days[pos], days[pos + size - 1]);
        pos += size;
        let test: Vec<usize> = (0..issue_times.len())
            .filter(|&i| {
                let d = issue_times[i].date();
                d >= first_day && d <= last_day
            })
            .collect();
        let test_start = test.iter().map(|&i| issue_times[i]).min().expect("block has a day");
        let test_end = test.iter().map(|&i| issue_times[i]).max().expect("block has a day");
        let mut fold = CvFold {
            first_day,
            last_day,
            test_start,
            test_end,
            test,
            train: Vec::new(),
        };
        fold.train = (0..issue_times.len())
            .filter(|&i| CvPlan::admissible(&fold, issue_times[i], gap_hours))
            .collect();
        if fold.train.is_empty() {
            return Err(Error::CrossValidation(format!(
                "fold {f} ({first_day}..{last_day}) has no training samples after a {gap_hours} h purge"
            )));
        }
        out.push(fold);
    }
    Ok(CvPlan {
        gap_hours,
        folds: out,
    })
}

/// Per-sample results of scoring one fitted model on one test block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub issue_times: Vec<Hour>,
    /// Repaired quantiles in log space.
    pub quantiles: Vec<QuantileSet>,
    pub normals: Vec<NormalDist>,
    pub crps_log: Vec<f64>,
    pub crps_raw: Vec<f64>,
    /// Median forecast in original units.
    pub median_raw: Vec<f64>,
    pub obs_log: Vec<f64>,
    pub obs_raw: Vec<f64>,
    pub p_exceed: Vec<f64>,
    pub labels: Vec<bool>,
}

impl FoldOutcome {
    pub fn len(&self) -> usize {
        self.crps_log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crps_log.is_empty()
    }

    pub fn mean_crps_log(&self) -> f64 {
        mean(&self.crps_log)
    }
}

/// Peak-alarm settings in original units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakSettings {
    pub threshold: f64,
    pub epsilon: f64,
    pub p_alarm: f64,
}

impl Default for PeakSettings {
    fn default() -> Self {
        Self {
            threshold: 180.0,
            epsilon: 1.0,
            p_alarm: 0.5,
        }
    }
}

/// Score already-made quantile forecasts (log space) against a test frame.
pub fn score_forecasts(
    forecasts: Vec<QuantileSet>,
    direct: Option<Vec<NormalDist>>,
    test: &FeatureFrame,
    peaks: PeakSettings,
) -> Result<FoldOutcome> {
    if forecasts.len() != test.len() {
        return Err(Error::Dimension {
            expected: test.len(),
            got: forecasts.len(),
        });
    }
    let n = test.len();
    let mut out = FoldOutcome {
        issue_times: test.issue_times.clone(),
        quantiles: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        crps_log: Vec::with_capacity(n),
        crps_raw: Vec::with_capacity(n),
        median_raw: Vec::with_capacity(n),
        obs_log: test.y.clone(),
        obs_raw: test.y_raw.clone(),
        p_exceed: Vec::with_capacity(n),
        labels: test.y_raw.iter().map(|&v| v > peaks.threshold).collect(),
    };
    for (i, qs) in forecasts.into_iter().enumerate() {
        let qs = dist::rearrange(&qs);
        let d = match &direct {
            Some(ds) => ds[i],
            None => dist::fit_normal(&qs)?,
        };
        let median = qs
            .value_at(0.5)
            .ok_or_else(|| Error::InvalidSample("forecast grid lacks the median".into()))?;
        out.crps_log.push(dist::crps_normal(&d, test.y[i]));
        out.crps_raw.push(dist::crps_shifted_lognormal(&d, test.y_raw[i], peaks.epsilon));
        out.median_raw.push(libm::exp(median) - peaks.epsilon);
        out.p_exceed.push(dist::exceedance(&d, peaks.threshold, peaks.epsilon));
        out.normals.push(d);
        out.quantiles.push(qs);
    }
    Ok(out)
}

/// Predict a test frame with a fitted model and score it.
pub fn score_model(model: &FittedModel, test: &FeatureFrame, peaks: PeakSettings) -> Result<FoldOutcome> {
    let preds = model.predict_frame(test)?;
    let direct: Option<Vec<NormalDist>> = preds.iter().map(|p| p.normal).collect();
    let qs = preds.into_iter().map(|p| p.quantiles).collect();
    score_forecasts(qs, direct, test, peaks)
}

/// Fit on the fold's training rows and score its test rows.
pub fn run_fold(
    spec: &ModelSpec,
    frame: &FeatureFrame,
    fold: &CvFold,
    grid: &QuantileGrid,
    seed: u64,
    peaks: PeakSettings,
) -> Result<(FittedModel, FoldOutcome)> {
    let train = frame.subset(&fold.train);
    let test = frame.subset(&fold.test);
    let model = models::fit(spec, &train, grid, seed)?;
    let outcome = score_model(&model, &test, peaks)?;
    Ok((model, outcome))
}

/// Aggregated metrics for one (model, horizon) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub model: String,
    pub horizon: u32,
    pub folds: usize,
    pub samples: usize,
    /// Mean over folds of the fold-mean CRPS (log units).
    pub crps_mean: f64,
    pub crps_std_folds: f64,
    pub crps_std_samples: f64,
    pub fold_crps: Vec<f64>,
    /// Same in original units (µg/m³).
    pub crps_raw_mean: f64,
    pub crps_raw_std_folds: f64,
    pub crps_raw_std_samples: f64,
    /// On the median forecast, original units.
    pub point: PointMetrics,
    pub reliability: ReliabilityTable,
    pub sharpness: Vec<IntervalWidth>,
    pub alarms: AlarmScores,
}

/// Central intervals reported by [`aggregate`] when present in the grid.
pub const SHARPNESS_PAIRS: [(f64, f64); 2] = [(0.05, 0.95), (0.25, 0.75)];

/// Pool fold outcomes of one cell, in fold order.
pub fn aggregate(model: &str, horizon: u32, folds: &[FoldOutcome], p_alarm: f64) -> Result<CellReport> {
    if folds.is_empty() || folds.iter().any(FoldOutcome::is_empty) {
        return Err(Error::EmptySample);
    }
    let fold_crps: Vec<f64> = folds.iter().map(FoldOutcome::mean_crps_log).collect();
    let fold_raw: Vec<f64> = folds.iter().map(|f| mean(&f.crps_raw)).collect();
    let cat = |g: fn(&FoldOutcome) -> &Vec<f64>| -> Vec<f64> { folds.iter().flat_map(|f| g(f).iter().copied()).collect() };
    let crps_log = cat(|f| &f.crps_log);
    let crps_raw = cat(|f| &f.crps_raw);
    let median = cat(|f| &f.median_raw);
    let obs_raw = cat(|f| &f.obs_raw);
    let obs_log = cat(|f| &f.obs_log);
    let p_exceed = cat(|f| &f.p_exceed);
    let labels: Vec<bool> = folds.iter().flat_map(|f| f.labels.iter().copied()).collect();
    let quantiles: Vec<QuantileSet> = folds.iter().flat_map(|f| f.quantiles.iter().cloned()).collect();
    let pairs: Vec<(f64, f64)> = SHARPNESS_PAIRS
        .iter()
        .copied()
        .filter(|&(a, b)| quantiles[0].value_at(a).is_some() && quantiles[0].value_at(b).is_some())
        .collect();
    Ok(CellReport {
        model: model.into(),
        horizon,
        folds: folds.len(),
        samples: crps_log.len(),
        crps_mean: mean(&fold_crps),
        crps_std_folds: std_dev(&fold_crps),
        crps_std_samples: std_dev(&crps_log),
        crps_raw_mean: mean(&fold_raw),
        crps_raw_std_folds: std_dev(&fold_raw),
        crps_raw_std_samples: std_dev(&crps_raw),
        fold_crps,
        point: metrics::point_metrics(&median, &obs_raw)?,
        reliability: metrics::reliability(&quantiles, &obs_log)?,
        sharpness: metrics::sharpness(&quantiles, &pairs)?,
        alarms: metrics::alarm_scores(&p_exceed, &labels, p_alarm)?,
    })
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub(crate) fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    libm::sqrt(v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64)
}

/// Datasets (rows) by algorithms (columns), lower is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub datasets: Vec<String>,
    pub algorithms: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(datasets: Vec<String>, algorithms: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != datasets.len() {
            return Err(Error::Dimension {
                expected: datasets.len(),
                got: values.len(),
            });
        }
        for (name, row) in datasets.iter().zip(&values) {
            if row.len() != algorithms.len() {
                return Err(Error::RankTest(format!(
                    "dataset {name} has {} scores for {} algorithms",
                    row.len(),
                    algorithms.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::RankTest(format!(
                    "dataset {name} has no finite score for {}",
                    algorithms[j]
                )));
            }
        }
        Ok(Self {
            datasets,
            algorithms,
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadeResult {
    pub algorithms: Vec<String>,
    pub statistic: f64,
    pub p_value: f64,
    pub df1: f64,
    pub df2: f64,
    pub alpha: f64,
    pub reject: bool,
    /// Weighted mean rank, k = best.
    pub avg_weighted_rank: Vec<f64>,
    /// Set when every dataset ranks all algorithms equally (A == B).
    pub degenerate: bool,
}

/// Ascending ranks starting at 1 with ties sharing their mean rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| total_cmp(v[a], v[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn quade(scores: &ScoreMatrix, alpha: f64) -> Result<QuadeResult> {
    let n = scores.values.len();
    let k = scores.algorithms.len();
    if n < 2 || k < 2 {
        return Err(Error::RankTest(format!("need at least 2 datasets and 2 algorithms, got {n} x {k}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(alpha));
    }
    let ranks: Vec<Vec<f64>> = scores.values.iter().map(|row| average_ranks(row)).collect();
    let ranges: Vec<f64> = scores
        .values
        .iter()
        .map(|row| {
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .collect();
    let q = average_ranks(&ranges);
    let centre = (k as f64 + 1.0) / 2.0;

    let mut a = 0.0;
    let mut col = vec![0.0; k];
    let mut weighted = vec![0.0; k];
    for i in 0..n {
        for j in 0..k {
            let s = q[i] * (ranks[i][j] - centre);
            a += s * s;
            col[j] += s;
            weighted[j] += q[i] * (k as f64 + 1.0 - ranks[i][j]);
        }
    }
    let b = col.iter().map(|s| s * s).sum::<f64>() / n as f64;
    let norm = (n * (n + 1)) as f64 / 2.0;
    let avg_weighted_rank = weighted.iter().map(|w| w / norm).collect();
    let df1 = (k - 1) as f64;
    let df2 = ((n - 1) * (k - 1)) as f64;

    let (statistic, p_value, degenerate) = if a - b <= 0.0 {
        (f64::INFINITY, 0.0, true)
    } else {
        let t = (n as f64 - 1.0) * b / (a - b);
        (t, f_distribution_sf(t, df1, df2), false)
    };
    Ok(QuadeResult {
        algorithms: scores.algorithms.clone(),
        statistic,
        p_value,
        df1,
        df2,
        alpha,
        reject: p_value < alpha,
        avg_weighted_rank,
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub spec: ModelSpec,
    pub crps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub best: ModelSpec,
    pub best_index: usize,
    pub trace: Vec<GridPoint>,
}

/// Fit every candidate on `train` and keep the lowest validation mean CRPS
/// (log units); ties keep the earlier candidate.
pub fn grid_search(
    candidates: &[ModelSpec],
    train: &FeatureFrame,
    valid: &FeatureFrame,
    grid: &QuantileGrid,
    seed: u64,
    peaks: PeakSettings,
) -> Result<GridSearch> {
    if candidates.is_empty() {
        return Err(Error::Hyperparameter("empty hyperparameter grid".into()));
    }
    if let (Some(last), Some(first)) = (train.issue_times.iter().max(), valid.issue_times.iter().min()) {
        if first <= last {
            return Err(Error::CrossValidation("validation samples must follow the training samples".into()));
        }
    }
    let mut trace = Vec::with_capacity(candidates.len());
    let mut best_index = 0;
    for (i, spec) in candidates.iter().enumerate() {
        let model = models::fit(spec, train, grid, seed)?;
        let crps = score_model(&model, valid, peaks)?.mean_crps_log();
        if crps < trace.get(best_index).map_or(f64::INFINITY, |p: &GridPoint| p.crps) {
            best_index = i;
        }
        trace.push(GridPoint { spec: *spec, crps });
    }
    Ok(GridSearch {
        best: candidates[best_index],
        best_index,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
        assert_eq!(average_ranks(&[2.0, 1.0, 2.0, 5.0]), vec![2.5, 1.0, 2.5, 4.0]);
        assert_eq!(average_ranks(&[7.0; 3]), vec![2.0; 3]);
    }

    #[test]
    fn hundred_days_give_twenty_day_blocks() {
        let times: Vec<Hour> = (0..100).map(|d| Hour::from_date_hour(Date(18_000 + d), 10)).collect();
        let plan = make_cv_plan(&times, 5, 0).unwrap();
        for f in &plan.folds {
            assert_eq!(f.test.len(), 20);
            assert_eq!(f.last_day.0 - f.first_day.0, 19);
        }
    }

    #[test]
    fn too_few_days_or_starved_training_fail() {
        let times: Vec<Hour> = (0..3).map(|d| Hour::from_date_hour(Date(18_000 + d), 10)).collect();
        assert!(make_cv_plan(&times, 5, 0).is_err());
        let times: Vec<Hour> = (0..10).map(|d| Hour::from_date_hour(Date(18_000 + d), 10)).collect();
        assert!(matches!(make_cv_plan(&times, 2, 264), Err(Error::CrossValidation(_))));
    }

    #[test]
    fn std_dev_examples() {
        assert_eq!(std_dev(&[1.0]), 0.0);
        assert!((std_dev(&[1.0, 2.0, 3.0, 4.0]) - 1.290_994_448_735_805_6).abs() < 1e-15);
    }
}
