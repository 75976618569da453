//! Point metrics on the median, calibration diagnostics and peak-alarm scores.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dist::QuantileSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub rmse: f64,
    pub mae: f64,
    /// mean(forecast - observed)
    pub bias: f64,
}

pub fn point_metrics(pred: &[f64], obs: &[f64]) -> Result<PointMetrics> {
    if pred.len() != obs.len() {
        return Err(Error::Dimension {
            expected: pred.len(),
            got: obs.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = pred.len() as f64;
    let (mut se, mut ae, mut e) = (0.0, 0.0, 0.0);
    for (p, o) in pred.iter().zip(obs) {
        let d = p - o;
        se += d * d;
        ae += libm::fabs(d);
        e += d;
    }
    Ok(PointMetrics {
        rmse: libm::sqrt(se / n),
        mae: ae / n,
        bias: e / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveragePoint {
    pub nominal: f64,
    pub observed: f64,
}

/// Nominal level against the fraction of observations at or below the
/// forecast quantile, one entry per grid level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityTable {
    pub points: Vec<CoveragePoint>,
    pub samples: usize,
}

pub fn reliability(forecasts: &[QuantileSet], obs: &[f64]) -> Result<ReliabilityTable> {
    if forecasts.len() != obs.len() {
        return Err(Error::Dimension {
            expected: forecasts.len(),
            got: obs.len(),
        });
    }
    let Some(first) = forecasts.first() else {
        return Err(Error::EmptySample);
    };
    let levels = &first.levels;
    let mut hits = vec![0usize; levels.len()];
    for (qs, &y) in forecasts.iter().zip(obs) {
        if qs.levels != *levels {
            return Err(Error::InvalidSample("forecasts do not share a quantile grid".into()));
        }
        for (h, &v) in hits.iter_mut().zip(&qs.values) {
            if y <= v {
                *h += 1;
            }
        }
    }
    let n = obs.len() as f64;
    Ok(ReliabilityTable {
        points: levels
            .iter()
            .zip(hits)
            .map(|(t, h)| CoveragePoint {
                nominal: t.get(),
                observed: h as f64 / n,
            })
            .collect(),
        samples: obs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalWidth {
    pub lower: f64,
    pub upper: f64,
    pub mean_width: f64,
}

/// Mean central-interval width for each `(lower, upper)` level pair.
pub fn sharpness(forecasts: &[QuantileSet], pairs: &[(f64, f64)]) -> Result<Vec<IntervalWidth>> {
    if forecasts.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = forecasts.len() as f64;
    pairs
        .iter()
        .map(|&(lo, hi)| {
            let mut total = 0.0;
            for qs in forecasts {
                let (Some(a), Some(b)) = (qs.value_at(lo), qs.value_at(hi)) else {
                    return Err(Error::InvalidSample(alloc::format!(
                        "levels ({lo}, {hi}) not in forecast grid"
                    )));
                };
                total += b - a;
            }
            Ok(IntervalWidth {
                lower: lo,
                upper: hi,
                mean_width: total / n,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmScores {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    /// Missing when every label is the same.
    pub auc: Option<f64>,
    /// (false positive rate, true positive rate), from (0, 0) to (1, 1).
    pub roc: Vec<(f64, f64)>,
}

/// Alarm when `p > p_alarm`; ROC sweeps every distinct probability.
pub fn alarm_scores(p_exceed: &[f64], labels: &[bool], p_alarm: f64) -> Result<AlarmScores> {
    if p_exceed.len() != labels.len() {
        return Err(Error::Dimension {
            expected: p_exceed.len(),
            got: labels.len(),
        });
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &label) in p_exceed.iter().zip(labels) {
        match (p > p_alarm, label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let positives = tp + fn_;
    let negatives = fp + tn;
    if positives == 0 || negatives == 0 {
        return Ok(AlarmScores {
            tp,
            fp,
            fn_,
            tn,
            auc: None,
            roc: Vec::new(),
        });
    }

    let mut order: Vec<usize> = (0..p_exceed.len()).collect();
    order.sort_by(|&a, &b| p_exceed[b].total_cmp(&p_exceed[a]));
    let mut roc = vec![(0.0, 0.0)];
    let (mut cum_tp, mut cum_fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let v = p_exceed[order[i]];
        while i < order.len() && p_exceed[order[i]] == v {
            if labels[order[i]] {
                cum_tp += 1;
            } else {
                cum_fp += 1;
            }
            i += 1;
        }
        roc.push((
            cum_fp as f64 / negatives as f64,
            cum_tp as f64 / positives as f64,
        ));
    }
    let auc = roc
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5)
        .sum();
    Ok(AlarmScores {
        tp,
        fp,
        fn_,
        tn,
        auc: Some(auc),
        roc,
    })
}
