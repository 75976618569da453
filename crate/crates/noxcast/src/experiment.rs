//! Cross-validated evaluation of every (model, horizon) cell.
//!
//! Folds of all cells run as independent rayon jobs. Results are merged in
//! configuration order, so the report does not depend on scheduling.
//! Wall-clock times go to a separate [`Timings`] record to keep the report
//! reproducible byte for byte.

use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use noxcast_core::eval::{self, CellReport, CvPlan, FoldOutcome, PeakSettings, QuadeResult, ScoreMatrix};
use noxcast_core::features::{build_frame, FeatureConfig, FeatureFrame, PreparedData};
use noxcast_core::models::{ModelSpec, QuantileGrid};
use noxcast_core::seed::cell_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io;

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Units of the report's numeric fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Units {
    pub crps: String,
    pub crps_raw: String,
    pub point: String,
    pub reliability: String,
    pub sharpness: String,
}

impl Units {
    fn new(epsilon: f64) -> Self {
        Self {
            crps: format!("ln(µg/m³ + {epsilon})"),
            crps_raw: "µg/m³".into(),
            point: "µg/m³ (median forecast)".into(),
            reliability: "fraction of observations at or below the forecast quantile".into(),
            sharpness: format!("ln(µg/m³ + {epsilon})"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Settings {
    pub seed: u64,
    pub horizons: Vec<u32>,
    pub models: Vec<ModelSpec>,
    pub quantiles: QuantileGrid,
    pub folds: usize,
    pub gap_hours: i64,
    pub anchor_hour: u32,
    pub peaks: PeakSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub model: String,
    pub horizon: u32,
    pub fold: Option<usize>,
    pub message: String,
}

/// Sample counts per fold for one horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldLayout {
    pub horizon: u32,
    pub samples: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub units: Units,
    pub settings: Settings,
    pub folds: Vec<FoldLayout>,
    pub cells: Vec<CellReport>,
    pub failures: Vec<CellFailure>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellTiming {
    pub model: String,
    pub horizon: u32,
    pub fold: usize,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub cells: Vec<CellTiming>,
}

impl Timings {
    /// Total training time of one (model, horizon) cell across folds.
    pub fn train_seconds(&self, model: &str, horizon: u32) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.model == model && c.horizon == horizon)
            .map(|c| c.train_seconds)
            .sum()
    }
}

/// Everything an experiment needs besides the data.
#[derive(Debug, Clone)]
pub struct Setup {
    pub features: FeatureConfig,
    pub models: Vec<ModelSpec>,
    pub horizons: Vec<u32>,
    pub folds: usize,
    pub gap_hours: i64,
    pub grid: QuantileGrid,
    pub seed: u64,
    pub peaks: PeakSettings,
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
}

impl Setup {
    pub fn from_config(cfg: &RunConfig, jobs: Option<usize>) -> Self {
        Self {
            features: cfg.features.clone(),
            models: cfg.models.clone(),
            horizons: cfg.horizons.clone(),
            folds: cfg.cv.folds,
            gap_hours: cfg.cv.gap_hours,
            grid: cfg.quantiles.clone(),
            seed: cfg.seed,
            peaks: cfg.peak_settings(),
            jobs,
        }
    }
}

/// Per-fold outcomes kept for downstream tools such as the peak report.
#[derive(Debug, Clone)]
pub struct CellOutcomes {
    pub model: String,
    pub horizon: u32,
    pub folds: Vec<FoldOutcome>,
}

pub struct Experiment {
    pub report: ExperimentReport,
    pub timings: Timings,
    pub outcomes: Vec<CellOutcomes>,
}

impl Experiment {
    /// Horizons by models of fold-averaged log CRPS, for models that
    /// completed every horizon.
    pub fn score_matrix(&self) -> Result<ScoreMatrix> {
        let s = &self.report.settings;
        let complete: Vec<&str> = s
            .models
            .iter()
            .map(ModelSpec::label)
            .filter(|m| s.horizons.iter().all(|&h| self.cell(m, h).is_some()))
            .collect();
        let values = s
            .horizons
            .iter()
            .map(|&h| complete.iter().map(|m| self.cell(m, h).map_or(f64::NAN, |c| c.crps_mean)).collect())
            .collect();
        ScoreMatrix::new(
            s.horizons.iter().map(u32::to_string).collect(),
            complete.iter().map(|m| m.to_string()).collect(),
            values,
        )
        .map_err(CliError::from)
    }

    pub fn cell(&self, model: &str, horizon: u32) -> Option<&CellReport> {
        self.report.cells.iter().find(|c| c.model == model && c.horizon == horizon)
    }
}

struct Job<'a> {
    model: usize,
    horizon: usize,
    fold: usize,
    frame: &'a FeatureFrame,
    plan: &'a CvPlan,
}

type JobResult = std::result::Result<(FoldOutcome, f64, f64), String>;

fn run_job(setup: &Setup, job: &Job<'_>) -> JobResult {
    let spec = &setup.models[job.model];
    let horizon = setup.horizons[job.horizon];
    let fold = &job.plan.folds[job.fold];
    let seed = cell_seed(setup.seed, spec.label(), horizon, job.fold);
    let train = job.frame.subset(&fold.train);
    let test = job.frame.subset(&fold.test);
    let t0 = Instant::now();
    let model = noxcast_core::models::fit(spec, &train, &setup.grid, seed).map_err(|e| e.to_string())?;
    let train_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let outcome = eval::score_model(&model, &test, setup.peaks).map_err(|e| e.to_string())?;
    if outcome.crps_log.iter().any(|c| !c.is_finite()) {
        return Err("non-finite CRPS".into());
    }
    Ok((outcome, train_seconds, t1.elapsed().as_secs_f64()))
}

/// Build frames and CV plans for each horizon.
pub fn frames(setup: &Setup, data: &PreparedData) -> Result<Vec<(FeatureFrame, CvPlan)>> {
    setup
        .horizons
        .iter()
        .map(|&h| {
            let frame = build_frame(&setup.features, data, h, setup.features.anchor_hour)?;
            let plan = eval::make_cv_plan(&frame.issue_times, setup.folds, setup.gap_hours)?;
            Ok((frame, plan))
        })
        .collect()
}

pub fn run_experiment(setup: &Setup, data: &PreparedData) -> Result<Experiment> {
    let started = Instant::now();
    let prepared = frames(setup, data)?;
    let mut jobs = Vec::new();
    for m in 0..setup.models.len() {
        for (h, (frame, plan)) in prepared.iter().enumerate() {
            for f in 0..plan.folds.len() {
                jobs.push(Job {
                    model: m,
                    horizon: h,
                    fold: f,
                    frame,
                    plan,
                });
            }
        }
    }
    info!("running {} fold jobs", jobs.len());
    let run_all = || -> Vec<JobResult> { jobs.par_iter().map(|j| run_job(setup, j)).collect() };
    let results = match setup.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Other(e.into()))?
            .install(run_all),
        None => run_all(),
    };

    let mut cells = Vec::new();
    let mut failures = Vec::new();
    let mut timings = Vec::new();
    let mut outcomes = Vec::new();
    let mut k = 0;
    for spec in &setup.models {
        for (hi, (_, plan)) in prepared.iter().enumerate() {
            let horizon = setup.horizons[hi];
            let label = spec.label().to_string();
            let mut folds = Vec::with_capacity(plan.folds.len());
            let mut failed = false;
            for f in 0..plan.folds.len() {
                match &results[k] {
                    Ok((o, tr, pr)) => {
                        folds.push(o.clone());
                        timings.push(CellTiming {
                            model: label.clone(),
                            horizon,
                            fold: f,
                            train_seconds: *tr,
                            predict_seconds: *pr,
                        });
                    }
                    Err(msg) => {
                        warn!("{label} h={horizon} fold {f}: {msg}");
                        failures.push(CellFailure {
                            model: label.clone(),
                            horizon,
                            fold: Some(f),
                            message: msg.clone(),
                        });
                        failed = true;
                    }
                }
                k += 1;
            }
            if failed {
                continue;
            }
            match eval::aggregate(&label, horizon, &folds, setup.peaks.p_alarm) {
                Ok(c) => cells.push(c),
                Err(e) => failures.push(CellFailure {
                    model: label.clone(),
                    horizon,
                    fold: None,
                    message: e.to_string(),
                }),
            }
            outcomes.push(CellOutcomes {
                model: label,
                horizon,
                folds,
            });
        }
    }
    let layout = setup
        .horizons
        .iter()
        .zip(&prepared)
        .map(|(&h, (frame, plan))| FoldLayout {
            horizon: h,
            samples: frame.len(),
            train: plan.folds.iter().map(|f| f.train.len()).collect(),
            test: plan.folds.iter().map(|f| f.test.len()).collect(),
        })
        .collect();
    Ok(Experiment {
        report: ExperimentReport {
            format_version: REPORT_FORMAT_VERSION,
            units: Units::new(setup.features.epsilon),
            settings: Settings {
                seed: setup.seed,
                horizons: setup.horizons.clone(),
                models: setup.models.clone(),
                quantiles: setup.grid.clone(),
                folds: setup.folds,
                gap_hours: setup.gap_hours,
                anchor_hour: setup.features.anchor_hour,
                peaks: setup.peaks,
            },
            folds: layout,
            cells,
            failures,
        },
        timings: Timings {
            total_seconds: started.elapsed().as_secs_f64(),
            cells: timings,
        },
        outcomes,
    })
}

/// Rank-test output, or the reason it could not run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuadeOutput {
    Ok(QuadeResult),
    Skipped { skipped: String },
}

pub fn quade_output(exp: &Experiment, alpha: f64) -> QuadeOutput {
    match exp.score_matrix().and_then(|m| eval::quade(&m, alpha).map_err(CliError::from)) {
        Ok(r) => QuadeOutput::Ok(r),
        Err(e) => QuadeOutput::Skipped { skipped: e.to_string() },
    }
}

/// Write `experiment.json`, `scores.csv`, `quade.json` and `timings.json`.
pub fn write_outputs(exp: &Experiment, dir: &Path, alpha: f64) -> Result<()> {
    io::write_json(&dir.join("experiment.json"), &exp.report)?;
    let matrix = exp.score_matrix()?;
    io::write_scores(
        &dir.join("scores.csv"),
        &matrix,
        &format!("mean CRPS in {} (rows horizons, columns models)", exp.report.units.crps),
    )?;
    io::write_json(&dir.join("quade.json"), &quade_output(exp, alpha))?;
    io::write_json(&dir.join("timings.json"), &exp.timings)?;
    Ok(())
}
