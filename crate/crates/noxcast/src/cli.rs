//! Command line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use noxcast_core::dist::{self, rearrange};
use noxcast_core::eval;
use noxcast_core::features::{build_frame, feature_row, inverse_log, prepare, PreparedData};
use noxcast_core::metrics::{alarm_scores, AlarmScores};
use noxcast_core::models::{self, FittedModel};
use serde::Serialize;

use crate::config::{self, RunConfig};
use crate::error::{CliError, ExitCode, Result};
use crate::experiment::{self, Setup};
use crate::io;
use crate::synth::{SynthConfig, Synthetic};

#[derive(Debug, Parser)]
#[command(name = "noxcast", version, about = "Probabilistic multi-horizon NO2 forecasting")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic series, a calendar and a matching config.
    Synth {
        #[arg(long, default_value_t = 365)]
        days: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "data")]
        out: PathBuf,
        /// Horizons written into the generated config.
        #[arg(long, value_delimiter = ',', default_value = "1,6,24")]
        horizons: Vec<u32>,
        /// Generator parameters (TOML); `days` and `seed` flags win.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Dump the design matrix of one horizon.
    Features {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        horizon: u32,
    },
    /// Fit one model on every sample of a horizon and save it.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: String,
        #[arg(long)]
        horizon: u32,
    },
    /// Forecast from a saved model for one issue time.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Path of a model written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Issue time, e.g. 2017-06-01T10:00:00Z.
        #[arg(long)]
        at: String,
    },
    /// Cross-validate every configured model and horizon.
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
    /// Rank test over a score matrix.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Score matrix; defaults to `scores.csv` in the output directory.
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validated exceedance alarms for one model.
    Peaks {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "QGB")]
        model: String,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long = "p-alarm")]
        p_alarm: Option<f64>,
    },
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::Ok,
                _ => ExitCode::Config,
            };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(cli) {
        Ok(()) => ExitCode::Ok,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let cfg = RunConfig::load(&common.config)?;
    let out = common.out.clone().unwrap_or_else(|| cfg.output.clone());
    Ok((cfg, out))
}

pub fn load_data(cfg: &RunConfig) -> Result<PreparedData> {
    let series = cfg
        .data
        .series
        .iter()
        .map(|p| io::read_series(p))
        .collect::<Result<Vec<_>>>()?;
    let calendar = io::read_calendar(&cfg.data.calendar)?;
    Ok(prepare(&cfg.features, &series, calendar, None)?)
}

fn check_horizon(h: u32) -> Result<()> {
    if (1..=60).contains(&h) {
        Ok(())
    } else {
        Err(CliError::Config(format!("--horizon {h} not in 1..=60")))
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            days,
            seed,
            out,
            horizons,
            params,
        } => synth(days, seed, &out, &horizons, params.as_deref()),
        Command::Features { common, horizon } => {
            check_horizon(horizon)?;
            let (cfg, out) = load(&common)?;
            let data = load_data(&cfg)?;
            let frame = build_frame(&cfg.features, &data, horizon, cfg.features.anchor_hour)?;
            let path = out.join(format!("features_h{horizon}.csv"));
            io::write_frame(&path, &frame, cfg.features.epsilon)?;
            println!("{} samples x {} features -> {}", frame.len(), frame.x.cols(), path.display());
            Ok(())
        }
        Command::Train { common, model, horizon } => {
            check_horizon(horizon)?;
            let (cfg, out) = load(&common)?;
            let spec = cfg.model(&model)?;
            let data = load_data(&cfg)?;
            let frame = build_frame(&cfg.features, &data, horizon, cfg.features.anchor_hour)?;
            let seed = noxcast_core::seed::cell_seed(cfg.seed, spec.label(), horizon, usize::MAX);
            let t0 = std::time::Instant::now();
            let mut fitted = models::fit(&spec, &frame, &cfg.quantiles, seed)?;
            fitted.train_seconds = t0.elapsed().as_secs_f64();
            let path = out.join(format!("model_{}_h{horizon}.json", spec.label()));
            io::write_json(&path, &fitted)?;
            println!(
                "{} h={horizon}: {} samples, {:.2}s -> {}",
                spec.label(),
                frame.len(),
                fitted.train_seconds,
                path.display()
            );
            Ok(())
        }
        Command::Predict { common, model, at } => {
            let (cfg, out) = load(&common)?;
            let fitted: FittedModel = io::read_json(&model)?;
            let issue = io::parse_hour(&at).map_err(CliError::Config)?;
            let data = load_data(&cfg)?;
            predict(&cfg, &out, &fitted, issue, &data)
        }
        Command::Evaluate { common } => {
            let (cfg, out) = load(&common)?;
            let data = load_data(&cfg)?;
            let setup = Setup::from_config(&cfg, cli.jobs);
            let exp = experiment::run_experiment(&setup, &data)?;
            experiment::write_outputs(&exp, &out, cfg.alpha)?;
            print_summary(&exp);
            println!("wrote experiment.json, scores.csv, quade.json, timings.json to {}", out.display());
            Ok(())
        }
        Command::Compare {
            config,
            scores,
            alpha,
            out,
        } => {
            let cfg = config.as_deref().map(RunConfig::load).transpose()?;
            let out = out
                .or_else(|| cfg.as_ref().map(|c| c.output.clone()))
                .unwrap_or_else(|| PathBuf::from("."));
            let scores = scores.unwrap_or_else(|| out.join("scores.csv"));
            let alpha = alpha.or(cfg.as_ref().map(|c| c.alpha)).unwrap_or(0.05);
            let matrix = io::read_scores(&scores)?;
            let r = eval::quade(&matrix, alpha)?;
            io::write_json(&out.join("quade.json"), &r)?;
            let mut order: Vec<usize> = (0..r.algorithms.len()).collect();
            order.sort_by(|&a, &b| r.avg_weighted_rank[b].total_cmp(&r.avg_weighted_rank[a]));
            println!("Quade T = {:.4}, p = {:.4e} (df {}, {})", r.statistic, r.p_value, r.df1, r.df2);
            for i in order {
                println!("  {:<6} {:.3}", r.algorithms[i], r.avg_weighted_rank[i]);
            }
            Ok(())
        }
        Command::Peaks {
            common,
            model,
            threshold,
            p_alarm,
        } => {
            let (mut cfg, out) = load(&common)?;
            if let Some(t) = threshold {
                cfg.peaks.threshold = t;
            }
            if let Some(p) = p_alarm {
                cfg.peaks.p_alarm = p;
            }
            cfg.validate_settings()?;
            let spec = cfg.model(&model)?;
            cfg.models = vec![spec];
            let data = load_data(&cfg)?;
            peaks(&cfg, &out, cli.jobs, &data)
        }
    }
}

fn synth(days: usize, seed: u64, out: &Path, horizons: &[u32], params: Option<&Path>) -> Result<()> {
    let mut sc = match params {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str::<SynthConfig>(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => SynthConfig::default(),
    };
    sc.days = days;
    sc.seed = seed;
    for (i, &h) in horizons.iter().enumerate() {
        if !(1..=60).contains(&h) {
            return Err(CliError::Config(format!("--horizons[{i}] = {h} not in 1..=60")));
        }
    }
    let s = Synthetic::generate(&sc)?;
    for series in s.series() {
        io::write_series(&out.join(format!("{}.csv", series.name)), &series)?;
    }
    io::write_calendar(&out.join("calendar.csv"), &s.calendar)?;
    let cfg_path = out.join("noxcast.toml");
    std::fs::write(&cfg_path, config::synth_run_config(horizons, seed))
        .map_err(|e| CliError::io(format!("cannot write {}", cfg_path.display()), e))?;
    println!("{days} days (seed {seed}) -> {}", out.display());
    Ok(())
}

/// Column label for a quantile level, e.g. `q05`.
pub fn quantile_label(tau: f64) -> String {
    let pct = tau * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("q{:02}", pct.round() as u32)
    } else {
        format!("q{pct}").replace('.', "_")
    }
}

fn threshold_label(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("{}", t as i64)
    } else {
        t.to_string().replace('.', "_")
    }
}

fn predict(cfg: &RunConfig, out: &Path, fitted: &FittedModel, issue: noxcast_core::time::Hour, data: &PreparedData) -> Result<()> {
    if fitted.format_version != models::MODEL_FORMAT_VERSION {
        return Err(CliError::Data(format!("unsupported model format {}", fitted.format_version)));
    }
    let expected = cfg.features.column_names();
    if expected != fitted.column_names {
        return Err(CliError::Config("model columns differ from the configured features".into()));
    }
    let h = fitted.horizon_hours;
    let row = feature_row(&cfg.features, data, issue, h)?
        .ok_or_else(|| CliError::Data(format!("inputs for issue time {issue} are incomplete")))?;
    let pred = fitted.predict(&row)?;
    let qs = rearrange(&pred.quantiles);
    let d = match pred.normal {
        Some(d) => d,
        None => dist::fit_normal(&qs)?,
    };
    let eps = cfg.features.epsilon;
    let p = dist::exceedance(&d, cfg.peaks.threshold, eps);

    let path = out.join(format!("forecast_{}_h{h}.csv", fitted.kind()));
    let mut w = io::CsvOut::create(
        &path,
        &format!("quantiles µg/m³; mu, sigma of ln(µg/m³ + {eps}); p_exceed probability"),
    )?;
    let mut header = vec!["issue_time".to_string(), "horizon".into()];
    header.extend(qs.levels.iter().map(|l| quantile_label(l.get())));
    header.extend(["mu".into(), "sigma".into(), format!("p_exceed_{}", threshold_label(cfg.peaks.threshold))]);
    let mut rec = vec![issue.to_string(), h.to_string()];
    rec.extend(qs.values.iter().map(|v| inverse_log(*v, eps).to_string()));
    rec.extend([d.mu.to_string(), d.sigma.to_string(), p.to_string()]);
    w.row(&header)?;
    w.row(&rec)?;
    w.finish()?;
    println!("{}", header.join(","));
    println!("{}", rec.join(","));
    Ok(())
}

fn print_summary(exp: &experiment::Experiment) {
    println!(
        "{:<6} {:>4} {:>10} {:>10} {:>8} {:>8} {:>4} {:>4} {:>6}",
        "model", "h", "crps_log", "crps_ugm3", "rmse", "bias", "tp", "fp", "auc"
    );
    for c in &exp.report.cells {
        println!(
            "{:<6} {:>4} {:>10.4} {:>10.3} {:>8.3} {:>8.3} {:>4} {:>4} {:>6}",
            c.model,
            c.horizon,
            c.crps_mean,
            c.crps_raw_mean,
            c.point.rmse,
            c.point.bias,
            c.alarms.tp,
            c.alarms.fp,
            c.alarms.auc.map_or("-".into(), |a| format!("{a:.3}"))
        );
    }
    for f in &exp.report.failures {
        println!("FAILED {} h={} fold {:?}: {}", f.model, f.horizon, f.fold, f.message);
    }
}

#[derive(Serialize)]
struct PeakSummary {
    model: String,
    threshold: f64,
    p_alarm: f64,
    units: &'static str,
    by_horizon: Vec<(u32, AlarmScores)>,
    pooled: AlarmScores,
}

fn peaks(cfg: &RunConfig, out: &Path, jobs: Option<usize>, data: &PreparedData) -> Result<()> {
    let setup = Setup::from_config(cfg, jobs);
    let exp = experiment::run_experiment(&setup, data)?;
    if let Some(f) = exp.report.failures.first() {
        return Err(CliError::Data(format!("{} h={} failed: {}", f.model, f.horizon, f.message)));
    }
    let mut events: Vec<(noxcast_core::time::Hour, u32, f64, bool)> = Vec::new();
    let mut by_horizon = Vec::new();
    for cell in &exp.outcomes {
        let p: Vec<f64> = cell.folds.iter().flat_map(|f| f.p_exceed.iter().copied()).collect();
        let l: Vec<bool> = cell.folds.iter().flat_map(|f| f.labels.iter().copied()).collect();
        by_horizon.push((cell.horizon, alarm_scores(&p, &l, cfg.peaks.p_alarm)?));
        for f in &cell.folds {
            for i in 0..f.len() {
                events.push((f.issue_times[i], cell.horizon, f.p_exceed[i], f.labels[i]));
            }
        }
    }
    events.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let p: Vec<f64> = events.iter().map(|e| e.2).collect();
    let l: Vec<bool> = events.iter().map(|e| e.3).collect();
    let pooled = alarm_scores(&p, &l, cfg.peaks.p_alarm)?;

    let mut w = io::CsvOut::create(
        &out.join("peaks.csv"),
        &format!("p_exceed is P(no2 > {} µg/m³); alarm and label are 0/1", cfg.peaks.threshold),
    )?;
    w.row(["issue_time", "horizon", "p_exceed", "alarm", "label"])?;
    for (t, h, p, label) in &events {
        let alarm = *p > cfg.peaks.p_alarm;
        w.row([t.to_string(), h.to_string(), p.to_string(), u8::from(alarm).to_string(), u8::from(*label).to_string()])?;
    }
    w.finish()?;
    let mut roc = io::CsvOut::create(&out.join("roc.csv"), "rates")?;
    roc.row(["false_positive_rate", "true_positive_rate"])?;
    for (x, y) in &pooled.roc {
        roc.row([x.to_string(), y.to_string()])?;
    }
    roc.finish()?;
    let model = cfg.models[0].label().to_string();
    println!(
        "{model}: {} events, tp {} fp {} fn {} tn {}, auc {}",
        events.len(),
        pooled.tp,
        pooled.fp,
        pooled.fn_,
        pooled.tn,
        pooled.auc.map_or("undefined".into(), |a| format!("{a:.3}"))
    );
    info!("writing peak summary");
    io::write_json(
        &out.join("peaks_summary.json"),
        &PeakSummary {
            model,
            threshold: cfg.peaks.threshold,
            p_alarm: cfg.peaks.p_alarm,
            units: "counts of hourly events; threshold in µg/m³",
            by_horizon,
            pooled,
        },
    )?;
    Ok(())
}
