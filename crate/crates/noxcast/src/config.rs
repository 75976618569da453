//! Run configuration file (TOML).
//!
//! ```toml
//! seed = 42
//! output = "out"
//! horizons = [1, 6, 24]
//! quantiles = [0.05, 0.25, 0.5, 0.75, 0.95]
//!
//! [data]
//! series = ["no2.csv", "o3.csv", "exo_no2.csv"]
//! calendar = "calendar.csv"
//!
//! [features]
//! anchor_hour = 10
//!
//! [cv]
//! folds = 5
//! gap_hours = 264
//!
//! [peaks]
//! threshold = 180.0
//! p_alarm = 0.5
//!
//! [[models]]
//! kind = "QGB"
//! rounds = 300
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use noxcast_core::eval::{PeakSettings, DEFAULT_GAP_HOURS};
use noxcast_core::features::FeatureConfig;
use noxcast_core::models::{ModelSpec, QuantileGrid};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MODEL_KINDS: [&str; 8] = ["QLR", "QKNN", "QRF", "QGB", "NGB", "QKNNL", "QRFL", "QGBL"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub series: Vec<PathBuf>,
    pub calendar: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSettings {
    pub folds: usize,
    pub gap_hours: i64,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self {
            folds: 5,
            gap_hours: DEFAULT_GAP_HOURS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakConfig {
    /// µg/m³
    pub threshold: f64,
    pub p_alarm: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            threshold: 180.0,
            p_alarm: 0.5,
        }
    }
}

fn default_models() -> Vec<ModelSpec> {
    MODEL_KINDS.iter().filter_map(|k| ModelSpec::from_label(k)).collect()
}

fn default_horizons() -> Vec<u32> {
    (1..=60).collect()
}

fn default_seed() -> u64 {
    42
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataPaths,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<u32>,
    #[serde(default)]
    pub cv: CvSettings,
    #[serde(default)]
    pub peaks: PeakConfig,
    #[serde(default)]
    pub quantiles: QuantileGrid,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Significance level of the rank test.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl RunConfig {
    /// Parse, resolve relative paths and validate.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse without touching the filesystem.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.data.series.iter_mut().for_each(fix);
        fix(&mut self.data.calendar);
        fix(&mut self.output);
    }

    pub fn peak_settings(&self) -> PeakSettings {
        PeakSettings {
            threshold: self.peaks.threshold,
            epsilon: self.features.epsilon,
            p_alarm: self.peaks.p_alarm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        for (i, p) in self.data.series.iter().enumerate() {
            if !p.is_file() {
                return bad(format!("data.series[{i}]: file {} does not exist", p.display()));
            }
        }
        if !self.data.calendar.is_file() {
            return bad(format!("data.calendar: file {} does not exist", self.data.calendar.display()));
        }
        self.features.validate().map_err(|e| CliError::Config(format!("features: {e}")))?;
        self.validate_settings()
    }

    /// Checks that do not depend on files.
    pub fn validate_settings(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.horizons.is_empty() {
            return bad("horizons: must not be empty".into());
        }
        let mut seen = BTreeSet::new();
        for (i, &h) in self.horizons.iter().enumerate() {
            if !(1..=60).contains(&h) {
                return bad(format!("horizons[{i}] = {h} not in 1..=60"));
            }
            if !seen.insert(h) {
                return bad(format!("horizons[{i}] = {h} listed twice"));
            }
        }
        if !(self.peaks.threshold > 0.0) {
            return bad(format!("peaks.threshold = {} must be > 0", self.peaks.threshold));
        }
        if !(0.0..1.0).contains(&self.peaks.p_alarm) {
            return bad(format!("peaks.p_alarm = {} not in [0, 1)", self.peaks.p_alarm));
        }
        if self.cv.folds < 2 {
            return bad(format!("cv.folds = {} must be >= 2", self.cv.folds));
        }
        if self.cv.gap_hours < 0 {
            return bad(format!("cv.gap_hours = {} must be >= 0", self.cv.gap_hours));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} not in (0, 1)", self.alpha));
        }
        if self.models.is_empty() {
            return bad("models: must not be empty".into());
        }
        let p = self.features.column_names().len();
        let mut labels = BTreeSet::new();
        for (i, m) in self.models.iter().enumerate() {
            if !labels.insert(m.label()) {
                return bad(format!("models[{i}]: kind {} listed twice", m.label()));
            }
            m.validate(usize::MAX, p)
                .map_err(|e| CliError::Config(format!("models[{i}] ({}): {e}", m.label())))?;
        }
        Ok(())
    }

    /// Model entry by kind label, falling back to default hyperparameters.
    pub fn model(&self, label: &str) -> Result<ModelSpec> {
        let label = label.to_ascii_uppercase();
        if let Some(m) = self.models.iter().find(|m| m.label() == label) {
            return Ok(*m);
        }
        ModelSpec::from_label(&label).ok_or_else(|| {
            CliError::Config(format!("unknown model `{label}`; expected one of {}", MODEL_KINDS.join(", ")))
        })
    }
}

/// Config text pointing at the files written by `synth`.
pub fn synth_run_config(horizons: &[u32], seed: u64) -> String {
    let hs: Vec<String> = horizons.iter().map(u32::to_string).collect();
    format!(
        "# generated by `noxcast synth`\n\
         seed = {seed}\n\
         output = \"out\"\n\
         horizons = [{}]\n\
         \n\
         [data]\n\
         series = [\"no2.csv\", \"o3.csv\", \"exo_no2.csv\"]\n\
         calendar = \"calendar.csv\"\n\
         \n\
         [cv]\n\
         folds = 5\n\
         gap_hours = {DEFAULT_GAP_HOURS}\n\
         \n\
         [peaks]\n\
         threshold = 180.0\n\
         p_alarm = 0.5\n",
        hs.join(", ")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[data]\nseries = []\ncalendar = \"cal.csv\"\n";

    #[test]
    fn defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.horizons, (1..=60).collect::<Vec<_>>());
        assert_eq!(c.models.len(), 8);
        assert_eq!(c.peaks.threshold, 180.0);
        assert_eq!(c.cv.gap_hours, 264);
        assert_eq!(c.features.anchor_hour, 10);
        c.validate_settings().unwrap();
    }

    #[test]
    fn field_level_errors() {
        let e = RunConfig::parse(&format!("horizons = [1, 61]\n{MINIMAL}")).unwrap().validate_settings();
        assert!(matches!(e, Err(CliError::Config(m)) if m.contains("horizons[1]")));
        let e = RunConfig::parse(&format!("{MINIMAL}[peaks]\nthreshold = -1.0\n")).unwrap().validate_settings();
        assert!(matches!(e, Err(CliError::Config(m)) if m.contains("peaks.threshold")));
        let e = RunConfig::parse(&format!("{MINIMAL}[[models]]\nkind = \"QKNN\"\nk = 0\n")).unwrap().validate_settings();
        assert!(matches!(e, Err(CliError::Config(m)) if m.contains("models[0]")));
        assert!(RunConfig::parse(&format!("colour = 1\n{MINIMAL}")).is_err());
        assert!(RunConfig::parse("[data]\nseries = []\n").is_err());
    }

    #[test]
    fn model_lookup() {
        let c = RunConfig::parse(&format!("{MINIMAL}[[models]]\nkind = \"QKNN\"\nk = 7\n")).unwrap();
        assert_eq!(c.model("qknn").unwrap(), ModelSpec::Qknn(noxcast_core::models::KnnParams { k: 7 }));
        assert_eq!(c.model("QGB").unwrap(), ModelSpec::from_label("QGB").unwrap());
        assert!(c.model("SVM").is_err());
    }
}
