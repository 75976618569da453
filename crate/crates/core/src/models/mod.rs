//! Probabilistic regressors sharing one contract: fit on a
//! [`FeatureFrame`], then map a feature row to a [`QuantileSet`].
//!
//! | kind  | model                                              |
//! |-------|----------------------------------------------------|
//! | QLR   | linear quantile regression                         |
//! | QKNN  | k-nearest-neighbour target quantiles               |
//! | QRF   | quantile regression forest                         |
//! | QGB   | gradient-boosted trees on the pinball loss         |
//! | NGB   | natural-gradient boosting of a normal distribution |
//! | *L    | least squares plus one of QKNN/QRF/QGB on residuals |
//!
//! Predicted quantiles are not rearranged here; see [`crate::dist::rearrange`].

pub mod boost;
pub mod forest;
pub mod knn;
pub mod linear;
pub mod ngb;
pub mod tree;

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dist::{NormalDist, QuantileSet};
use crate::error::{Error, Result};
use crate::features::FeatureFrame;
use crate::math::QuantileLevel;
use boost::{BoostSettings, QuantileBoost};
use forest::QuantileForest;
use knn::KnnModel;
use linear::{LinearModel, QlrModel};
use ngb::{NgbModel, NgbSettings};

/// Version tag written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Pinball (check) loss of quantile forecast `q` for observation `y`.
#[inline]
pub fn pinball(y: f64, q: f64, tau: QuantileLevel) -> f64 {
    let t = tau.get();
    if y >= q {
        t * (y - q)
    } else {
        (1.0 - t) * (q - y)
    }
}

/// Strictly increasing quantile levels that include the median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct QuantileGrid {
    levels: Vec<QuantileLevel>,
}

impl QuantileGrid {
    pub fn new(levels: &[f64]) -> Result<Self> {
        let levels: Vec<QuantileLevel> = levels.iter().map(|&t| QuantileLevel::new(t)).collect::<Result<_>>()?;
        if levels.windows(2).any(|w| w[0].get() >= w[1].get()) {
            return Err(Error::Config("quantile levels must be strictly increasing".into()));
        }
        if !levels.iter().any(|l| l.get() == 0.5) {
            return Err(Error::Config("quantile grid must contain 0.5".into()));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[QuantileLevel] {
        &self.levels
    }

    pub fn median_index(&self) -> usize {
        self.levels.iter().position(|l| l.get() == 0.5).unwrap_or(0)
    }
}

impl Default for QuantileGrid {
    fn default() -> Self {
        Self::new(&[0.05, 0.25, 0.5, 0.75, 0.95]).expect("valid default grid")
    }
}

impl TryFrom<Vec<f64>> for QuantileGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(&v)
    }
}

impl From<QuantileGrid> for Vec<f64> {
    fn from(g: QuantileGrid) -> Vec<f64> {
        g.levels.into_iter().map(f64::from).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QlrParams {
    pub ridge: f64,
}

impl Default for QlrParams {
    fn default() -> Self {
        Self { ridge: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub trees: usize,
    /// Features tried per split; `None` means `ceil(p / 3)`.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 500,
            mtry: None,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            rounds: 300,
            learning_rate: 0.05,
            max_depth: 6,
            min_leaf: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NgbParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for NgbParams {
    fn default() -> Self {
        Self {
            rounds: 300,
            learning_rate: 0.05,
            max_depth: 3,
            min_leaf: 20,
        }
    }
}

/// Model family plus hyperparameters. The `*L` kinds fit least squares first
/// and the named inner model on its residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelSpec {
    #[serde(rename = "QLR")]
    Qlr(QlrParams),
    #[serde(rename = "QKNN")]
    Qknn(KnnParams),
    #[serde(rename = "QRF")]
    Qrf(ForestParams),
    #[serde(rename = "QGB")]
    Qgb(BoostParams),
    #[serde(rename = "NGB")]
    Ngb(NgbParams),
    #[serde(rename = "QKNNL")]
    QknnL(KnnParams),
    #[serde(rename = "QRFL")]
    QrfL(ForestParams),
    #[serde(rename = "QGBL")]
    QgbL(BoostParams),
}

impl ModelSpec {
    pub fn label(&self) -> &'static str {
        match self {
            ModelSpec::Qlr(_) => "QLR",
            ModelSpec::Qknn(_) => "QKNN",
            ModelSpec::Qrf(_) => "QRF",
            ModelSpec::Qgb(_) => "QGB",
            ModelSpec::Ngb(_) => "NGB",
            ModelSpec::QknnL(_) => "QKNNL",
            ModelSpec::QrfL(_) => "QRFL",
            ModelSpec::QgbL(_) => "QGBL",
        }
    }

    /// Default hyperparameters for a kind label.
    pub fn from_label(label: &str) -> Option<Self> {
        Some(match label {
            "QLR" => ModelSpec::Qlr(QlrParams::default()),
            "QKNN" => ModelSpec::Qknn(KnnParams::default()),
            "QRF" => ModelSpec::Qrf(ForestParams::default()),
            "QGB" => ModelSpec::Qgb(BoostParams::default()),
            "NGB" => ModelSpec::Ngb(NgbParams::default()),
            "QKNNL" => ModelSpec::QknnL(KnnParams::default()),
            "QRFL" => ModelSpec::QrfL(ForestParams::default()),
            "QGBL" => ModelSpec::QgbL(BoostParams::default()),
            _ => return None,
        })
    }

    /// Inner probabilistic model of a residual hybrid.
    pub fn hybrid_inner(&self) -> Option<ModelSpec> {
        match *self {
            ModelSpec::QknnL(p) => Some(ModelSpec::Qknn(p)),
            ModelSpec::QrfL(p) => Some(ModelSpec::Qrf(p)),
            ModelSpec::QgbL(p) => Some(ModelSpec::Qgb(p)),
            _ => None,
        }
    }

    pub fn validate(&self, n_samples: usize, n_features: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Hyperparameter(m));
        match *self {
            ModelSpec::Qlr(p) => {
                if !(p.ridge >= 0.0) {
                    return bad(format!("ridge {} must be >= 0", p.ridge));
                }
            }
            ModelSpec::Qknn(p) | ModelSpec::QknnL(p) => {
                if p.k == 0 || p.k > n_samples {
                    return bad(format!("k = {} must be in 1..={n_samples}", p.k));
                }
            }
            ModelSpec::Qrf(p) | ModelSpec::QrfL(p) => {
                if p.trees == 0 {
                    return bad("trees must be >= 1".into());
                }
                if p.min_leaf == 0 {
                    return bad("min_leaf must be >= 1".into());
                }
                if let Some(m) = p.mtry {
                    if m == 0 || m > n_features {
                        return bad(format!("mtry = {m} must be in 1..={n_features}"));
                    }
                }
            }
            ModelSpec::Qgb(p) | ModelSpec::QgbL(p) => {
                if !(p.learning_rate > 0.0 && p.learning_rate <= 1.0) {
                    return bad(format!("learning_rate {} not in (0, 1]", p.learning_rate));
                }
                if p.min_leaf == 0 {
                    return bad("min_leaf must be >= 1".into());
                }
            }
            ModelSpec::Ngb(p) => {
                if !(p.learning_rate > 0.0 && p.learning_rate <= 1.0) {
                    return bad(format!("learning_rate {} not in (0, 1]", p.learning_rate));
                }
                if p.min_leaf == 0 {
                    return bad("min_leaf must be >= 1".into());
                }
            }
        }
        Ok(())
    }
}

/// Learned parameters, one variant per family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Learned {
    Qlr(QlrModel),
    Qknn(KnnModel),
    Qrf(QuantileForest),
    Qgb(QuantileBoost),
    Ngb(NgbModel),
    Hybrid { linear: LinearModel, inner: Box<Learned> },
}

impl Learned {
    fn predict(&self, row: &[f64], levels: &[QuantileLevel]) -> (Vec<f64>, Option<NormalDist>) {
        match self {
            Learned::Qlr(m) => (m.predict(row), None),
            Learned::Qknn(m) => (m.predict(row, levels), None),
            Learned::Qrf(m) => (m.predict(row, levels), None),
            Learned::Qgb(m) => (m.predict(row), None),
            Learned::Ngb(m) => {
                let d = m.predict(row);
                (d.quantile_set(levels).values, Some(d))
            }
            Learned::Hybrid { linear, inner } => {
                let base = linear.predict(row);
                let (values, normal) = inner.predict(row, levels);
                (
                    values.into_iter().map(|v| base + v).collect(),
                    normal.map(|d| NormalDist {
                        mu: d.mu + base,
                        sigma: d.sigma,
                    }),
                )
            }
        }
    }
}

/// A trained model. Immutable after fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub grid: QuantileGrid,
    pub column_names: Vec<String>,
    pub horizon_hours: u32,
    /// Wall-clock training time; filled in by callers that can measure it.
    pub train_seconds: f64,
    pub learned: Learned,
}

/// Output of [`FittedModel::predict`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub quantiles: QuantileSet,
    /// Present for NGB, which predicts the normal directly.
    pub normal: Option<NormalDist>,
}

impl FittedModel {
    pub fn kind(&self) -> &'static str {
        self.spec.label()
    }

    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        if row.len() != self.column_names.len() {
            return Err(Error::ColumnMismatch(format!(
                "expected {} features, got {}",
                self.column_names.len(),
                row.len()
            )));
        }
        let (values, normal) = self.learned.predict(row, self.grid.levels());
        Ok(Prediction {
            quantiles: QuantileSet {
                levels: self.grid.levels().to_vec(),
                values,
            },
            normal,
        })
    }

    pub fn predict_frame(&self, frame: &FeatureFrame) -> Result<Vec<Prediction>> {
        if frame.column_names != self.column_names {
            let first = frame
                .column_names
                .iter()
                .zip(&self.column_names)
                .find(|(a, b)| a != b)
                .map(|(a, b)| format!("`{a}` where `{b}` was expected"))
                .unwrap_or_else(|| {
                    format!("{} columns, model has {}", frame.column_names.len(), self.column_names.len())
                });
            return Err(Error::ColumnMismatch(first));
        }
        (0..frame.len()).map(|i| self.predict(frame.x.row(i))).collect()
    }
}

fn fit_learned(spec: &ModelSpec, frame: &FeatureFrame, grid: &QuantileGrid, seed: u64) -> Learned {
    let x = &frame.x;
    let y = &frame.y;
    let levels = grid.levels();
    match *spec {
        ModelSpec::Qlr(p) => Learned::Qlr(QlrModel::fit(x, y, levels, p.ridge)),
        ModelSpec::Qknn(p) => Learned::Qknn(KnnModel::fit(x, y, p.k)),
        ModelSpec::Qrf(p) => {
            let mtry = p.mtry.unwrap_or_else(|| x.cols().div_ceil(3).max(1));
            Learned::Qrf(QuantileForest::fit(x, y, p.trees, mtry, p.min_leaf, seed))
        }
        ModelSpec::Qgb(p) => Learned::Qgb(QuantileBoost::fit(
            x,
            y,
            levels,
            BoostSettings {
                rounds: p.rounds,
                learning_rate: p.learning_rate,
                max_depth: p.max_depth,
                min_leaf: p.min_leaf,
            },
            seed,
        )),
        ModelSpec::Ngb(p) => Learned::Ngb(NgbModel::fit(
            x,
            y,
            NgbSettings {
                rounds: p.rounds,
                learning_rate: p.learning_rate,
                max_depth: p.max_depth,
                min_leaf: p.min_leaf,
            },
            seed,
        )),
        ModelSpec::QknnL(_) | ModelSpec::QrfL(_) | ModelSpec::QgbL(_) => {
            let linear = LinearModel::fit(x, y);
            hybrid_with_linear(spec, frame, grid, seed, linear)
        }
    }
}

fn hybrid_with_linear(spec: &ModelSpec, frame: &FeatureFrame, grid: &QuantileGrid, seed: u64, linear: LinearModel) -> Learned {
    let inner_spec = spec.hybrid_inner().unwrap_or(*spec);
    let residuals: Vec<f64> = (0..frame.len())
        .map(|i| frame.y[i] - linear.predict(frame.x.row(i)))
        .collect();
    let mut inner_frame = frame.clone();
    inner_frame.y = residuals;
    let inner = fit_learned(&inner_spec, &inner_frame, grid, seed);
    Learned::Hybrid {
        linear,
        inner: Box::new(inner),
    }
}

/// Fit any model kind on a frame.
pub fn fit(spec: &ModelSpec, frame: &FeatureFrame, grid: &QuantileGrid, seed: u64) -> Result<FittedModel> {
    if frame.is_empty() {
        return Err(Error::EmptySample);
    }
    spec.validate(frame.len(), frame.x.cols())?;
    Ok(FittedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: *spec,
        grid: grid.clone(),
        column_names: frame.column_names.clone(),
        horizon_hours: frame.horizon_hours,
        train_seconds: 0.0,
        learned: fit_learned(spec, frame, grid, seed),
    })
}

/// Residual hybrid with a caller-supplied linear stage.
pub fn fit_residual_hybrid_with(
    spec: &ModelSpec,
    frame: &FeatureFrame,
    grid: &QuantileGrid,
    seed: u64,
    linear: LinearModel,
) -> Result<FittedModel> {
    if spec.hybrid_inner().is_none() {
        return Err(Error::Hyperparameter(format!("{} is not a residual hybrid", spec.label())));
    }
    spec.validate(frame.len(), frame.x.cols())?;
    Ok(FittedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: *spec,
        grid: grid.clone(),
        column_names: frame.column_names.clone(),
        horizon_hours: frame.horizon_hours,
        train_seconds: 0.0,
        learned: hybrid_with_linear(spec, frame, grid, seed, linear),
    })
}
