//! Gradient-boosted trees under the pinball loss, one ensemble per level.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::pinball;
use super::tree::{grow, RegressionTree, TreeParams};
use crate::math::{QuantileLevel, WeightedSample};
use crate::matrix::Matrix;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileEnsemble {
    pub tau: QuantileLevel,
    pub init: f64,
    /// Leaf values already include the learning rate.
    pub trees: Vec<RegressionTree>,
    /// Mean training pinball loss after initialization and after each round.
    pub train_loss: Vec<f64>,
}

impl QuantileEnsemble {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.trees.iter().fold(self.init, |acc, t| acc + t.predict(row))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostSettings {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
}

fn mean_pinball(y: &[f64], f: &[f64], tau: QuantileLevel) -> f64 {
    y.iter().zip(f).map(|(&a, &b)| pinball(a, b, tau)).sum::<f64>() / y.len() as f64
}

fn quantile_of(values: Vec<f64>, tau: QuantileLevel) -> f64 {
    WeightedSample::uniform(values).map_or(0.0, |s| s.quantiles(&[tau])[0])
}

pub fn fit_level(x: &Matrix, y: &[f64], tau: QuantileLevel, s: BoostSettings, seed: u64) -> QuantileEnsemble {
    let n = y.len();
    let init = quantile_of(y.to_vec(), tau);
    let mut f = alloc::vec![init; n];
    let mut train_loss = Vec::with_capacity(s.rounds + 1);
    train_loss.push(mean_pinball(y, &f, tau));
    let samples: Vec<usize> = (0..n).collect();
    let params = TreeParams {
        max_depth: Some(s.max_depth),
        min_leaf: s.min_leaf,
        mtry: None,
    };
    let mut rng = rng_from_seed(seed);
    let mut trees = Vec::with_capacity(s.rounds);
    for _ in 0..s.rounds {
        let grad: Vec<f64> = y
            .iter()
            .zip(&f)
            .map(|(&yi, &fi)| {
                if yi > fi {
                    tau.get()
                } else if yi < fi {
                    tau.get() - 1.0
                } else {
                    0.0
                }
            })
            .collect();
        let mut grown = grow(x, &samples, &grad, params, &mut rng);
        let mut by_leaf: Vec<Vec<f64>> = alloc::vec![Vec::new(); grown.tree.nodes.len()];
        for k in 0..n {
            by_leaf[grown.leaf_of[k]].push(y[k] - f[k]);
        }
        for (leaf, residuals) in by_leaf.into_iter().enumerate() {
            if !residuals.is_empty() {
                grown
                    .tree
                    .set_leaf_value(leaf, s.learning_rate * quantile_of(residuals, tau));
            }
        }
        for k in 0..n {
            f[k] += grown.tree.predict(x.row(k));
        }
        train_loss.push(mean_pinball(y, &f, tau));
        trees.push(grown.tree);
    }
    QuantileEnsemble {
        tau,
        init,
        trees,
        train_loss,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileBoost {
    pub ensembles: Vec<QuantileEnsemble>,
}

impl QuantileBoost {
    pub fn fit(x: &Matrix, y: &[f64], levels: &[QuantileLevel], s: BoostSettings, seed: u64) -> Self {
        Self {
            ensembles: levels
                .iter()
                .enumerate()
                .map(|(i, &tau)| fit_level(x, y, tau, s, seed.wrapping_add(i as u64)))
                .collect(),
        }
    }

    pub fn predict(&self, row: &[f64]) -> Vec<f64> {
        self.ensembles.iter().map(|e| e.predict(row)).collect()
    }
}
