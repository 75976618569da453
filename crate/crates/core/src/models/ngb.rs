//! Natural-gradient boosting of a normal distribution's location and log
//! scale under the negative log-likelihood.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::tree::{grow, RegressionTree, TreeParams};
use crate::dist::{NormalDist, SIGMA_FLOOR};
use crate::matrix::Matrix;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgbModel {
    pub init_mu: f64,
    pub init_log_sigma: f64,
    /// Leaf values already include the learning rate.
    pub mu_trees: Vec<RegressionTree>,
    pub log_sigma_trees: Vec<RegressionTree>,
    /// Mean training negative log-likelihood after initialization and each round.
    pub train_nll: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgbSettings {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
}

/// Natural gradient of the normal NLL in `(mu, log sigma)`: the Fisher
/// information is `diag(1/sigma^2, 2)`.
pub fn natural_gradient(y: f64, mu: f64, log_sigma: f64) -> (f64, f64) {
    let var = libm::exp(2.0 * log_sigma);
    let r = y - mu;
    // ordinary gradient: (-(y - mu) / var, 1 - (y - mu)^2 / var)
    (-r, 0.5 * (1.0 - r * r / var))
}

fn floor_log_sigma(v: f64) -> f64 {
    let floor = libm::log(SIGMA_FLOOR);
    if v < floor {
        log::debug!("NGB scale floored at {SIGMA_FLOOR}");
        floor
    } else {
        v
    }
}

fn nll(y: &[f64], mu: &[f64], log_sigma: &[f64]) -> f64 {
    let half_ln_2pi = 0.5 * libm::log(2.0 * core::f64::consts::PI);
    y.iter()
        .zip(mu.iter().zip(log_sigma))
        .map(|(&yi, (&m, &ls))| {
            let ls = floor_log_sigma(ls);
            let z = (yi - m) / libm::exp(ls);
            half_ln_2pi + ls + 0.5 * z * z
        })
        .sum::<f64>()
        / y.len() as f64
}

impl NgbModel {
    pub fn fit(x: &Matrix, y: &[f64], s: NgbSettings, seed: u64) -> Self {
        let n = y.len();
        let mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let init_log_sigma = floor_log_sigma(0.5 * libm::log(var));
        let mut mu = alloc::vec![mean; n];
        let mut log_sigma = alloc::vec![init_log_sigma; n];
        let mut train_nll = Vec::with_capacity(s.rounds + 1);
        train_nll.push(nll(y, &mu, &log_sigma));
        let samples: Vec<usize> = (0..n).collect();
        let params = TreeParams {
            max_depth: Some(s.max_depth),
            min_leaf: s.min_leaf,
            mtry: None,
        };
        let mut rng = rng_from_seed(seed);
        let mut mu_trees = Vec::with_capacity(s.rounds);
        let mut log_sigma_trees = Vec::with_capacity(s.rounds);
        for _ in 0..s.rounds {
            let (g_mu, g_ls): (Vec<f64>, Vec<f64>) = (0..n)
                .map(|i| {
                    let (a, b) = natural_gradient(y[i], mu[i], log_sigma[i]);
                    (-a, -b)
                })
                .unzip();
            let mut t_mu = grow(x, &samples, &g_mu, params, &mut rng).tree;
            let mut t_ls = grow(x, &samples, &g_ls, params, &mut rng).tree;
            for t in [&mut t_mu, &mut t_ls] {
                let leaves: Vec<usize> = t.leaves().collect();
                for leaf in leaves {
                    if let super::tree::Node::Leaf { value } = t.nodes[leaf] {
                        t.set_leaf_value(leaf, s.learning_rate * value);
                    }
                }
            }
            for i in 0..n {
                mu[i] += t_mu.predict(x.row(i));
                log_sigma[i] = floor_log_sigma(log_sigma[i] + t_ls.predict(x.row(i)));
            }
            train_nll.push(nll(y, &mu, &log_sigma));
            mu_trees.push(t_mu);
            log_sigma_trees.push(t_ls);
        }
        Self {
            init_mu: mean,
            init_log_sigma,
            mu_trees,
            log_sigma_trees,
            train_nll,
        }
    }

    pub fn predict(&self, row: &[f64]) -> NormalDist {
        let mu = self.mu_trees.iter().fold(self.init_mu, |a, t| a + t.predict(row));
        let mut ls = self.init_log_sigma;
        for t in &self.log_sigma_trees {
            ls = floor_log_sigma(ls + t.predict(row));
        }
        NormalDist {
            mu,
            sigma: libm::exp(ls).max(SIGMA_FLOOR),
        }
    }
}
