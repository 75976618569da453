//! Quantile regression forests: CART trees on bootstrap resamples whose
//! leaves keep the training targets, combined through leaf co-membership
//! weights.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, RegressionTree, TreeParams};
use crate::math::{QuantileLevel, WeightedSample};
use crate::matrix::Matrix;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestTree {
    pub tree: RegressionTree,
    /// `(leaf node, training rows in that leaf)`, sorted by node.
    pub leaves: Vec<(u32, Vec<u32>)>,
}

impl ForestTree {
    pub fn members(&self, node: usize) -> &[u32] {
        match self.leaves.binary_search_by_key(&(node as u32), |l| l.0) {
            Ok(i) => &self.leaves[i].1,
            Err(_) => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileForest {
    pub trees: Vec<ForestTree>,
    pub y: Vec<f64>,
}

impl QuantileForest {
    pub fn fit(x: &Matrix, y: &[f64], trees: usize, mtry: usize, min_leaf: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let n = x.rows();
        let params = TreeParams {
            max_depth: None,
            min_leaf,
            mtry: Some(mtry),
        };
        let mut out = Vec::with_capacity(trees);
        for _ in 0..trees {
            let samples: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let target: Vec<f64> = samples.iter().map(|&i| y[i]).collect();
            let grown = grow(x, &samples, &target, params, &mut rng);
            // leaf membership of every original training row
            let mut by_leaf: Vec<(u32, Vec<u32>)> = grown.tree.leaves().map(|l| (l as u32, Vec::new())).collect();
            for i in 0..n {
                let leaf = grown.tree.leaf_index(x.row(i)) as u32;
                if let Ok(k) = by_leaf.binary_search_by_key(&leaf, |l| l.0) {
                    by_leaf[k].1.push(i as u32);
                }
            }
            out.push(ForestTree {
                tree: grown.tree,
                leaves: by_leaf,
            });
        }
        Self {
            trees: out,
            y: y.to_vec(),
        }
    }

    /// Weight of each training target for `row`: the average over trees of
    /// `1 / |leaf|` when the target shares the row's leaf.
    pub fn weights(&self, row: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.y.len()];
        let t = self.trees.len() as f64;
        for ft in &self.trees {
            let members = ft.members(ft.tree.leaf_index(row));
            if members.is_empty() {
                continue;
            }
            let share = 1.0 / members.len() as f64 / t;
            for &i in members {
                w[i as usize] += share;
            }
        }
        w
    }

    pub fn predict(&self, row: &[f64], levels: &[QuantileLevel]) -> Vec<f64> {
        match WeightedSample::new(self.y.clone(), self.weights(row)) {
            Ok(s) => s.quantiles(levels),
            Err(_) => vec![f64::NAN; levels.len()],
        }
    }
}
