//! Quantile k-nearest neighbours.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{QuantileLevel, WeightedSample};
use crate::matrix::{Matrix, Standardizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub standardizer: Standardizer,
    pub train: Matrix,
    pub y: Vec<f64>,
}

impl KnnModel {
    pub fn fit(x: &Matrix, y: &[f64], k: usize) -> Self {
        let standardizer = Standardizer::fit(x);
        let train = standardizer.transform(x);
        Self {
            k,
            standardizer,
            train,
            y: y.to_vec(),
        }
    }

    /// Training rows of the `k` nearest neighbours, nearest first; equal
    /// distances go to the lower row index.
    pub fn neighbours(&self, row: &[f64]) -> Vec<usize> {
        let z = self.standardizer.transform_row(row);
        let mut d: Vec<(f64, usize)> = (0..self.train.rows())
            .map(|i| {
                let dist = self
                    .train
                    .row(i)
                    .iter()
                    .zip(&z)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                (dist, i)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        let k = self.k.min(d.len());
        if k < d.len() {
            d.select_nth_unstable_by(k, cmp);
            d.truncate(k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict(&self, row: &[f64], levels: &[QuantileLevel]) -> Vec<f64> {
        let targets: Vec<f64> = self.neighbours(row).into_iter().map(|i| self.y[i]).collect();
        match WeightedSample::uniform(targets) {
            Ok(s) => s.quantiles(levels),
            Err(_) => alloc::vec![f64::NAN; levels.len()],
        }
    }
}
