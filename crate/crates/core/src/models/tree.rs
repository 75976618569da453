//! CART regression trees grown on presorted feature orders.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    /// `None` grows until `min_leaf` stops it.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried per split; `None` tries all.
    pub mtry: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    /// Index of the leaf node reached by `row`.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn set_leaf_value(&mut self, node: usize, v: f64) {
        if let Node::Leaf { value } = &mut self.nodes[node] {
            *value = v;
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n, Node::Leaf { .. }))
            .map(|(i, _)| i)
    }

    pub fn depth(&self) -> usize {
        fn go(t: &RegressionTree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left as usize).max(go(t, right as usize)),
            }
        }
        go(self, 0)
    }
}

/// A grown tree plus the leaf reached by each training sample position.
pub struct GrownTree {
    pub tree: RegressionTree,
    pub leaf_of: Vec<usize>,
}

/// Grow a variance-reduction tree on `samples` (row indices into `x`,
/// repeats allowed), fitting `target[k]` for sample position `k`.
pub fn grow<R: Rng + ?Sized>(
    x: &Matrix,
    samples: &[usize],
    target: &[f64],
    params: TreeParams,
    rng: &mut R,
) -> GrownTree {
    debug_assert_eq!(samples.len(), target.len());
    let m = samples.len();
    let p = x.cols();
    // one order per feature plus a trailing membership list
    let mut sorted: Vec<Vec<usize>> = (0..p)
        .map(|f| {
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| {
                x.get(samples[a], f)
                    .total_cmp(&x.get(samples[b], f))
                    .then(a.cmp(&b))
            });
            order
        })
        .collect();
    sorted.push((0..m).collect());
    let mut b = Builder {
        x,
        samples,
        target,
        params,
        sorted,
        goes_left: vec![false; m],
        buf: vec![0; m],
        features: (0..p).collect(),
        nodes: Vec::new(),
        leaf_of: vec![0; m],
    };
    b.build(0, m, 0, rng);
    GrownTree {
        tree: RegressionTree { nodes: b.nodes },
        leaf_of: b.leaf_of,
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    samples: &'a [usize],
    target: &'a [f64],
    params: TreeParams,
    // per feature, sample positions ordered by feature value; each node owns
    // the same contiguous range in every array
    sorted: Vec<Vec<usize>>,
    goes_left: Vec<bool>,
    buf: Vec<usize>,
    features: Vec<usize>,
    nodes: Vec<Node>,
    leaf_of: Vec<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
    left_count: usize,
}

impl Builder<'_> {
    fn value(&self, pos: usize, f: usize) -> f64 {
        self.x.get(self.samples[pos], f)
    }

    fn make_leaf(&mut self, lo: usize, hi: usize, sum: f64) -> usize {
        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: sum / (hi - lo) as f64,
        });
        let members = &self.sorted[self.sorted.len() - 1][lo..hi];
        for &pos in members {
            self.leaf_of[pos] = idx;
        }
        idx
    }

    fn build<R: Rng + ?Sized>(&mut self, lo: usize, hi: usize, depth: usize, rng: &mut R) -> usize {
        let n = hi - lo;
        let members = &self.sorted[self.sorted.len() - 1][lo..hi];
        let (sum, lo_t, hi_t) = members.iter().fold((0.0, f64::INFINITY, f64::NEG_INFINITY), |(s, a, b), &pos| {
            let t = self.target[pos];
            (s + t, a.min(t), b.max(t))
        });
        let mean = sum / n as f64;
        let sse = if lo_t == hi_t {
            0.0
        } else {
            members.iter().map(|&pos| (self.target[pos] - mean) * (self.target[pos] - mean)).sum()
        };
        let depth_ok = self.params.max_depth.map_or(true, |d| depth < d);
        if self.features.is_empty() || !depth_ok || n < 2 * self.params.min_leaf.max(1) || !(sse > 0.0) {
            return self.make_leaf(lo, hi, sum);
        }

        let p = self.features.len();
        let tries = self.params.mtry.map_or(p, |m| m.clamp(1, p));
        if tries < p {
            for i in 0..tries {
                let j = rng.random_range(i..p);
                self.features.swap(i, j);
            }
        }
        let candidates: Vec<usize> = if tries < p {
            self.features[..tries].to_vec()
        } else {
            (0..p).collect()
        };

        let min_leaf = self.params.min_leaf.max(1);
        let parent_term = sum * sum / n as f64;
        let mut best: Option<BestSplit> = None;
        for &f in &candidates {
            let order = &self.sorted[f][lo..hi];
            let mut left_sum = 0.0;
            for k in 0..n - 1 {
                left_sum += self.target[order[k]];
                let left_n = k + 1;
                let right_n = n - left_n;
                if left_n < min_leaf {
                    continue;
                }
                if right_n < min_leaf {
                    break;
                }
                let a = self.value(order[k], f);
                let b = self.value(order[k + 1], f);
                if a == b {
                    continue;
                }
                let right_sum = sum - left_sum;
                let gain = left_sum * left_sum / left_n as f64 + right_sum * right_sum / right_n as f64 - parent_term;
                if best.as_ref().map_or(true, |bs| gain > bs.gain) {
                    let mid = a + 0.5 * (b - a);
                    let threshold = if mid < b { mid } else { a };
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        gain,
                        left_count: left_n,
                    });
                }
            }
        }

        let Some(split) = best.filter(|s| s.gain > 1e-12 * sse) else {
            return self.make_leaf(lo, hi, sum);
        };

        // mark sides, then stable-partition every feature order
        for k in lo..hi {
            let pos = self.sorted[split.feature][k];
            self.goes_left[pos] = self.value(pos, split.feature) <= split.threshold;
        }
        for f in 0..self.sorted.len() {
            let arr = &mut self.sorted[f];
            let mut l = lo;
            let mut r = 0;
            for k in lo..hi {
                let pos = arr[k];
                if self.goes_left[pos] {
                    arr[l] = pos;
                    l += 1;
                } else {
                    self.buf[r] = pos;
                    r += 1;
                }
            }
            arr[l..hi].copy_from_slice(&self.buf[..r]);
            debug_assert_eq!(l - lo, split.left_count);
        }

        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });
        let mid = lo + split.left_count;
        let left = self.build(lo, mid, depth + 1, rng);
        let right = self.build(mid, hi, depth + 1, rng);
        self.nodes[idx] = Node::Split {
            feature: split.feature as u32,
            threshold: split.threshold,
            left: left as u32,
            right: right as u32,
        };
        idx
    }
}
