//! Random forest of Gini CART trees with probability averaging.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_training_data, TrainConfig};
use crate::{Error, Result};

/// Tree node; `Split` sends `x[feature] <= threshold` to `left`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode {
    Leaf { prob: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Nodes stored in preorder; index 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { prob } => return prob,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Structural check: preorder layout, child links forward, features < `q`,
    /// leaf probabilities in [0, 1].
    pub fn validate(&self, q: usize) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Model("empty decision tree".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                TreeNode::Leaf { prob } => {
                    if !(0.0..=1.0).contains(&prob) {
                        return Err(Error::Model(format!("leaf {i} probability {prob} outside [0, 1]")));
                    }
                }
                TreeNode::Split { feature, threshold, left, right } => {
                    if feature >= q || !threshold.is_finite() {
                        return Err(Error::Model(format!("node {i} splits on invalid feature {feature}")));
                    }
                    if left != i + 1 || right <= left || right >= self.nodes.len() {
                        return Err(Error::Model(format!("node {i} has malformed child links")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfModel {
    pub input_dim: usize,
    pub feature_subsample: f64,
    pub trees: Vec<DecisionTree>,
}

impl RfModel {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Arithmetic mean of the tree outputs, summed in tree order.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_proba(x)).sum();
        sum / self.trees.len() as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(Error::Model("random forest has no trees".into()));
        }
        if !(self.feature_subsample > 0.0 && self.feature_subsample <= 1.0) {
            return Err(Error::Model("feature_subsample outside (0, 1]".into()));
        }
        self.trees.iter().try_for_each(|t| t.validate(self.input_dim))
    }
}

/// Number of features each tree may split on.
pub(crate) fn subset_size(q: usize, fraction: Option<f64>) -> usize {
    let f = fraction.unwrap_or_else(|| (q as f64).sqrt() / q as f64);
    ((f * q as f64).ceil() as usize).clamp(1, q)
}

pub fn train_rf(x: &[Vec<f64>], y: &[bool], cfg: &TrainConfig) -> Result<RfModel> {
    let q = check_training_data(x, y, cfg)?;
    let m = subset_size(q, cfg.feature_subsample);
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            grow_tree(x, y, q, m, cfg.max_depth, &mut rng)
        })
        .collect();
    Ok(RfModel {
        input_dim: q,
        feature_subsample: m as f64 / q as f64,
        trees,
    })
}

/// Presorted CART: each candidate feature keeps the bootstrap positions sorted
/// by value, and a node owns the same contiguous range in every list.
struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    boot: Vec<usize>,
    features: Vec<usize>,
    sorted: Vec<Vec<u32>>,
    goes_left: Vec<bool>,
    scratch: Vec<u32>,
    max_depth: usize,
    nodes: Vec<TreeNode>,
}

fn grow_tree(x: &[Vec<f64>], y: &[bool], q: usize, m: usize, max_depth: usize, rng: &mut ChaCha8Rng) -> DecisionTree {
    let n = x.len();
    let boot: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut features = index::sample(rng, q, m).into_vec();
    features.sort_unstable();
    let sorted = features
        .iter()
        .map(|&f| {
            let mut order: Vec<u32> = (0..n as u32).collect();
            order.sort_by(|&a, &b| x[boot[a as usize]][f].total_cmp(&x[boot[b as usize]][f]));
            order
        })
        .collect();
    let mut b = Builder {
        x,
        y,
        boot,
        features,
        sorted,
        goes_left: vec![false; n],
        scratch: Vec::with_capacity(n),
        max_depth,
        nodes: Vec::new(),
    };
    b.build(0, n, 0);
    DecisionTree { nodes: b.nodes }
}

impl Builder<'_> {
    fn value(&self, pos: u32, f: usize) -> f64 {
        self.x[self.boot[pos as usize]][f]
    }

    fn label(&self, pos: u32) -> bool {
        self.y[self.boot[pos as usize]]
    }

    fn build(&mut self, lo: usize, hi: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        let total = hi - lo;
        let pos = self.sorted[0][lo..hi].iter().filter(|&&p| self.label(p)).count();
        let leaf = TreeNode::Leaf {
            prob: pos as f64 / total as f64,
        };
        self.nodes.push(leaf);
        if depth >= self.max_depth || pos == 0 || pos == total {
            return id;
        }
        let Some((slot, split_at, threshold)) = self.best_split(lo, hi, pos) else {
            return id;
        };
        for &p in &self.sorted[slot][lo..hi] {
            self.goes_left[p as usize] = false;
        }
        for &p in &self.sorted[slot][lo..lo + split_at] {
            self.goes_left[p as usize] = true;
        }
        for k in 0..self.sorted.len() {
            self.scratch.clear();
            let list = &mut self.sorted[k];
            let mut w = lo;
            for r in lo..hi {
                let p = list[r];
                if self.goes_left[p as usize] {
                    list[w] = p;
                    w += 1;
                } else {
                    self.scratch.push(p);
                }
            }
            list[w..hi].copy_from_slice(&self.scratch);
        }
        let left = self.build(lo, lo + split_at, depth + 1);
        let right = self.build(lo + split_at, hi, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: self.features[slot],
            threshold,
            left,
            right,
        };
        id
    }

    /// Lowest weighted Gini split; ties keep the earliest feature and threshold.
    fn best_split(&self, lo: usize, hi: usize, pos: usize) -> Option<(usize, usize, f64)> {
        let total = (hi - lo) as f64;
        let parent = gini_mass(pos as f64, total);
        let mut best: Option<(f64, usize, usize, f64)> = None;
        for (slot, &f) in self.features.iter().enumerate() {
            let list = &self.sorted[slot][lo..hi];
            let mut left_pos = 0.0;
            for k in 0..list.len() - 1 {
                if self.label(list[k]) {
                    left_pos += 1.0;
                }
                let (a, b) = (self.value(list[k], f), self.value(list[k + 1], f));
                if a >= b {
                    continue;
                }
                let nl = (k + 1) as f64;
                let score = gini_mass(left_pos, nl) + gini_mass(pos as f64 - left_pos, total - nl);
                if best.is_none_or(|(s, ..)| score < s) {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some((score, slot, k + 1, threshold));
                }
            }
        }
        best.filter(|&(s, ..)| s < parent - 1e-12).map(|(_, slot, at, t)| (slot, at, t))
    }
}

/// `n * gini` for a node holding `pos` positives out of `n`.
fn gini_mass(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    n * 2.0 * p * (1.0 - p)
}
