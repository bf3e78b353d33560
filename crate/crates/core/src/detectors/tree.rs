//! CART decision tree over binary features.
//!
//! Splits are equality tests (value 0 goes left, 1 goes right), scored by
//! Gini impurity decrease. Zero-gain splits are still taken as long as both
//! children are non-empty, so consistent training data is always fit
//! exactly; recursion stops at purity, at `min_samples_split`, or when every
//! remaining feature is constant within the node.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledDataset;
use crate::error::Result;
use crate::matrix::Matrix;

use super::HyperParams;

/// One node; the root is index 0.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Malware fraction of the training rows that reached this leaf.
    Leaf { proba: f64 },
    /// Rows with `feature` = 0 continue at `left`, = 1 at `right`.
    Split { feature: u32, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub num_features: usize,
}

/// Node-level feature selection policy.
pub(super) enum FeaturePolicy<'a> {
    /// Scan every feature in index order (ties favor the lowest index).
    All,
    /// Shuffle per node and evaluate the first `max_features` non-constant
    /// features; keep scanning past that count only while no valid split
    /// has been found yet.
    Subsample {
        max_features: usize,
        rng: &'a mut ChaCha8Rng,
    },
}

pub(super) struct TreeBuilder<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    min_samples_split: usize,
    total_rows: f64,
    nodes: Vec<TreeNode>,
    /// Impurity decrease accumulated per feature, weighted by node size.
    importances: Vec<f64>,
}

struct BestSplit {
    feature: usize,
    gain: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

fn gini(n: f64, malware: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = malware / n;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

impl<'a> TreeBuilder<'a> {
    pub(super) fn new(x: &'a Matrix, y: &'a [u8], min_samples_split: usize) -> Self {
        TreeBuilder {
            x,
            y,
            min_samples_split,
            total_rows: x.rows() as f64,
            nodes: Vec::new(),
            importances: vec![0.0; x.cols()],
        }
    }

    /// Grows the tree and returns it along with the per-feature impurity
    /// decrease it accumulated.
    pub(super) fn build(
        mut self,
        indices: Vec<usize>,
        policy: &mut FeaturePolicy,
    ) -> (DecisionTree, Vec<f64>) {
        self.grow(indices, policy);
        (
            DecisionTree {
                nodes: self.nodes,
                num_features: self.x.cols(),
            },
            self.importances,
        )
    }

    fn grow(&mut self, indices: Vec<usize>, policy: &mut FeaturePolicy) -> u32 {
        let n = indices.len();
        let malware = indices.iter().filter(|&&i| self.y[i] == 1).count();
        let fraction = malware as f64 / n as f64;

        if malware == 0 || malware == n || n < self.min_samples_split {
            let id = self.nodes.len() as u32;
            self.nodes.push(TreeNode::Leaf { proba: fraction });
            return id;
        }

        let best = self.best_split(&indices, malware, policy);
        match best {
            None => {
                let id = self.nodes.len() as u32;
                self.nodes.push(TreeNode::Leaf { proba: fraction });
                id
            }
            Some(split) => {
                self.importances[split.feature] += (n as f64 / self.total_rows) * split.gain;
                let id = self.nodes.len() as u32;
                // Placeholder until both subtrees exist.
                self.nodes.push(TreeNode::Leaf { proba: fraction });
                let left = self.grow(split.left, policy);
                let right = self.grow(split.right, policy);
                self.nodes[id as usize] = TreeNode::Split {
                    feature: split.feature as u32,
                    left,
                    right,
                };
                id
            }
        }
    }

    fn best_split(
        &self,
        indices: &[usize],
        malware: usize,
        policy: &mut FeaturePolicy,
    ) -> Option<BestSplit> {
        let n = indices.len() as f64;
        let parent = gini(n, malware as f64);

        let order: Vec<usize> = match policy {
            FeaturePolicy::All => (0..self.x.cols()).collect(),
            FeaturePolicy::Subsample { rng, .. } => {
                let mut all: Vec<usize> = (0..self.x.cols()).collect();
                all.shuffle(rng);
                all
            }
        };
        let budget = match policy {
            FeaturePolicy::All => self.x.cols(),
            FeaturePolicy::Subsample { max_features, .. } => *max_features,
        };

        let mut best: Option<(usize, f64)> = None;
        let mut evaluated = 0;
        for &feature in &order {
            if evaluated >= budget && best.is_some() {
                break;
            }
            let mut n0 = 0usize;
            let mut m0 = 0usize;
            for &i in indices {
                if self.x.get(i, feature) <= 0.5 {
                    n0 += 1;
                    if self.y[i] == 1 {
                        m0 += 1;
                    }
                }
            }
            if n0 == 0 || n0 == indices.len() {
                continue; // constant here; does not consume the budget
            }
            evaluated += 1;
            let n1 = indices.len() - n0;
            let m1 = malware - m0;
            let weighted = (n0 as f64 / n) * gini(n0 as f64, m0 as f64)
                + (n1 as f64 / n) * gini(n1 as f64, m1 as f64);
            let gain = parent - weighted;
            if best.map_or(true, |(_, g)| gain > g) {
                best = Some((feature, gain));
            }
        }

        best.map(|(feature, gain)| {
            let mut left = Vec::new();
            let mut right = Vec::new();
            for &i in indices {
                if self.x.get(i, feature) <= 0.5 {
                    left.push(i);
                } else {
                    right.push(i);
                }
            }
            BestSplit {
                feature,
                gain,
                left,
                right,
            }
        })
    }
}

impl DecisionTree {
    pub fn fit(params: &HyperParams, data: &LabeledDataset) -> Result<Self> {
        let builder = TreeBuilder::new(data.features(), data.labels(), params.dt_min_samples_split);
        let indices: Vec<usize> = (0..data.len()).collect();
        let (tree, _) = builder.build(indices, &mut FeaturePolicy::All);
        Ok(tree)
    }

    /// Malware fraction at the leaf this row lands in.
    pub fn proba_one(&self, row: &[f64]) -> f64 {
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { proba } => return *proba,
                TreeNode::Split { feature, left, right } => {
                    node = if row[*feature as usize] <= 0.5 {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|r| self.proba_one(x.row(r))).collect()
    }
}
