//! Random forest: bootstrap-sampled Gini trees with per-node feature
//! subsampling, probabilities averaged across trees.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::dataset::LabeledDataset;
use crate::error::Result;
use crate::matrix::Matrix;
use crate::seeds;

use super::tree::{DecisionTree, FeaturePolicy, TreeBuilder};
use super::HyperParams;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub num_features: usize,
    /// Mean impurity-decrease importance per feature, normalized to sum 1.
    pub importances: Vec<f64>,
}

impl RandomForest {
    pub fn fit(params: &HyperParams, data: &LabeledDataset, seed: u64) -> Result<Self> {
        let n = data.len();
        let m = data.num_features();
        let max_features = (libm::sqrt(m as f64) as usize).max(1);

        let mut trees = Vec::with_capacity(params.rf_trees);
        let mut importances = vec![0.0; m];
        for t in 0..params.rf_trees {
            let mut rng = seeds::child_rng(seed, "rf-tree", t as u64);
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let builder =
                TreeBuilder::new(data.features(), data.labels(), params.dt_min_samples_split);
            let (tree, tree_importances) = builder.build(
                bootstrap,
                &mut FeaturePolicy::Subsample {
                    max_features,
                    rng: &mut rng,
                },
            );
            let total: f64 = tree_importances.iter().sum();
            if total > 0.0 {
                for (acc, v) in importances.iter_mut().zip(&tree_importances) {
                    *acc += v / total;
                }
            }
            trees.push(tree);
        }
        let total: f64 = importances.iter().sum();
        if total > 0.0 {
            for v in &mut importances {
                *v /= total;
            }
        }
        Ok(RandomForest {
            trees,
            num_features: m,
            importances,
        })
    }

    /// Mean of the trees' leaf fractions.
    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        let mut probs = vec![0.0; x.rows()];
        for tree in &self.trees {
            for (r, p) in probs.iter_mut().enumerate() {
                *p += tree.proba_one(x.row(r));
            }
        }
        let inv = 1.0 / self.trees.len() as f64;
        for p in &mut probs {
            *p *= inv;
        }
        probs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noisy_separable(n_per_class: usize, seed: u64) -> LabeledDataset {
        // Label is carried by feature 0; features 1..6 are random noise.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut flat = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n_per_class {
            for label in [1u8, 0u8] {
                flat.push(label as f64);
                for _ in 0..5 {
                    flat.push(if rng.gen_bool(0.5) { 1.0 } else { 0.0 });
                }
                labels.push(label);
            }
        }
        LabeledDataset::new(Matrix::from_vec(labels.len(), 6, flat).unwrap(), labels).unwrap()
    }

    #[test]
    fn all_benign_leaves_give_probability_zero() {
        // Both features fully determine the label (f1 is the complement of
        // f0), so whichever feature a node samples, its children are pure;
        // every tree votes benign on a benign row.
        let mut flat = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..25 {
            flat.extend([1.0, 0.0]);
            labels.push(1u8);
            flat.extend([0.0, 1.0]);
            labels.push(0);
        }
        let data =
            LabeledDataset::new(Matrix::from_vec(labels.len(), 2, flat).unwrap(), labels).unwrap();
        let forest = RandomForest::fit(&HyperParams::default(), &data, 7).unwrap();
        let benign = data.rows_with_label(0);
        let probs = forest.predict_proba(&benign);
        assert!(probs.iter().all(|&p| p == 0.0), "probs {probs:?}");
    }

    #[test]
    fn deterministic_given_seed() {
        let data = noisy_separable(20, 6);
        let mut params = HyperParams::default();
        params.rf_trees = 10;
        let a = RandomForest::fit(&params, &data, 42).unwrap();
        let b = RandomForest::fit(&params, &data, 42).unwrap();
        assert_eq!(a, b);
        let c = RandomForest::fit(&params, &data, 43).unwrap();
        assert_ne!(a, c, "different seeds should draw different bootstraps");
    }

    #[test]
    fn importances_concentrate_on_the_informative_feature() {
        let data = noisy_separable(40, 8);
        let forest = RandomForest::fit(&HyperParams::default(), &data, 3).unwrap();
        let top = forest
            .importances
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(top, 0, "importances {:?}", forest.importances);
        assert!((forest.importances.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
