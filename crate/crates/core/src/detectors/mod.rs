//! The eight classical classifiers used as black-box malware detectors,
//! behind one train/predict interface.
//!
//! All of them consume binary API-usage feature vectors and expose a malware
//! probability per row. The decision rule is shared: predict malware iff the
//! probability strictly exceeds the threshold (default 0.5, exact ties go to
//! benign). Training is deterministic given the seed; randomized detectors
//! (forest bootstraps, SVM epoch shuffles, MLP init) derive their own child
//! streams from it.

mod boost;
mod forest;
mod knn;
mod linear;
mod mlp;
mod tree;

pub use boost::{AdaBoost, GradientBoosting, Stump};
pub use forest::RandomForest;
pub use knn::KnnClassifier;
pub use linear::{LinearSvm, LogisticRegression};
pub use mlp::MlpClassifier;
pub use tree::{DecisionTree, TreeNode};

use alloc::vec::Vec;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Which detector algorithm to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassifierKind {
    Rf,
    Lr,
    Dt,
    Svm,
    Mlp,
    Ab,
    Gb,
    Knn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 8] = [
        ClassifierKind::Rf,
        ClassifierKind::Lr,
        ClassifierKind::Dt,
        ClassifierKind::Svm,
        ClassifierKind::Mlp,
        ClassifierKind::Ab,
        ClassifierKind::Gb,
        ClassifierKind::Knn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Rf => "RF",
            ClassifierKind::Lr => "LR",
            ClassifierKind::Dt => "DT",
            ClassifierKind::Svm => "SVM",
            ClassifierKind::Mlp => "MLP",
            ClassifierKind::Ab => "AB",
            ClassifierKind::Gb => "GB",
            ClassifierKind::Knn => "KNN",
        }
    }

    pub fn from_name(name: &str) -> Option<ClassifierKind> {
        Self::ALL.iter().copied().find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

/// Training knobs for every detector, with conventional defaults sized to
/// reach the 92-99% original-sample detection band on separable data.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    /// Trees in the random forest.
    pub rf_trees: usize,
    /// Minimum node size the decision tree will still try to split.
    pub dt_min_samples_split: usize,
    /// Full-batch gradient-descent iterations for logistic regression.
    pub lr_iterations: usize,
    pub lr_learning_rate: f64,
    /// Passes over the data for the Pegasos SVM solver.
    pub svm_epochs: usize,
    /// Pegasos regularization strength.
    pub svm_lambda: f64,
    /// Hidden width of the MLP detector.
    pub mlp_hidden: usize,
    pub mlp_epochs: usize,
    pub mlp_batch_size: usize,
    /// Boosting rounds (depth-1 stumps) for AdaBoost.
    pub ab_stumps: usize,
    /// Boosting rounds for gradient boosting.
    pub gb_stumps: usize,
    pub gb_shrinkage: f64,
    /// Neighbors consulted by KNN.
    pub knn_k: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            rf_trees: 100,
            dt_min_samples_split: 2,
            lr_iterations: 500,
            lr_learning_rate: 0.1,
            svm_epochs: 10,
            svm_lambda: 1e-4,
            mlp_hidden: 64,
            mlp_epochs: 30,
            mlp_batch_size: 256,
            ab_stumps: 100,
            gb_stumps: 100,
            gb_shrinkage: 0.1,
            knn_k: 5,
        }
    }
}

/// A trained detector of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel {
    Rf(RandomForest),
    Lr(LogisticRegression),
    Dt(DecisionTree),
    Svm(LinearSvm),
    Mlp(MlpClassifier),
    Ab(AdaBoost),
    Gb(GradientBoosting),
    Knn(KnnClassifier),
}

/// Malware-decision threshold shared by every detector: a row is flagged
/// only when its probability strictly exceeds this.
pub const DECISION_THRESHOLD: f64 = 0.5;

impl ClassifierModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierModel::Rf(_) => ClassifierKind::Rf,
            ClassifierModel::Lr(_) => ClassifierKind::Lr,
            ClassifierModel::Dt(_) => ClassifierKind::Dt,
            ClassifierModel::Svm(_) => ClassifierKind::Svm,
            ClassifierModel::Mlp(_) => ClassifierKind::Mlp,
            ClassifierModel::Ab(_) => ClassifierKind::Ab,
            ClassifierModel::Gb(_) => ClassifierKind::Gb,
            ClassifierModel::Knn(_) => ClassifierKind::Knn,
        }
    }

    /// Feature width the model was trained on.
    pub fn num_features(&self) -> usize {
        match self {
            ClassifierModel::Rf(m) => m.num_features,
            ClassifierModel::Lr(m) => m.weights.len(),
            ClassifierModel::Dt(m) => m.num_features,
            ClassifierModel::Svm(m) => m.weights.len(),
            ClassifierModel::Mlp(m) => m.num_features(),
            ClassifierModel::Ab(m) => m.num_features,
            ClassifierModel::Gb(m) => m.num_features,
            ClassifierModel::Knn(m) => m.num_features,
        }
    }

    /// Per-row malware probability in [0,1].
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.num_features() {
            return Err(Error::LengthMismatch {
                context: "detector input width",
                expected: self.num_features(),
                got: x.cols(),
            });
        }
        Ok(match self {
            ClassifierModel::Rf(m) => m.predict_proba(x),
            ClassifierModel::Lr(m) => m.predict_proba(x),
            ClassifierModel::Dt(m) => m.predict_proba(x),
            ClassifierModel::Svm(m) => m.predict_proba(x),
            ClassifierModel::Mlp(m) => m.predict_proba(x),
            ClassifierModel::Ab(m) => m.predict_proba(x),
            ClassifierModel::Gb(m) => m.predict_proba(x),
            ClassifierModel::Knn(m) => m.predict_proba(x),
        })
    }

    /// Hard labels: 1 iff probability strictly above the threshold.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| u8::from(p > DECISION_THRESHOLD))
            .collect())
    }

    /// Fraction of the given ground-truth-malware rows flagged as malware.
    pub fn true_positive_rate(&self, malware_x: &Matrix) -> Result<f64> {
        if malware_x.rows() == 0 {
            return Err(Error::EmptyInput {
                context: "true positive rate",
            });
        }
        let labels = self.predict(malware_x)?;
        Ok(labels.iter().map(|&l| l as usize).sum::<usize>() as f64 / labels.len() as f64)
    }
}

/// Trains a detector of the requested kind. Rejects empty or single-class
/// data; everything downstream may assume both classes are present.
pub fn fit(
    kind: ClassifierKind,
    params: &HyperParams,
    data: &LabeledDataset,
    seed: u64,
) -> Result<ClassifierModel> {
    if data.is_empty() {
        return Err(Error::EmptyInput {
            context: "detector training data",
        });
    }
    let malware = data.count_label(1);
    if malware == 0 || malware == data.len() {
        return Err(Error::SingleClassData);
    }
    Ok(match kind {
        ClassifierKind::Rf => ClassifierModel::Rf(RandomForest::fit(params, data, seed)?),
        ClassifierKind::Lr => ClassifierModel::Lr(LogisticRegression::fit(params, data)?),
        ClassifierKind::Dt => ClassifierModel::Dt(DecisionTree::fit(params, data)?),
        ClassifierKind::Svm => ClassifierModel::Svm(LinearSvm::fit(params, data, seed)?),
        ClassifierKind::Mlp => ClassifierModel::Mlp(MlpClassifier::fit(params, data, seed)?),
        ClassifierKind::Ab => ClassifierModel::Ab(AdaBoost::fit(params, data)?),
        ClassifierKind::Gb => ClassifierModel::Gb(GradientBoosting::fit(params, data)?),
        ClassifierKind::Knn => ClassifierModel::Knn(KnnClassifier::fit(params, data)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Tiny separable dataset: feature 0 marks malware, feature 1 benign.
    fn separable(n_per_class: usize) -> LabeledDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_per_class {
            // Mild pattern variety so trees have more than one path.
            let extra = (i % 2) as f64;
            rows.push(vec![1.0, 0.0, extra, 0.0]);
            labels.push(1);
            rows.push(vec![0.0, 1.0, 0.0, extra]);
            labels.push(0);
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        LabeledDataset::new(Matrix::from_vec(labels.len(), 4, flat).unwrap(), labels).unwrap()
    }

    #[test]
    fn every_kind_fits_and_separates_the_easy_set() {
        let data = separable(20);
        // At 40 rows the default MLP schedule is only 30 optimizer steps;
        // give it the same step count it would see at real scale.
        let mut params = HyperParams::default();
        params.mlp_epochs = 200;
        params.mlp_batch_size = 8;
        for kind in ClassifierKind::ALL {
            let model = fit(kind, &params, &data, 99).unwrap();
            let proba = model.predict_proba(data.features()).unwrap();
            assert!(proba.iter().all(|&p| (0.0..=1.0).contains(&p)), "{kind:?}");
            let predicted = model.predict(data.features()).unwrap();
            let correct = predicted
                .iter()
                .zip(data.labels())
                .filter(|(p, l)| p == l)
                .count();
            assert_eq!(correct, data.len(), "{kind:?} failed to separate");
        }
    }

    #[test]
    fn rejects_empty_and_single_class_data() {
        let empty = LabeledDataset::new(Matrix::zeros(0, 3), vec![]).unwrap();
        assert!(matches!(
            fit(ClassifierKind::Dt, &HyperParams::default(), &empty, 0),
            Err(Error::EmptyInput { .. })
        ));
        let single = LabeledDataset::new(
            Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            vec![1, 1],
        )
        .unwrap();
        assert!(matches!(
            fit(ClassifierKind::Dt, &HyperParams::default(), &single, 0),
            Err(Error::SingleClassData)
        ));
    }

    #[test]
    fn predict_rejects_width_mismatch() {
        let data = separable(5);
        let model = fit(ClassifierKind::Lr, &HyperParams::default(), &data, 1).unwrap();
        assert!(model.predict(&Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn threshold_tie_goes_to_benign() {
        // A KNN vote can land exactly on 0.5 with an even k.
        let data = separable(4);
        let mut params = HyperParams::default();
        params.knn_k = 2;
        let model = fit(ClassifierKind::Knn, &params, &data, 0).unwrap();
        // Query equidistant from one malware and one benign row.
        let query = Matrix::from_vec(1, 4, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let proba = model.predict_proba(&query).unwrap()[0];
        assert_eq!(proba, 0.5);
        assert_eq!(model.predict(&query).unwrap()[0], 0);
    }

    #[test]
    fn tpr_counts_flagged_fraction() {
        let data = separable(10);
        let model = fit(ClassifierKind::Dt, &HyperParams::default(), &data, 0).unwrap();
        let malware = data.rows_with_label(1);
        assert_eq!(model.true_positive_rate(&malware).unwrap(), 1.0);
        let benign = data.rows_with_label(0);
        assert_eq!(model.true_positive_rate(&benign).unwrap(), 0.0);
        assert!(model.true_positive_rate(&Matrix::zeros(0, 4)).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ClassifierKind::ALL {
            assert_eq!(ClassifierKind::from_name(kind.name()), Some(kind));
        }
        assert_eq!(ClassifierKind::from_name("rf"), Some(ClassifierKind::Rf));
        assert_eq!(ClassifierKind::from_name("nope"), None);
    }
}
