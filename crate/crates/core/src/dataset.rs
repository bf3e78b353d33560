//! Labeled binary-feature datasets.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A feature matrix paired with one 0/1 label per row.
///
/// Features are binary indicators (present/absent), stored as `f64` so they
/// feed the numeric pipeline directly.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Matrix,
    labels: Vec<u8>,
}

impl LabeledDataset {
    /// Builds a dataset, validating that every feature value is exactly 0.0
    /// or 1.0 and every label is 0 or 1.
    pub fn new(features: Matrix, labels: Vec<u8>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::LengthMismatch {
                context: "dataset labels",
                expected: features.rows(),
                got: labels.len(),
            });
        }
        if let Some((row, col, value)) = features.find_non_binary() {
            return Err(Error::NonBinaryValue { row, col, value });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidParam {
                name: "labels",
                reason: "label other than 0/1",
            });
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    /// Rows whose label matches `label`, as a new matrix.
    pub fn rows_with_label(&self, label: u8) -> Matrix {
        let idx: Vec<usize> = self
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect();
        self.features.select_rows(&idx)
    }

    /// Count of rows carrying `label`.
    pub fn count_label(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Keeps only the listed feature columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let features = self.features.select_cols(cols)?;
        Ok(Self { features, labels: self.labels.clone() })
    }

    /// Consumes the dataset, returning its parts.
    pub fn into_parts(self) -> (Matrix, Vec<u8>) {
        (self.features, self.labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_binary_features() {
        let m = Matrix::from_vec(2, 2, alloc::vec![0.0, 1.0, 0.5, 1.0]).unwrap();
        let err = LabeledDataset::new(m, alloc::vec![0, 1]).unwrap_err();
        match err {
            Error::NonBinaryValue { row, col, value } => {
                assert_eq!((row, col), (1, 0));
                assert_eq!(value, 0.5);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_labels_and_length() {
        let m = Matrix::from_vec(2, 1, alloc::vec![0.0, 1.0]).unwrap();
        assert!(LabeledDataset::new(m.clone(), alloc::vec![0, 2]).is_err());
        assert!(LabeledDataset::new(m, alloc::vec![0]).is_err());
    }

    #[test]
    fn label_selection() {
        let m = Matrix::from_vec(3, 2, alloc::vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let ds = LabeledDataset::new(m, alloc::vec![1, 0, 1]).unwrap();
        assert_eq!(ds.count_label(1), 2);
        let mal = ds.rows_with_label(1);
        assert_eq!(mal.rows(), 2);
        assert_eq!(mal.row(1), &[1.0, 1.0]);
    }
}
