//! Batch losses and their gradients with respect to predictions.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Log arguments are clamped to this band so cross-entropy never hits
/// `ln(0)`.
const BCE_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Mean over the batch of `0.5 * (pred - target)^2`.
    LeastSquares,
    /// Mean over the batch of `-[t*ln(p) + (1-t)*ln(1-p)]`; predictions must
    /// lie strictly inside (0,1).
    BinaryCrossEntropy,
}

/// Computes the scalar loss and its gradient with respect to `pred`.
pub fn loss(kind: LossKind, pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if (pred.rows(), pred.cols()) != (target.rows(), target.cols()) {
        return Err(Error::ShapeMismatch {
            context: "loss prediction vs target",
            expected: (target.rows(), target.cols()),
            got: (pred.rows(), pred.cols()),
        });
    }
    let n = pred.rows() * pred.cols();
    if n == 0 {
        return Err(Error::EmptyInput { context: "loss" });
    }
    let inv_n = 1.0 / n as f64;
    match kind {
        LossKind::LeastSquares => {
            let mut value = 0.0;
            let mut d_pred = Matrix::zeros(pred.rows(), pred.cols());
            for (i, (&p, &t)) in pred.data().iter().zip(target.data()).enumerate() {
                let diff = p - t;
                value += 0.5 * diff * diff;
                d_pred.data_mut()[i] = diff * inv_n;
            }
            Ok((value * inv_n, d_pred))
        }
        LossKind::BinaryCrossEntropy => {
            if pred.data().iter().any(|&p| !(p > 0.0 && p < 1.0)) {
                return Err(Error::ProbabilityOutOfRange {
                    value: *pred
                        .data()
                        .iter()
                        .find(|&&p| !(p > 0.0 && p < 1.0))
                        .expect("just found one"),
                });
            }
            let mut value = 0.0;
            let mut d_pred = Matrix::zeros(pred.rows(), pred.cols());
            for (i, (&p, &t)) in pred.data().iter().zip(target.data()).enumerate() {
                let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
                value -= t * libm::log(p) + (1.0 - t) * libm::log(1.0 - p);
                d_pred.data_mut()[i] = ((1.0 - t) / (1.0 - p) - t / p) * inv_n;
            }
            Ok((value * inv_n, d_pred))
        }
    }
}
