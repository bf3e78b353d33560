//! Detector and generator objectives assembled from per-set means.
//!
//! The detector losses average over each of their two sample sets
//! separately and then add the halves, which differs from a mean over the
//! pooled batch whenever the sets have different sizes. The helpers here
//! return both the scalar value and the gradient at the detector output, in
//! the row layout the caller stacked the sets in.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Loss family of a variant: least squares for the two LSGAN-style models,
/// cross-entropy for the plain baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetLossKind {
    LeastSquares,
    CrossEntropy,
}

/// Clamp for cross-entropy logs, matching the kernel's convention.
const CE_CLAMP: f64 = 1e-7;

/// Two-set detector loss on stacked predictions: the first `n_target_zero`
/// rows are pushed toward 0, the rest toward 1. Least squares gives
/// `½·mean₀[p²] + ½·mean₁[(p−1)²]`; cross-entropy gives
/// `mean₀[−ln(1−p)] + mean₁[−ln p]`. An empty set contributes nothing to
/// either value or gradient, so a batch the black-box labels uniformly
/// still trains on the half it produced.
pub fn two_set_loss(
    kind: SetLossKind,
    preds: &Matrix,
    n_target_zero: usize,
) -> Result<(f64, Matrix)> {
    if preds.cols() != 1 {
        return Err(Error::ShapeMismatch {
            context: "two-set loss predictions",
            expected: (preds.rows(), 1),
            got: (preds.rows(), preds.cols()),
        });
    }
    let n = preds.rows();
    if n == 0 {
        return Err(Error::EmptyInput {
            context: "two-set loss",
        });
    }
    if n_target_zero > n {
        return Err(Error::InvalidParam {
            name: "n_target_zero",
            reason: "exceeds the batch size",
        });
    }
    if kind == SetLossKind::CrossEntropy {
        for &p in preds.data() {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::ProbabilityOutOfRange { value: p });
            }
        }
    }
    let n_zero = n_target_zero;
    let n_one = n - n_zero;
    let mut value = 0.0;
    let mut grad = Matrix::zeros(n, 1);
    for i in 0..n {
        let p = preds.get(i, 0);
        let toward_zero = i < n_zero;
        let set_size = if toward_zero { n_zero } else { n_one } as f64;
        match kind {
            SetLossKind::LeastSquares => {
                let diff = if toward_zero { p } else { p - 1.0 };
                value += 0.5 * diff * diff / set_size;
                grad.set(i, 0, diff / set_size);
            }
            SetLossKind::CrossEntropy => {
                let pc = p.clamp(CE_CLAMP, 1.0 - CE_CLAMP);
                if toward_zero {
                    value += -libm::log(1.0 - pc) / set_size;
                    grad.set(i, 0, 1.0 / (1.0 - pc) / set_size);
                } else {
                    value += -libm::log(pc) / set_size;
                    grad.set(i, 0, -1.0 / pc / set_size);
                }
            }
        }
    }
    Ok((value, grad))
}

/// Generator objective on the combined detector outputs: least squares is
/// `mean[½·q²]` (toward 0), cross-entropy is `mean[−ln(1−q)]`.
pub fn generator_objective(kind: SetLossKind, combined: &Matrix) -> Result<(f64, Matrix)> {
    if combined.cols() != 1 {
        return Err(Error::ShapeMismatch {
            context: "generator objective",
            expected: (combined.rows(), 1),
            got: (combined.rows(), combined.cols()),
        });
    }
    let n = combined.rows();
    if n == 0 {
        return Err(Error::EmptyInput {
            context: "generator objective",
        });
    }
    let mut value = 0.0;
    let mut grad = Matrix::zeros(n, 1);
    for i in 0..n {
        let q = combined.get(i, 0);
        match kind {
            SetLossKind::LeastSquares => {
                value += 0.5 * q * q / n as f64;
                grad.set(i, 0, q / n as f64);
            }
            SetLossKind::CrossEntropy => {
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::ProbabilityOutOfRange { value: q });
                }
                let qc = q.clamp(CE_CLAMP, 1.0 - CE_CLAMP);
                value += -libm::log(1.0 - qc) / n as f64;
                grad.set(i, 0, 1.0 / (1.0 - qc) / n as f64);
            }
        }
    }
    Ok((value, grad))
}

/// α-weighted combination of the two detector losses.
pub fn combined_d_loss(l_d1: f64, l_d2: f64, alpha: f64) -> f64 {
    alpha * l_d1 + (1.0 - alpha) * l_d2
}
