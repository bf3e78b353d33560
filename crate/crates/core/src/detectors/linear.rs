//! Linear detectors: logistic regression and a Pegasos-trained linear SVM
//! with Platt-calibrated probabilities.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::dataset::LabeledDataset;
use crate::error::Result;
use crate::matrix::Matrix;
use crate::seeds;

use super::HyperParams;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Logistic regression trained by full-batch gradient descent.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticRegression {
    pub fn fit(params: &HyperParams, data: &LabeledDataset) -> Result<Self> {
        let x = data.features();
        let y = data.labels();
        let (n, m) = (x.rows(), x.cols());
        let inv_n = 1.0 / n as f64;

        let mut weights = vec![0.0; m];
        let mut bias = 0.0;
        let mut grad = vec![0.0; m];
        for _ in 0..params.lr_iterations {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_bias = 0.0;
            for i in 0..n {
                let row = x.row(i);
                let margin: f64 = row.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>() + bias;
                let residual = sigmoid(margin) - y[i] as f64;
                for (g, &v) in grad.iter_mut().zip(row) {
                    *g += residual * v;
                }
                grad_bias += residual;
            }
            for (w, &g) in weights.iter_mut().zip(&grad) {
                *w -= params.lr_learning_rate * g * inv_n;
            }
            bias -= params.lr_learning_rate * grad_bias * inv_n;
        }
        Ok(LogisticRegression { weights, bias })
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .map(|r| {
                let margin: f64 =
                    x.row(r).iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>() + self.bias;
                sigmoid(margin)
            })
            .collect()
    }
}

/// Linear SVM trained with the Pegasos subgradient solver; raw margins are
/// mapped to probabilities by Platt scaling fitted on the training margins.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Platt slope applied to the margin.
    pub calib_slope: f64,
    /// Platt intercept.
    pub calib_intercept: f64,
}

impl LinearSvm {
    pub fn fit(params: &HyperParams, data: &LabeledDataset, seed: u64) -> Result<Self> {
        let x = data.features();
        let y = data.labels();
        let (n, m) = (x.rows(), x.cols());
        let lambda = params.svm_lambda;

        let mut weights = vec![0.0; m];
        let mut bias = 0.0;
        let mut order: Vec<usize> = (0..n).collect();
        let mut t = 1u64;
        for epoch in 0..params.svm_epochs {
            let mut rng = seeds::child_rng(seed, "svm-shuffle", epoch as u64);
            order.shuffle(&mut rng);
            for &i in &order {
                let eta = 1.0 / (lambda * t as f64);
                let label = if y[i] == 1 { 1.0 } else { -1.0 };
                let row = x.row(i);
                let margin: f64 =
                    row.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>() + bias;
                let decay = 1.0 - eta * lambda;
                for w in &mut weights {
                    *w *= decay;
                }
                if label * margin < 1.0 {
                    let step = eta * label;
                    for (w, &v) in weights.iter_mut().zip(row) {
                        *w += step * v;
                    }
                    bias += step;
                }
                t += 1;
            }
        }

        let margins: Vec<f64> = (0..n)
            .map(|i| {
                x.row(i).iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>() + bias
            })
            .collect();
        let (calib_slope, calib_intercept) = platt_fit(&margins, y);
        Ok(LinearSvm {
            weights,
            bias,
            calib_slope,
            calib_intercept,
        })
    }

    pub fn margins(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .map(|r| {
                x.row(r).iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>() + self.bias
            })
            .collect()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        self.margins(x)
            .into_iter()
            .map(|m| sigmoid(self.calib_slope * m + self.calib_intercept))
            .collect()
    }
}

/// Fits `sigmoid(slope * margin + intercept)` to the labels by Newton's
/// method on the cross-entropy, using Platt's smoothed targets
/// `(n_pos + 1) / (n_pos + 2)` and `1 / (n_neg + 2)` so perfectly separated
/// margins do not drive the slope to infinity.
fn platt_fit(margins: &[f64], labels: &[u8]) -> (f64, f64) {
    let n = margins.len();
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let n_neg = n as f64 - n_pos;
    let target_pos = (n_pos + 1.0) / (n_pos + 2.0);
    let target_neg = 1.0 / (n_neg + 2.0);

    let mut slope = 1.0;
    let mut intercept = 0.0;
    for _ in 0..50 {
        // Gradient and Hessian of the negative log-likelihood.
        let (mut g_s, mut g_i) = (0.0, 0.0);
        let (mut h_ss, mut h_si, mut h_ii) = (0.0, 0.0, 0.0);
        for (&m, &l) in margins.iter().zip(labels) {
            let target = if l == 1 { target_pos } else { target_neg };
            let p = sigmoid(slope * m + intercept);
            let diff = p - target;
            g_s += diff * m;
            g_i += diff;
            let w = (p * (1.0 - p)).max(1e-12);
            h_ss += w * m * m;
            h_si += w * m;
            h_ii += w;
        }
        // Mild ridge keeps the 2x2 system invertible on degenerate margins.
        h_ss += 1e-9;
        h_ii += 1e-9;
        let det = h_ss * h_ii - h_si * h_si;
        let step_s = (h_ii * g_s - h_si * g_i) / det;
        let step_i = (h_ss * g_i - h_si * g_s) / det;
        slope -= step_s;
        intercept -= step_i;
        if step_s.abs().max(step_i.abs()) < 1e-10 {
            break;
        }
    }
    (slope, intercept)
}
