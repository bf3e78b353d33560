//! Boosted depth-1 stumps: discrete AdaBoost and gradient boosting with the
//! logistic loss.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::LabeledDataset;
use crate::error::Result;
use crate::matrix::Matrix;

use super::HyperParams;

/// Floor for boosting errors and curvatures so weights stay finite.
const EPS: f64 = 1e-12;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// A one-feature decision stump: rows with the feature absent score `left`,
/// rows with it present score `right`. AdaBoost stores class labels (0/1) in
/// the leaves; gradient boosting stores real-valued leaf contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct Stump {
    pub feature: u32,
    pub left: f64,
    pub right: f64,
}

impl Stump {
    fn eval(&self, row: &[f64]) -> f64 {
        if row[self.feature as usize] > 0.5 {
            self.right
        } else {
            self.left
        }
    }
}

/// Discrete AdaBoost over stumps.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaBoost {
    pub stumps: Vec<Stump>,
    pub alphas: Vec<f64>,
    pub num_features: usize,
    /// Training malware fraction, used only if boosting found no usable
    /// stump at all.
    pub prior: f64,
}

impl AdaBoost {
    pub fn fit(params: &HyperParams, data: &LabeledDataset) -> Result<Self> {
        let x = data.features();
        let y = data.labels();
        let (n, m) = (x.rows(), x.cols());
        let prior = data.count_label(1) as f64 / n as f64;

        let mut weights = vec![1.0 / n as f64; n];
        let mut stumps = Vec::new();
        let mut alphas: Vec<f64> = Vec::new();
        for _ in 0..params.ab_stumps {
            // Weighted error of the identity-polarity stump (absent=benign,
            // present=malware) per feature; the flipped stump's error is its
            // complement.
            let mut err_identity = vec![0.0; m];
            for i in 0..n {
                let w = weights[i];
                let row = x.row(i);
                if y[i] == 1 {
                    // Misclassified by identity polarity where feature absent.
                    for (e, &v) in err_identity.iter_mut().zip(row) {
                        *e += w * (1.0 - v);
                    }
                } else {
                    for (e, &v) in err_identity.iter_mut().zip(row) {
                        *e += w * v;
                    }
                }
            }
            let mut best: Option<(usize, bool, f64)> = None; // (feature, flipped, error)
            for (j, &e) in err_identity.iter().enumerate() {
                for (flipped, err) in [(false, e), (true, 1.0 - e)] {
                    let better = match best {
                        None => true,
                        Some((_, _, be)) => err < be,
                    };
                    if better {
                        best = Some((j, flipped, err));
                    }
                }
            }
            let (feature, flipped, error) = best.expect("at least one feature");
            if error >= 0.5 - EPS {
                break; // nothing better than chance remains
            }
            let error = error.max(EPS);
            let alpha = libm::log((1.0 - error) / error);
            let stump = if flipped {
                Stump { feature: feature as u32, left: 1.0, right: 0.0 }
            } else {
                Stump { feature: feature as u32, left: 0.0, right: 1.0 }
            };

            let mut total = 0.0;
            for i in 0..n {
                let predicted = stump.eval(x.row(i));
                if (predicted > 0.5) != (y[i] == 1) {
                    weights[i] *= libm::exp(alpha);
                }
                total += weights[i];
            }
            for w in &mut weights {
                *w /= total;
            }
            stumps.push(stump);
            alphas.push(alpha);
            if error <= EPS {
                break; // a perfect stump ends the ensemble
            }
        }
        Ok(AdaBoost {
            stumps,
            alphas,
            num_features: m,
            prior,
        })
    }

    /// Weight fraction of stumps voting malware.
    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        let total: f64 = self.alphas.iter().sum();
        (0..x.rows())
            .map(|r| {
                if total <= 0.0 {
                    return self.prior;
                }
                let row = x.row(r);
                let vote: f64 = self
                    .stumps
                    .iter()
                    .zip(&self.alphas)
                    .filter(|(s, _)| s.eval(row) > 0.5)
                    .map(|(_, &a)| a)
                    .sum();
                vote / total
            })
            .collect()
    }
}

/// Gradient boosting on the logistic loss: stumps fit to residuals with
/// Newton-step leaf values, shrinkage folded into the stored leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBoosting {
    pub stumps: Vec<Stump>,
    /// Prior log-odds the ensemble starts from.
    pub intercept: f64,
    pub num_features: usize,
}

impl GradientBoosting {
    pub fn fit(params: &HyperParams, data: &LabeledDataset) -> Result<Self> {
        let x = data.features();
        let y = data.labels();
        let (n, m) = (x.rows(), x.cols());
        let prior = data.count_label(1) as f64 / n as f64;
        let intercept = libm::log(prior / (1.0 - prior));

        // Per-feature presence counts never change; hoist them.
        let count_present = x.col_sums();

        let mut score = vec![intercept; n];
        let mut stumps = Vec::new();
        for _ in 0..params.gb_stumps {
            let mut residual_present = vec![0.0; m];
            let mut curvature_present = vec![0.0; m];
            let mut residual_total = 0.0;
            let mut curvature_total = 0.0;
            let mut residuals = vec![0.0; n];
            let mut curvatures = vec![0.0; n];
            for i in 0..n {
                let p = sigmoid(score[i]);
                let r = y[i] as f64 - p;
                let c = p * (1.0 - p);
                residuals[i] = r;
                curvatures[i] = c;
                residual_total += r;
                curvature_total += c;
                let row = x.row(i);
                for j in 0..m {
                    residual_present[j] += r * row[j];
                    curvature_present[j] += c * row[j];
                }
            }

            // Squared-error gain of splitting residuals on feature j:
            // s1^2/n1 + s0^2/n0 (larger is better); constant features are
            // not splittable.
            let mut best: Option<(usize, f64)> = None;
            for j in 0..m {
                let n1 = count_present[j];
                let n0 = n as f64 - n1;
                if n1 == 0.0 || n0 == 0.0 {
                    continue;
                }
                let s1 = residual_present[j];
                let s0 = residual_total - s1;
                let gain = s1 * s1 / n1 + s0 * s0 / n0;
                if best.map_or(true, |(_, g)| gain > g) {
                    best = Some((j, gain));
                }
            }
            let Some((feature, _)) = best else {
                break; // every feature is constant
            };

            let h1 = curvature_present[feature].max(EPS);
            let h0 = (curvature_total - curvature_present[feature]).max(EPS);
            let s1 = residual_present[feature];
            let s0 = residual_total - s1;
            let stump = Stump {
                feature: feature as u32,
                left: params.gb_shrinkage * (s0 / h0),
                right: params.gb_shrinkage * (s1 / h1),
            };
            for i in 0..n {
                score[i] += stump.eval(x.row(i));
            }
            stumps.push(stump);
        }
        Ok(GradientBoosting {
            stumps,
            intercept,
            num_features: m,
        })
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .map(|r| {
                let row = x.row(r);
                let score: f64 =
                    self.intercept + self.stumps.iter().map(|s| s.eval(row)).sum::<f64>();
                sigmoid(score)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> LabeledDataset {
        let cols = rows[0].len();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        LabeledDataset::new(Matrix::from_vec(labels.len(), cols, flat).unwrap(), labels).unwrap()
    }

    fn two_signal_set() -> LabeledDataset {
        // Feature 0 is right on 3/4 of rows, feature 1 on all of them; both
        // polarities matter for the reweighting rounds.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..16 {
            let label = u8::from(i % 2 == 0);
            let f0 = if i % 8 == 1 { label ^ 1 } else { label };
            rows.push(vec![f0 as f64, label as f64, ((i / 2) % 2) as f64]);
            labels.push(label);
        }
        dataset(rows, labels)
    }

    #[test]
    fn adaboost_reaches_perfect_training_accuracy_with_a_clean_feature() {
        let data = two_signal_set();
        let ab = AdaBoost::fit(&HyperParams::default(), &data).unwrap();
        let probs = ab.predict_proba(data.features());
        for (p, &l) in probs.iter().zip(data.labels()) {
            assert_eq!(u8::from(*p > 0.5), l, "proba {p}");
        }
        // The clean feature is found immediately and ends the ensemble.
        assert_eq!(ab.stumps.len(), 1);
        assert_eq!(ab.stumps[0].feature, 1);
    }

    #[test]
    fn adaboost_probabilities_stay_bounded() {
        let data = two_signal_set();
        let ab = AdaBoost::fit(&HyperParams::default(), &data).unwrap();
        let probs = ab.predict_proba(data.features());
        assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
        assert!(ab.alphas.iter().all(|a| a.is_finite()));
    }

    #[test]
    fn gradient_boosting_fits_and_orders_by_signal() {
        let data = two_signal_set();
        let gb = GradientBoosting::fit(&HyperParams::default(), &data).unwrap();
        let probs = gb.predict_proba(data.features());
        for (p, &l) in probs.iter().zip(data.labels()) {
            assert_eq!(u8::from(*p > 0.5), l, "proba {p}");
        }
    }

    #[test]
    fn gradient_boosting_intercept_matches_prior_log_odds() {
        // 3 malware / 1 benign: intercept = ln(0.75 / 0.25) = ln 3.
        let data = dataset(
            vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![0.0, 0.0]],
            vec![1, 1, 1, 0],
        );
        let gb = GradientBoosting::fit(&HyperParams::default(), &data).unwrap();
        assert!((gb.intercept - 3.0f64.ln()).abs() < 1e-12);
    }
}
