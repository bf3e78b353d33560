//! Central-difference verification of the analytic gradients.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::loss::{loss, LossKind};
use super::network::{Mode, Network};

/// Outcome of a gradient check.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub passed: bool,
}

fn eval_loss(net: &mut Network, kind: LossKind, x: &Matrix, target: &Matrix) -> Result<f64> {
    let (pred, _) = net.forward(x, Mode::Train)?;
    Ok(loss(kind, &pred, target)?.0)
}

/// Compares analytic parameter gradients against central differences
/// `(L(p+h) - L(p-h)) / 2h` for every parameter. Relative error per
/// parameter is `|a - n| / max(|a|, |n|, 1)`; the report carries the worst
/// one and whether it stayed at or under `tol`. The passed network is never
/// mutated; all perturbation happens on an internal clone.
pub fn grad_check(
    net: &Network,
    kind: LossKind,
    x: &Matrix,
    target: &Matrix,
    h: f64,
    tol: f64,
) -> Result<GradCheckReport> {
    if h <= 0.0 {
        return Err(Error::InvalidParam {
            name: "h",
            reason: "step must be positive",
        });
    }
    let mut scratch = net.clone();

    let analytic: Vec<f64> = {
        let (pred, cache) = scratch.forward(x, Mode::Train)?;
        let (_, d_pred) = loss(kind, &pred, target)?;
        let (grads, _) = scratch.backward(&cache, &d_pred)?;
        grads.blocks().iter().flat_map(|b| b.iter().copied()).collect()
    };

    let block_lens: Vec<usize> = scratch.param_blocks().iter().map(|b| b.len()).collect();
    let mut max_rel = 0.0f64;
    let mut flat_index = 0;
    for (block, &len) in block_lens.iter().enumerate() {
        for i in 0..len {
            let original = scratch.param_blocks()[block][i];
            scratch.param_blocks_mut()[block][i] = original + h;
            let loss_plus = eval_loss(&mut scratch, kind, x, target)?;
            scratch.param_blocks_mut()[block][i] = original - h;
            let loss_minus = eval_loss(&mut scratch, kind, x, target)?;
            scratch.param_blocks_mut()[block][i] = original;

            let numeric = (loss_plus - loss_minus) / (2.0 * h);
            let a = analytic[flat_index];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            if rel > max_rel {
                max_rel = rel;
            }
            flat_index += 1;
        }
    }
    Ok(GradCheckReport {
        max_relative_error: max_rel,
        passed: max_rel <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numnet::{ActivationKind, BatchNormLayer, DenseLayer, Layer};
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        for v in m.data_mut() {
            *v = rng.gen_range(-1.5..1.5);
        }
        m
    }

    fn binary_targets(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        for v in m.data_mut() {
            *v = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
        }
        m
    }

    #[test]
    fn linear_net_least_squares_is_nearly_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Network::new(vec![Layer::Dense(DenseLayer::glorot(5, 2, &mut rng))]).unwrap();
        let x = random_matrix(6, 5, &mut rng);
        let target = random_matrix(6, 2, &mut rng);
        let report =
            grad_check(&net, LossKind::LeastSquares, &x, &target, 1e-5, 1e-6).unwrap();
        assert!(report.passed, "max rel err {}", report.max_relative_error);
    }

    #[test]
    fn generator_shaped_stack_passes() {
        // Mirrors the adversarial generator's architecture at toy scale:
        // 8 feature + 4 noise inputs, three hidden blocks of 16, sigmoid out.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut layers = Vec::new();
        let mut width = 12;
        for _ in 0..3 {
            layers.push(Layer::Dense(DenseLayer::glorot(width, 16, &mut rng)));
            layers.push(Layer::Activation(ActivationKind::LeakyReLU(0.2)));
            layers.push(Layer::BatchNorm(BatchNormLayer::new(16)));
            width = 16;
        }
        layers.push(Layer::Dense(DenseLayer::glorot(width, 8, &mut rng)));
        layers.push(Layer::Activation(ActivationKind::Sigmoid));
        let net = Network::new(layers).unwrap();
        let x = random_matrix(10, 12, &mut rng);
        let target = binary_targets(10, 8, &mut rng);
        let report =
            grad_check(&net, LossKind::LeastSquares, &x, &target, 1e-5, 1e-4).unwrap();
        assert!(report.passed, "max rel err {}", report.max_relative_error);
    }

    #[test]
    fn batch_norm_in_train_mode_passes_with_coarse_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let net = Network::new(vec![
            Layer::Dense(DenseLayer::glorot(4, 6, &mut rng)),
            Layer::BatchNorm(BatchNormLayer::new(6)),
            Layer::Activation(ActivationKind::LeakyReLU(0.2)),
            Layer::Dense(DenseLayer::glorot(6, 1, &mut rng)),
            Layer::Activation(ActivationKind::Sigmoid),
        ])
        .unwrap();
        let x = random_matrix(8, 4, &mut rng);
        let target = binary_targets(8, 1, &mut rng);
        let report =
            grad_check(&net, LossKind::LeastSquares, &x, &target, 1e-4, 1e-3).unwrap();
        assert!(report.passed, "max rel err {}", report.max_relative_error);
    }

    #[test]
    fn does_not_mutate_the_checked_network() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = Network::new(vec![
            Layer::Dense(DenseLayer::glorot(3, 4, &mut rng)),
            Layer::BatchNorm(BatchNormLayer::new(4)),
            Layer::Dense(DenseLayer::glorot(4, 1, &mut rng)),
            Layer::Activation(ActivationKind::Sigmoid),
        ])
        .unwrap();
        let before = net.clone();
        let x = random_matrix(5, 3, &mut rng);
        let target = binary_targets(5, 1, &mut rng);
        grad_check(&net, LossKind::LeastSquares, &x, &target, 1e-5, 1e-4).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn randomized_nets_pass_for_both_losses_and_all_layer_kinds() {
        // Property sweep: 24 seeded architectures mixing dense, batch norm,
        // LeakyReLU, and sigmoid, checked under both losses.
        for seed in 0..24u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let depth = rng.gen_range(1..=3);
            let mut width = rng.gen_range(2..=5);
            let x = random_matrix(rng.gen_range(3..=7), width, &mut rng);
            let mut layers = Vec::new();
            for _ in 0..depth {
                let next = rng.gen_range(2..=5);
                layers.push(Layer::Dense(DenseLayer::glorot(width, next, &mut rng)));
                if rng.gen_bool(0.5) {
                    layers.push(Layer::Activation(ActivationKind::LeakyReLU(
                        rng.gen_range(0.05..0.5),
                    )));
                }
                if rng.gen_bool(0.5) {
                    layers.push(Layer::BatchNorm(BatchNormLayer::new(next)));
                }
                width = next;
            }
            layers.push(Layer::Dense(DenseLayer::glorot(width, 1, &mut rng)));
            layers.push(Layer::Activation(ActivationKind::Sigmoid));
            let net = Network::new(layers).unwrap();
            let target = binary_targets(x.rows(), 1, &mut rng);
            for kind in [LossKind::LeastSquares, LossKind::BinaryCrossEntropy] {
                let report = grad_check(&net, kind, &x, &target, 1e-5, 1e-4).unwrap();
                assert!(
                    report.passed,
                    "seed {seed} {kind:?} max rel err {}",
                    report.max_relative_error
                );
            }
        }
    }
}
