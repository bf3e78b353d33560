//! Adam optimizer with bias correction.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

use super::network::{Gradients, Network};

/// Per-network Adam state. Moment buffers mirror the network's parameter
/// blocks (dense weights and bias, batch-norm gamma and beta).
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step_count: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl Adam {
    /// Default GAN-training configuration: lr 1e-3, betas (0.9, 0.999).
    pub fn new(net: &Network, learning_rate: f64) -> Self {
        let shapes: Vec<Vec<f64>> = net
            .param_blocks()
            .iter()
            .map(|b| vec![0.0; b.len()])
            .collect();
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step_count: 0,
            first_moment: shapes.clone(),
            second_moment: shapes,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update. Gradient blocks must match the network's
    /// parameter blocks exactly.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        let grad_blocks = grads.blocks();
        let mut param_blocks = net.param_blocks_mut();
        if grad_blocks.len() != param_blocks.len()
            || grad_blocks
                .iter()
                .zip(&param_blocks)
                .any(|(g, p)| g.len() != p.len())
        {
            return Err(Error::LengthMismatch {
                context: "adam gradient blocks",
                expected: param_blocks.len(),
                got: grad_blocks.len(),
            });
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - libm::pow(self.beta1, t as f64);
        let bias2 = 1.0 - libm::pow(self.beta2, t as f64);
        for ((params, grads), (m, v)) in param_blocks
            .iter_mut()
            .zip(&grad_blocks)
            .zip(self.first_moment.iter_mut().zip(&mut self.second_moment))
        {
            for i in 0..params.len() {
                let g = grads[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                params[i] -= self.learning_rate * m_hat / (libm::sqrt(v_hat) + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::numnet::network::{Layer, LayerGrads};
    use crate::numnet::DenseLayer;

    fn scalar_net(value: f64) -> Network {
        let dense = DenseLayer::from_parts(
            Matrix::from_vec(1, 1, vec![value]).unwrap(),
            vec![0.0],
        )
        .unwrap();
        Network::new(vec![Layer::Dense(dense)]).unwrap()
    }

    fn scalar_grads(dw: f64) -> Gradients {
        Gradients {
            layers: vec![LayerGrads::Dense {
                d_weights: Matrix::from_vec(1, 1, vec![dw]).unwrap(),
                d_bias: vec![0.0],
            }],
        }
    }

    #[test]
    fn zero_gradient_leaves_params_untouched() {
        let mut net = scalar_net(0.7);
        let mut adam = Adam::new(&net, 1e-3);
        adam.step(&mut net, &scalar_grads(0.0)).unwrap();
        assert_eq!(adam.step_count(), 1);
        assert_eq!(net.param_blocks()[0][0], 0.7);
    }

    #[test]
    fn updates_oppose_gradient_sign() {
        let mut net = scalar_net(0.0);
        let mut adam = Adam::new(&net, 1e-3);
        for _ in 0..50 {
            adam.step(&mut net, &scalar_grads(2.5)).unwrap();
        }
        assert!(net.param_blocks()[0][0] < 0.0);

        let mut net = scalar_net(0.0);
        let mut adam = Adam::new(&net, 1e-3);
        for _ in 0..50 {
            adam.step(&mut net, &scalar_grads(-2.5)).unwrap();
        }
        assert!(net.param_blocks()[0][0] > 0.0);
    }

    #[test]
    fn single_step_matches_hand_computed_formula() {
        // One step from w = 1.0 with g = 0.5, lr = 1e-3:
        //   m = 0.1 * 0.5 = 0.05          m_hat = 0.05 / (1 - 0.9)   = 0.5
        //   v = 0.001 * 0.25 = 2.5e-4     v_hat = 2.5e-4 / (1-0.999) = 0.25
        //   w' = 1 - 1e-3 * 0.5 / (0.5 + 1e-8)
        let mut net = scalar_net(1.0);
        let mut adam = Adam::new(&net, 1e-3);
        adam.step(&mut net, &scalar_grads(0.5)).unwrap();
        let expected = 1.0 - 1e-3 * 0.5 / (0.25f64.sqrt() + 1e-8);
        assert!((net.param_blocks()[0][0] - expected).abs() < 1e-15);
    }

    #[test]
    fn rejects_mismatched_gradient_shapes() {
        let mut net = scalar_net(1.0);
        let mut adam = Adam::new(&net, 1e-3);
        let bad = Gradients {
            layers: vec![LayerGrads::Dense {
                d_weights: Matrix::from_vec(1, 2, vec![0.1, 0.2]).unwrap(),
                d_bias: vec![0.0],
            }],
        };
        assert!(adam.step(&mut net, &bad).is_err());
    }
}
