//! Individual layer types and their forward/backward math.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Keeps sigmoid outputs strictly inside (0,1) even when the input
/// saturates past f64 resolution.
const SIGMOID_CLAMP: f64 = 1e-15;

/// Elementwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind {
    /// `x` for positive inputs, `slope * x` otherwise. Slope must sit in (0,1).
    LeakyReLU(f64),
    /// Logistic function, output clamped to stay strictly inside (0,1).
    Sigmoid,
}

impl ActivationKind {
    pub fn validate(self) -> Result<()> {
        if let ActivationKind::LeakyReLU(slope) = self {
            if !(slope > 0.0 && slope < 1.0) {
                return Err(Error::InvalidParam {
                    name: "leaky_relu_slope",
                    reason: "must lie in (0,1)",
                });
            }
        }
        Ok(())
    }

    pub fn forward(self, x: &Matrix) -> Matrix {
        match self {
            ActivationKind::LeakyReLU(slope) => {
                x.map(|v| if v > 0.0 { v } else { slope * v })
            }
            ActivationKind::Sigmoid => x.map(|v| {
                let y = 1.0 / (1.0 + libm::exp(-v));
                y.clamp(SIGMOID_CLAMP, 1.0 - SIGMOID_CLAMP)
            }),
        }
    }

    /// Input gradient. LeakyReLU differentiates against the cached input,
    /// sigmoid against the cached output (`y * (1 - y)`).
    pub fn backward(self, d_out: &Matrix, input: &Matrix, output: &Matrix) -> Matrix {
        let mut dx = d_out.clone();
        match self {
            ActivationKind::LeakyReLU(slope) => {
                for (d, &x) in dx.data_mut().iter_mut().zip(input.data()) {
                    if x <= 0.0 {
                        *d *= slope;
                    }
                }
            }
            ActivationKind::Sigmoid => {
                for (d, &y) in dx.data_mut().iter_mut().zip(output.data()) {
                    *d *= y * (1.0 - y);
                }
            }
        }
        dx
    }
}

/// Fully connected layer computing `Y = X · Wᵀ + b`.
///
/// Weights are stored `out × in` so a row holds one output unit's fan-in.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    /// Glorot-uniform initialization: weights drawn from
    /// `±sqrt(6 / (fan_in + fan_out))`, bias zero.
    pub fn glorot<R: Rng>(input: usize, output: usize, rng: &mut R) -> Self {
        let limit = libm::sqrt(6.0 / (input + output) as f64);
        let mut weights = Matrix::zeros(output, input);
        for w in weights.data_mut() {
            *w = rng.gen_range(-limit..limit);
        }
        DenseLayer {
            weights,
            bias: vec![0.0; output],
        }
    }

    pub fn from_parts(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if weights.rows() != bias.len() {
            return Err(Error::LengthMismatch {
                context: "dense bias",
                expected: weights.rows(),
                got: bias.len(),
            });
        }
        Ok(DenseLayer { weights, bias })
    }

    pub fn input_width(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_width(&self) -> usize {
        self.weights.rows()
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        let mut y = x.matmul_rhs_transposed(&self.weights);
        y.add_row_broadcast(&self.bias);
        y
    }

    /// Returns `(dW, db, dX)` for upstream gradient `d_out`.
    pub fn backward(&self, x: &Matrix, d_out: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
        let d_weights = d_out.matmul_self_transposed(x);
        let d_bias = d_out.col_sums();
        let d_input = d_out.matmul(&self.weights);
        (d_weights, d_bias, d_input)
    }
}

/// Batch normalization over the feature axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormLayer {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

/// Intermediates needed by the batch-norm backward pass.
#[derive(Debug, Clone)]
pub struct BnCache {
    pub x_hat: Matrix,
    pub inv_std: Vec<f64>,
}

impl BatchNormLayer {
    pub fn new(width: usize) -> Self {
        BatchNormLayer {
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
            momentum: 0.9,
            epsilon: 1e-5,
        }
    }

    pub fn width(&self) -> usize {
        self.gamma.len()
    }

    /// Train-mode forward: normalizes with batch statistics (biased `1/n`
    /// variance) and folds them into the running estimates.
    pub fn forward_train(&mut self, x: &Matrix) -> (Matrix, BnCache) {
        let (n, w) = (x.rows(), x.cols());
        let inv_n = 1.0 / n as f64;

        let mut mean = x.col_sums();
        for m in &mut mean {
            *m *= inv_n;
        }
        let mut var = vec![0.0; w];
        for r in 0..n {
            for (j, &v) in x.row(r).iter().enumerate() {
                let d = v - mean[j];
                var[j] += d * d;
            }
        }
        for v in &mut var {
            *v *= inv_n;
        }

        for j in 0..w {
            self.running_mean[j] =
                self.momentum * self.running_mean[j] + (1.0 - self.momentum) * mean[j];
            self.running_var[j] =
                self.momentum * self.running_var[j] + (1.0 - self.momentum) * var[j];
        }

        let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / libm::sqrt(v + self.epsilon)).collect();
        let mut x_hat = Matrix::zeros(n, w);
        let mut y = Matrix::zeros(n, w);
        for r in 0..n {
            let src = x.row(r);
            for j in 0..w {
                let xh = (src[j] - mean[j]) * inv_std[j];
                x_hat.set(r, j, xh);
                y.set(r, j, self.gamma[j] * xh + self.beta[j]);
            }
        }
        (y, BnCache { x_hat, inv_std })
    }

    /// Inference forward: normalizes with the running statistics.
    pub fn forward_infer(&self, x: &Matrix) -> Matrix {
        let (n, w) = (x.rows(), x.cols());
        let mut y = Matrix::zeros(n, w);
        for r in 0..n {
            let src = x.row(r);
            for j in 0..w {
                let inv = 1.0 / libm::sqrt(self.running_var[j] + self.epsilon);
                y.set(r, j, self.gamma[j] * (src[j] - self.running_mean[j]) * inv + self.beta[j]);
            }
        }
        y
    }

    /// Returns `(dGamma, dBeta, dX)`. Accounts for the dependence of the
    /// batch statistics on the input.
    pub fn backward(&self, cache: &BnCache, d_out: &Matrix) -> (Vec<f64>, Vec<f64>, Matrix) {
        let (n, w) = (d_out.rows(), d_out.cols());
        let inv_n = 1.0 / n as f64;

        let mut d_gamma = vec![0.0; w];
        let mut d_beta = vec![0.0; w];
        for r in 0..n {
            let d = d_out.row(r);
            let xh = cache.x_hat.row(r);
            for j in 0..w {
                d_gamma[j] += d[j] * xh[j];
                d_beta[j] += d[j];
            }
        }

        // dX = (gamma * inv_std / n) * (n*dY - sum(dY) - x_hat * sum(dY*x_hat))
        let mut dx = Matrix::zeros(n, w);
        for r in 0..n {
            let d = d_out.row(r);
            let xh = cache.x_hat.row(r);
            let out = dx.row_mut(r);
            for j in 0..w {
                out[j] = self.gamma[j] * cache.inv_std[j] * inv_n
                    * (n as f64 * d[j] - d_beta[j] - xh[j] * d_gamma[j]);
            }
        }
        (d_gamma, d_beta, dx)
    }
}
