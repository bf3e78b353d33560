//! The feature-addition generator: dense network plus the elementwise
//! maximum that guarantees no original feature is dropped.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numnet::{ActivationKind, BatchNormLayer, DenseLayer, ForwardCache, Layer, Mode, Network};

use super::{GanConfig, LEAKY_SLOPE};

/// Network mapping (malware ++ noise) to a raw sigmoid output `o`; the
/// smoothed adversarial vector is `max(m, o)` and the hard one is
/// `m OR (o > 0.5)`.
#[derive(Debug, Clone)]
pub struct Generator {
    pub net: Network,
    pub num_features: usize,
    pub noise_dim: usize,
}

/// Initial bias of the output layer. A zero bias would put the untrained
/// sigmoid outputs around 0.5 and make the fresh generator spray roughly
/// half of all features onto every row; starting the bias negative keeps
/// the initial map close to the identity, so the epoch-0 adversarial TPR
/// anchors near the original TPR and training has a meaningful trajectory.
const INITIAL_OUTPUT_BIAS: f64 = -2.0;

/// Uniform [0,1) noise, one row per sample.
pub fn sample_noise(batch: usize, noise_dim: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let data: Vec<f64> = (0..batch * noise_dim).map(|_| rng.gen::<f64>()).collect();
    Matrix::from_vec(batch, noise_dim, data).expect("dimensions match by construction")
}

/// Binarizes the raw output at the strict 0.5 threshold and ORs it onto the
/// original malware rows. Output rows are binary supersets of their inputs.
pub fn make_adversarial(m: &Matrix, o: &Matrix) -> Result<Matrix> {
    if (m.rows(), m.cols()) != (o.rows(), o.cols()) {
        return Err(Error::ShapeMismatch {
            context: "adversarial OR",
            expected: (m.rows(), m.cols()),
            got: (o.rows(), o.cols()),
        });
    }
    if let Some((row, col, value)) = m.find_non_binary() {
        return Err(Error::NonBinaryValue { row, col, value });
    }
    for &v in o.data() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::ProbabilityOutOfRange { value: v });
        }
    }
    let mut out = m.clone();
    for (dst, &raw) in out.data_mut().iter_mut().zip(o.data()) {
        if raw > 0.5 {
            *dst = 1.0;
        }
    }
    Ok(out)
}

impl Generator {
    /// Three [Dense -> LeakyReLU -> BatchNorm] blocks on the concatenated
    /// (malware ++ noise) input, then Dense + Sigmoid back to feature width.
    pub fn new(config: &GanConfig, rng: &mut ChaCha8Rng) -> Result<Generator> {
        let h = config.hidden_width;
        let input = config.num_features + config.noise_dim;
        let mut layers = Vec::new();
        let mut width = input;
        for _ in 0..3 {
            layers.push(Layer::Dense(DenseLayer::glorot(width, h, rng)));
            layers.push(Layer::Activation(ActivationKind::LeakyReLU(LEAKY_SLOPE)));
            layers.push(Layer::BatchNorm(BatchNormLayer::new(h)));
            width = h;
        }
        let mut output = DenseLayer::glorot(width, config.num_features, rng);
        output.bias.iter_mut().for_each(|b| *b = INITIAL_OUTPUT_BIAS);
        layers.push(Layer::Dense(output));
        layers.push(Layer::Activation(ActivationKind::Sigmoid));
        Ok(Generator {
            net: Network::new(layers)?,
            num_features: config.num_features,
            noise_dim: config.noise_dim,
        })
    }

    fn check_inputs(&self, m: &Matrix, z: &Matrix) -> Result<()> {
        if m.cols() != self.num_features {
            return Err(Error::LengthMismatch {
                context: "generator malware width",
                expected: self.num_features,
                got: m.cols(),
            });
        }
        if z.cols() != self.noise_dim || z.rows() != m.rows() {
            return Err(Error::ShapeMismatch {
                context: "generator noise",
                expected: (m.rows(), self.noise_dim),
                got: (z.rows(), z.cols()),
            });
        }
        if let Some((row, col, value)) = m.find_non_binary() {
            return Err(Error::NonBinaryValue { row, col, value });
        }
        Ok(())
    }

    /// Differentiable path: returns the smoothed output `max(m, o)`, the raw
    /// network output `o`, and the cache needed to backpropagate.
    pub fn forward_smoothed(
        &mut self,
        m: &Matrix,
        z: &Matrix,
        mode: Mode,
    ) -> Result<(Matrix, Matrix, ForwardCache)> {
        self.check_inputs(m, z)?;
        let (o, cache) = self.net.forward(&m.concat_cols(z), mode)?;
        let mut smoothed = o.clone();
        for (s, &orig) in smoothed.data_mut().iter_mut().zip(m.data()) {
            if orig > *s {
                *s = orig;
            }
        }
        Ok((smoothed, o, cache))
    }

    /// Routes the loss gradient at the smoothed output back to the raw
    /// output: the maximum passes gradient to `o` exactly where `o > m`,
    /// and to the constant `m` branch (dropping it) everywhere else.
    pub fn route_max_gradient(d_smoothed: &Matrix, o: &Matrix, m: &Matrix) -> Matrix {
        let mut d_o = d_smoothed.clone();
        for ((g, &raw), &orig) in d_o.data_mut().iter_mut().zip(o.data()).zip(m.data()) {
            if raw <= orig {
                *g = 0.0;
            }
        }
        d_o
    }

    /// Deployment path: hard binary adversarial rows via frozen batch-norm
    /// statistics. Never mutates the generator.
    pub fn generate_hard(&self, m: &Matrix, z: &Matrix) -> Result<Matrix> {
        self.check_inputs(m, z)?;
        let o = self.net.infer(&m.concat_cols(z))?;
        make_adversarial(m, &o)
    }
}
