//! Sequential network composition: forward with caching, backward, and
//! gradient containers mirroring the layer structure.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::layer::{ActivationKind, BatchNormLayer, BnCache, DenseLayer};

/// One element of a sequential stack.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(DenseLayer),
    BatchNorm(BatchNormLayer),
    Activation(ActivationKind),
}

/// Whether batch norm uses batch statistics (and updates running ones) or
/// the frozen running statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Everything the backward pass needs from a train-mode forward:
/// `values[i]` is the input to layer `i`, `values[last]` the network output.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub(super) values: Vec<Matrix>,
    pub(super) bn: Vec<Option<BnCache>>,
}

/// Parameter gradients, one entry per layer, shaped like the layer.
#[derive(Debug, Clone)]
pub enum LayerGrads {
    Dense { d_weights: Matrix, d_bias: Vec<f64> },
    BatchNorm { d_gamma: Vec<f64>, d_beta: Vec<f64> },
    Activation,
}

/// Gradients for a whole network, in layer order.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

impl Gradients {
    /// Flat parameter-block view matching [`Network::param_blocks`] order.
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                LayerGrads::Dense { d_weights, d_bias } => {
                    out.push(d_weights.data());
                    out.push(d_bias.as_slice());
                }
                LayerGrads::BatchNorm { d_gamma, d_beta } => {
                    out.push(d_gamma.as_slice());
                    out.push(d_beta.as_slice());
                }
                LayerGrads::Activation => {}
            }
        }
        out
    }

    /// Largest absolute entry across all parameter gradients.
    pub fn max_abs(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|b| b.iter())
            .fold(0.0, |acc, &g| if g.abs() > acc { g.abs() } else { acc })
    }
}

/// An ordered layer stack with consistent widths.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    input_width: usize,
    output_width: usize,
}

impl Network {
    /// Builds a stack, checking that adjacent layer widths chain and that
    /// activation parameters are valid. The first layer must determine a
    /// width (dense or batch norm).
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let mut width: Option<(usize, usize)> = None; // (input, current)
        for layer in &layers {
            match layer {
                Layer::Dense(d) => {
                    if let Some((_, cur)) = width {
                        if cur != d.input_width() {
                            return Err(Error::LengthMismatch {
                                context: "dense layer input width",
                                expected: cur,
                                got: d.input_width(),
                            });
                        }
                    }
                    let input = width.map_or(d.input_width(), |(i, _)| i);
                    width = Some((input, d.output_width()));
                }
                Layer::BatchNorm(bn) => {
                    if let Some((_, cur)) = width {
                        if cur != bn.width() {
                            return Err(Error::LengthMismatch {
                                context: "batch norm width",
                                expected: cur,
                                got: bn.width(),
                            });
                        }
                    }
                    let input = width.map_or(bn.width(), |(i, _)| i);
                    width = Some((input, bn.width()));
                }
                Layer::Activation(act) => act.validate()?,
            }
        }
        let (input_width, output_width) = width.ok_or(Error::InvalidParam {
            name: "layers",
            reason: "stack has no width-bearing layer",
        })?;
        Ok(Network {
            layers,
            input_width,
            output_width,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn output_width(&self) -> usize {
        self.output_width
    }

    /// Runs the stack over `x`. Train mode uses batch statistics in batch
    /// norm, updates running statistics, and fills the cache for
    /// [`Network::backward`]; infer mode uses running statistics.
    pub fn forward(&mut self, x: &Matrix, mode: Mode) -> Result<(Matrix, ForwardCache)> {
        if x.cols() != self.input_width {
            return Err(Error::LengthMismatch {
                context: "network input width",
                expected: self.input_width,
                got: x.cols(),
            });
        }
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        let mut bn_caches = Vec::with_capacity(self.layers.len());
        values.push(x.clone());
        let mut cur = x.clone();
        for layer in &mut self.layers {
            let next = match layer {
                Layer::Dense(d) => {
                    bn_caches.push(None);
                    d.forward(&cur)
                }
                Layer::BatchNorm(bn) => match mode {
                    Mode::Train => {
                        let (y, cache) = bn.forward_train(&cur);
                        bn_caches.push(Some(cache));
                        y
                    }
                    Mode::Infer => {
                        bn_caches.push(None);
                        bn.forward_infer(&cur)
                    }
                },
                Layer::Activation(act) => {
                    bn_caches.push(None);
                    act.forward(&cur)
                }
            };
            values.push(next.clone());
            cur = next;
        }
        Ok((
            cur,
            ForwardCache {
                values,
                bn: bn_caches,
            },
        ))
    }

    /// Inference-only forward that leaves the network untouched.
    pub fn infer(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_width {
            return Err(Error::LengthMismatch {
                context: "network input width",
                expected: self.input_width,
                got: x.cols(),
            });
        }
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = match layer {
                Layer::Dense(d) => d.forward(&cur),
                Layer::BatchNorm(bn) => bn.forward_infer(&cur),
                Layer::Activation(act) => act.forward(&cur),
            };
        }
        Ok(cur)
    }

    /// Backpropagates `d_out` through a cache produced by a train-mode
    /// forward on this same network. Returns parameter gradients and the
    /// gradient with respect to the input.
    pub fn backward(&self, cache: &ForwardCache, d_out: &Matrix) -> Result<(Gradients, Matrix)> {
        if cache.values.len() != self.layers.len() + 1 || cache.bn.len() != self.layers.len() {
            return Err(Error::CacheMismatch);
        }
        let last = cache.values.last().expect("cache holds the input at least");
        if (d_out.rows(), d_out.cols()) != (last.rows(), last.cols()) {
            return Err(Error::ShapeMismatch {
                context: "backward output gradient",
                expected: (last.rows(), last.cols()),
                got: (d_out.rows(), d_out.cols()),
            });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut d_cur = d_out.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.values[i];
            let output = &cache.values[i + 1];
            match layer {
                Layer::Dense(d) => {
                    let (d_weights, d_bias, d_input) = d.backward(input, &d_cur);
                    grads.push(LayerGrads::Dense { d_weights, d_bias });
                    d_cur = d_input;
                }
                Layer::BatchNorm(bn) => {
                    let bn_cache = cache.bn[i].as_ref().ok_or(Error::CacheMismatch)?;
                    let (d_gamma, d_beta, d_input) = bn.backward(bn_cache, &d_cur);
                    grads.push(LayerGrads::BatchNorm { d_gamma, d_beta });
                    d_cur = d_input;
                }
                Layer::Activation(act) => {
                    grads.push(LayerGrads::Activation);
                    d_cur = act.backward(&d_cur, input, output);
                }
            }
        }
        grads.reverse();
        Ok((Gradients { layers: grads }, d_cur))
    }

    /// Mutable flat views of every parameter block, in layer order:
    /// dense weights then bias, batch-norm gamma then beta. Running
    /// statistics are buffers, not parameters, and are excluded.
    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.push(d.weights.data_mut());
                    out.push(d.bias.as_mut_slice());
                }
                Layer::BatchNorm(bn) => {
                    out.push(bn.gamma.as_mut_slice());
                    out.push(bn.beta.as_mut_slice());
                }
                Layer::Activation(_) => {}
            }
        }
        out
    }

    /// Immutable counterpart of [`Network::param_blocks_mut`].
    pub fn param_blocks(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.push(d.weights.data());
                    out.push(d.bias.as_slice());
                }
                Layer::BatchNorm(bn) => {
                    out.push(bn.gamma.as_slice());
                    out.push(bn.beta.as_slice());
                }
                Layer::Activation(_) => {}
            }
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.param_blocks().iter().map(|b| b.len()).sum()
    }
}
