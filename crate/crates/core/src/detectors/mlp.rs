//! Single-hidden-layer neural detector trained on the network kernel.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::dataset::LabeledDataset;
use crate::error::Result;
use crate::matrix::Matrix;
use crate::numnet::{
    loss, ActivationKind, Adam, DenseLayer, Layer, LossKind, Mode, Network,
};
use crate::seeds;

use super::HyperParams;

/// Slope of the hidden activation. The kernel's activation vocabulary has
/// LeakyReLU and sigmoid only; a 0.01 slope is the near-ReLU member of it.
const HIDDEN_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    pub network: Network,
}

impl MlpClassifier {
    pub fn fit(params: &HyperParams, data: &LabeledDataset, seed: u64) -> Result<Self> {
        let m = data.num_features();
        let mut init_rng = seeds::child_rng(seed, "mlp-init", 0);
        let mut network = Network::new(alloc::vec![
            Layer::Dense(DenseLayer::glorot(m, params.mlp_hidden, &mut init_rng)),
            Layer::Activation(ActivationKind::LeakyReLU(HIDDEN_SLOPE)),
            Layer::Dense(DenseLayer::glorot(params.mlp_hidden, 1, &mut init_rng)),
            Layer::Activation(ActivationKind::Sigmoid),
        ])?;
        let mut adam = Adam::new(&network, 1e-3);

        let n = data.len();
        let x = data.features();
        let batch = params.mlp_batch_size.max(1);
        let mut order: Vec<usize> = (0..n).collect();
        for epoch in 0..params.mlp_epochs {
            let mut rng = seeds::child_rng(seed, "mlp-shuffle", epoch as u64);
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                let batch_x = x.select_rows(chunk);
                let mut target = Matrix::zeros(chunk.len(), 1);
                for (r, &i) in chunk.iter().enumerate() {
                    target.set(r, 0, data.labels()[i] as f64);
                }
                let (pred, cache) = network.forward(&batch_x, Mode::Train)?;
                let (_, d_pred) = loss(LossKind::BinaryCrossEntropy, &pred, &target)?;
                let (grads, _) = network.backward(&cache, &d_pred)?;
                adam.step(&mut network, &grads)?;
            }
        }
        Ok(MlpClassifier { network })
    }

    pub fn num_features(&self) -> usize {
        self.network.input_width()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        let out = self
            .network
            .infer(x)
            .expect("width is checked by the caller");
        out.into_data()
    }
}
