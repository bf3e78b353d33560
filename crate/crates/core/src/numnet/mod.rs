//! Minimal neural-network kernel: dense layers, batch normalization,
//! LeakyReLU/Sigmoid activations, least-squares and cross-entropy losses,
//! Adam, and a finite-difference gradient checker.
//!
//! The layer vocabulary is fixed to what the generator and detector stacks
//! need; there is no general autodiff. Forward passes in train mode cache
//! every intermediate required for the hand-written backward pass.

mod adam;
mod gradcheck;
mod layer;
mod loss;
mod network;

pub use adam::Adam;
pub use gradcheck::{grad_check, GradCheckReport};
pub use layer::{ActivationKind, BatchNormLayer, BnCache, DenseLayer};
pub use loss::{loss, LossKind};
pub use network::{ForwardCache, Gradients, Layer, LayerGrads, Mode, Network};
