//! Core laboratory for feature-addition evasion attacks against machine-learning
//! malware detectors.
//!
//! The crate is organized around four pieces:
//!
//! - [`numnet`]: a small feed-forward network kernel (dense / batch-norm /
//!   activation layers) with manual backpropagation, the two loss families used
//!   by the attack, an Adam optimizer, and a finite-difference gradient checker.
//! - [`detectors`]: eight classical classifiers behind one train/predict
//!   interface, used as black-box detection targets.
//! - [`gan`]: the generator + detector networks, the least-squares and
//!   cross-entropy adversarial losses, the binarize-and-OR feature-addition
//!   constraint, and the training loop with its three variants.
//! - [`experiments`]: the attack-evaluation grid and the retraining-defense
//!   arms race, producing plain report structs.
//!
//! Everything here is pure computation over explicit state: callers provide
//! seeds, data, and configuration; file formats and the CLI live in the
//! companion `malgan-lab` crate. The crate is `no_std` (with `alloc`) so the
//! numeric core carries no platform dependencies.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod data;
pub mod dataset;
pub mod detectors;
pub mod error;
pub mod experiments;
pub mod gan;
pub mod matrix;
pub mod numnet;
pub mod seeds;

pub use dataset::LabeledDataset;
pub use error::{Error, Result};
pub use matrix::Matrix;

/// Crate version, recorded in run manifests for provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
