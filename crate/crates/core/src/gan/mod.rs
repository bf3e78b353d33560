//! The double-detector GAN that turns malware feature vectors into
//! feature-addition adversarial examples, plus its two single-detector
//! baselines.
//!
//! The generator concatenates a malware vector with uniform noise, runs it
//! through three dense blocks, and takes an elementwise maximum with the
//! original input so no feature is ever removed. The substitute detector
//! learns the black-box detector's labels; the additional detector (double
//! variant only) learns ground-truth benign against generated adversarial
//! rows. Both are trained with least-squares objectives; the plain baseline
//! uses cross-entropy instead.

mod generator;
mod losses;
mod train;

pub use generator::{make_adversarial, sample_noise, Generator};
pub use losses::{combined_d_loss, generator_objective, two_set_loss, SetLossKind};
pub use train::{generate_adversarial_dataset, train, train_step, StepLosses, TrainStatsRow};

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numnet::{ActivationKind, Adam, DenseLayer, Layer, Network};
use crate::seeds;

/// Negative slope shared by every LeakyReLU in this module, following the
/// DCGAN convention.
pub const LEAKY_SLOPE: f64 = 0.2;

/// Hyperparameters of the attack.
#[derive(Debug, Clone, PartialEq)]
pub struct GanConfig {
    /// Feature-vector width M.
    pub num_features: usize,
    /// Noise width Z.
    pub noise_dim: usize,
    /// Weight of the substitute detector in the combined loss and the
    /// combined detector output.
    pub alpha: f64,
    /// Hidden width of all dense blocks; 256 by default, smaller in tests.
    pub hidden_width: usize,
    pub batch_size: usize,
    pub epochs: usize,
    /// Epochs for the attacker's counter-move in the retraining experiment.
    pub retrain_epochs: usize,
    pub lr_generator: f64,
    pub lr_substitute: f64,
    pub lr_additional: f64,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            num_features: 160,
            noise_dim: 10,
            alpha: 0.5,
            hidden_width: 256,
            batch_size: 128,
            epochs: 20,
            retrain_epochs: 5,
            // The generator runs hotter than the detectors: it has to climb
            // from the near-identity output bias while both detectors adapt
            // against it, and Adam progress is capped near lr per step.
            lr_generator: 5e-3,
            lr_substitute: 1e-3,
            lr_additional: 1e-3,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParam {
                name: "alpha",
                reason: "must lie in [0,1]",
            });
        }
        for (name, v) in [
            ("num_features", self.num_features),
            ("noise_dim", self.noise_dim),
            ("hidden_width", self.hidden_width),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return Err(Error::InvalidParam {
                    name,
                    reason: "must be positive",
                });
            }
        }
        for (name, v) in [
            ("lr_generator", self.lr_generator),
            ("lr_substitute", self.lr_substitute),
            ("lr_additional", self.lr_additional),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParam {
                    name,
                    reason: "must be a positive real",
                });
            }
        }
        Ok(())
    }
}

/// Which attack model to build. All three share the generator; they differ
/// in detector count, detector hidden activation, and loss family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GanVariant {
    /// Two detectors, least-squares losses.
    MalD2Gan,
    /// One detector with LeakyReLU hidden layer, least-squares losses.
    MalLsGan,
    /// One detector with sigmoid hidden layer, cross-entropy losses.
    MalGan,
}

impl GanVariant {
    pub const ALL: [GanVariant; 3] = [GanVariant::MalD2Gan, GanVariant::MalLsGan, GanVariant::MalGan];

    pub fn name(self) -> &'static str {
        match self {
            GanVariant::MalD2Gan => "Mal-D2GAN",
            GanVariant::MalLsGan => "Mal-LSGAN",
            GanVariant::MalGan => "MalGAN",
        }
    }

    pub fn from_name(name: &str) -> Option<GanVariant> {
        GanVariant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(name) || v.name().replace('-', "").eq_ignore_ascii_case(name))
    }

    /// Loss family for both the detector and generator objectives.
    pub fn loss_kind(self) -> SetLossKind {
        match self {
            GanVariant::MalD2Gan | GanVariant::MalLsGan => SetLossKind::LeastSquares,
            GanVariant::MalGan => SetLossKind::CrossEntropy,
        }
    }

    fn detector_hidden_activation(self) -> ActivationKind {
        match self {
            GanVariant::MalLsGan => ActivationKind::LeakyReLU(LEAKY_SLOPE),
            GanVariant::MalD2Gan | GanVariant::MalGan => ActivationKind::Sigmoid,
        }
    }

    pub fn has_additional_detector(self) -> bool {
        matches!(self, GanVariant::MalD2Gan)
    }
}

/// A detector-side network: Dense(M -> hidden) + activation,
/// Dense(hidden -> 1) + Sigmoid.
fn build_detector_net(config: &GanConfig, hidden: ActivationKind, rng: &mut ChaCha8Rng) -> Result<Network> {
    Network::new(alloc::vec![
        Layer::Dense(DenseLayer::glorot(config.num_features, config.hidden_width, rng)),
        Layer::Activation(hidden),
        Layer::Dense(DenseLayer::glorot(config.hidden_width, 1, rng)),
        Layer::Activation(ActivationKind::Sigmoid),
    ])
}

/// Generator, detectors, and their optimizer state for one attack run.
#[derive(Debug, Clone)]
pub struct Gan {
    pub variant: GanVariant,
    pub config: GanConfig,
    pub generator: Generator,
    pub substitute: Network,
    /// Present only for the double-detector variant.
    pub additional: Option<Network>,
    pub opt_generator: Adam,
    pub opt_substitute: Adam,
    pub opt_additional: Option<Adam>,
}

/// Builds a freshly initialized model of the requested variant. Network
/// initializations draw from per-network seed streams, so the three networks
/// are independent and any one of them is stable under changes to the others.
pub fn build_variant(variant: GanVariant, config: &GanConfig, seed: u64) -> Result<Gan> {
    config.validate()?;
    let generator = Generator::new(config, &mut seeds::child_rng(seed, "gan-g-init", 0))?;
    let substitute = build_detector_net(
        config,
        variant.detector_hidden_activation(),
        &mut seeds::child_rng(seed, "gan-d1-init", 0),
    )?;
    let additional = if variant.has_additional_detector() {
        Some(build_detector_net(
            config,
            ActivationKind::Sigmoid,
            &mut seeds::child_rng(seed, "gan-d2-init", 0),
        )?)
    } else {
        None
    };
    let opt_generator = Adam::new(&generator.net, config.lr_generator);
    let opt_substitute = Adam::new(&substitute, config.lr_substitute);
    let opt_additional = additional.as_ref().map(|net| Adam::new(net, config.lr_additional));
    Ok(Gan {
        variant,
        config: config.clone(),
        generator,
        substitute,
        additional,
        opt_generator,
        opt_substitute,
        opt_additional,
    })
}

/// Probability the α-weighted detector pair assigns to each row being
/// malware: `α·D1(x) + (1−α)·D2(x)`, degenerating to D1 alone for the
/// single-detector variants.
pub fn combined_detector_output(gan: &Gan, x: &crate::matrix::Matrix) -> Result<Vec<f64>> {
    let p1 = gan.substitute.infer(x)?;
    match &gan.additional {
        None => Ok(p1.into_data()),
        Some(d2) => {
            let p2 = d2.infer(x)?;
            let a = gan.config.alpha;
            Ok(p1
                .data()
                .iter()
                .zip(p2.data())
                .map(|(&q1, &q2)| a * q1 + (1.0 - a) * q2)
                .collect())
        }
    }
}
