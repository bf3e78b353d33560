//! End-to-end experiment drivers: the detector-by-variant attack grid and
//! the multi-round retraining defense, with per-cell seed derivation so any
//! cell is reproducible in isolation.

use alloc::vec::Vec;

use crate::data;
use crate::dataset::LabeledDataset;
use crate::detectors::{self, ClassifierKind, ClassifierModel, HyperParams};
use crate::error::{Error, Result};
use crate::gan::{
    build_variant, generate_adversarial_dataset, train, Gan, GanConfig, GanVariant, TrainStatsRow,
};
use crate::matrix::Matrix;
use crate::seeds;

/// Shared knobs of both experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub gan: GanConfig,
    pub detector_params: HyperParams,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            gan: GanConfig::default(),
            detector_params: HyperParams::default(),
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

/// One cell of the attack grid: a detector kind attacked by one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackCell {
    pub detector: ClassifierKind,
    pub variant: GanVariant,
    pub original_tpr_train: f64,
    pub original_tpr_test: f64,
    pub adversarial_tpr_train: f64,
    pub adversarial_tpr_test: f64,
    /// Full per-epoch history of the GAN trained for this cell.
    pub stats: Vec<TrainStatsRow>,
}

/// The detector-by-variant grid, one row per (kind, variant) pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttackReport {
    pub cells: Vec<AttackCell>,
}

impl AttackReport {
    /// Mean adversarial test TPR of one variant across its cells.
    pub fn mean_adversarial_test_tpr(&self, variant: GanVariant) -> Option<f64> {
        let rates: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.variant == variant)
            .map(|c| c.adversarial_tpr_test)
            .collect();
        if rates.is_empty() {
            None
        } else {
            Some(rates.iter().sum::<f64>() / rates.len() as f64)
        }
    }
}

/// Fraction of adversarial examples that slip past the detector.
pub fn attack_success_rate(adversarial_tpr: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&adversarial_tpr) || !adversarial_tpr.is_finite() {
        return Err(Error::ProbabilityOutOfRange {
            value: adversarial_tpr,
        });
    }
    Ok(1.0 - adversarial_tpr)
}

/// Position of the kind in [`ClassifierKind::ALL`], used as the seed-stream
/// index for its black-box fit.
pub fn kind_ordinal(kind: ClassifierKind) -> u64 {
    ClassifierKind::ALL
        .iter()
        .position(|&k| k == kind)
        .expect("every kind appears in ALL") as u64
}

fn variant_ordinal(variant: GanVariant) -> u64 {
    GanVariant::ALL
        .iter()
        .position(|&v| v == variant)
        .expect("every variant appears in ALL") as u64
}

/// Stable per-cell seed: depends only on the master seed and the cell's
/// identity, so shrinking the detector or variant list never reshuffles the
/// surviving cells.
pub fn cell_seed(master: u64, kind: ClassifierKind, variant: GanVariant) -> u64 {
    seeds::child_seed(master, kind.name(), variant_ordinal(variant))
}

/// Root seed of one retraining-defense run, derived from the cell's seed so
/// the defense never correlates with the attack grid on the same cell.
pub fn retrain_seed(master: u64, kind: ClassifierKind, variant: GanVariant) -> u64 {
    seeds::child_seed(cell_seed(master, kind, variant), "retrain", 0)
}

/// Trains every requested black-box detector on the train split, attacks
/// each with every requested variant, and records original and adversarial
/// TPR on both splits. The split, the detector fits, and each cell's GAN all
/// use seeds derived from `config.seed`.
pub fn evaluate_attack(
    data: &LabeledDataset,
    variants: &[GanVariant],
    kinds: &[ClassifierKind],
    config: &ExperimentConfig,
) -> Result<AttackReport> {
    evaluate_attack_with::<Error>(data, variants, kinds, config, |_, _, _| Ok(()))
}

/// Like [`evaluate_attack`], invoking `on_cell` with each finished cell, the
/// fitted black-box it was measured against, and the trained attack model.
/// Callers that persist artifacts hook in here; the callback's error type
/// only needs to absorb this crate's errors.
pub fn evaluate_attack_with<E: From<Error>>(
    data: &LabeledDataset,
    variants: &[GanVariant],
    kinds: &[ClassifierKind],
    config: &ExperimentConfig,
    mut on_cell: impl FnMut(&AttackCell, &ClassifierModel, &Gan) -> core::result::Result<(), E>,
) -> core::result::Result<AttackReport, E> {
    let (train_split, test_split) = data::split(
        data,
        config.train_fraction,
        seeds::child_seed(config.seed, "split", 0),
    )
    .map_err(E::from)?;
    let train_malware = train_split.rows_with_label(1);
    let test_malware = test_split.rows_with_label(1);

    let mut cells = Vec::with_capacity(kinds.len() * variants.len());
    for &kind in kinds {
        let blackbox = detectors::fit(
            kind,
            &config.detector_params,
            &train_split,
            seeds::child_seed(config.seed, "blackbox-fit", kind_ordinal(kind)),
        )
        .map_err(E::from)?;
        let original_tpr_train = blackbox.true_positive_rate(&train_malware).map_err(E::from)?;
        let original_tpr_test = blackbox.true_positive_rate(&test_malware).map_err(E::from)?;

        for &variant in variants {
            let seed = cell_seed(config.seed, kind, variant);
            let mut gan = build_variant(variant, &config.gan, seed).map_err(E::from)?;
            let stats = train(
                &mut gan,
                &blackbox,
                &train_split,
                &test_malware,
                config.gan.epochs,
                seed,
            )
            .map_err(E::from)?;
            let adv_train = generate_adversarial_dataset(
                &gan,
                &train_malware,
                &mut seeds::child_rng(seed, "adv-train", 0),
            )
            .map_err(E::from)?;
            let adv_test = generate_adversarial_dataset(
                &gan,
                &test_malware,
                &mut seeds::child_rng(seed, "adv-test", 0),
            )
            .map_err(E::from)?;
            let cell = AttackCell {
                detector: kind,
                variant,
                original_tpr_train,
                original_tpr_test,
                adversarial_tpr_train: blackbox.true_positive_rate(&adv_train).map_err(E::from)?,
                adversarial_tpr_test: blackbox.true_positive_rate(&adv_test).map_err(E::from)?,
                stats,
            };
            on_cell(&cell, &blackbox, &gan)?;
            cells.push(cell);
        }
    }
    Ok(AttackReport { cells })
}

/// One defense round's diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrainRound {
    pub round: usize,
    /// TPR of the just-refit detector on the exact adversarial vectors it
    /// was retrained on.
    pub tpr_on_seen: f64,
    /// TPR of the just-refit detector on fresh adversarial vectors from the
    /// same (frozen) generator.
    pub tpr_on_fresh: f64,
}

/// Outcome of the arms race for one (detector, variant) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrainRow {
    pub detector: ClassifierKind,
    pub variant: GanVariant,
    pub rounds: Vec<RetrainRound>,
    /// Fresh-adversarial TPR after the final defense round, before the
    /// attacker reacts.
    pub tpr_before: f64,
    /// Fresh-adversarial TPR after the attacker retrains against the
    /// hardened detector.
    pub tpr_after: f64,
}

/// Defense rows for several detectors, one variant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RetrainReport {
    pub rows: Vec<RetrainRow>,
}

/// Fraction of the original malware training count added as adversarial
/// rows in each defense round.
pub const RETRAIN_AUGMENT_RATIO: f64 = 0.25;

/// Everything the arms race leaves behind: the summary row plus the final
/// hardened detector and the attacker model retrained against it, so callers
/// can persist what the row's rates were measured on.
#[derive(Debug, Clone)]
pub struct DefenseOutcome {
    pub row: RetrainRow,
    pub hardened: ClassifierModel,
    pub gan: Gan,
}

/// The arms race for one detector: train the GAN, then for each round
/// augment the detector's training set with adversarial vectors (generated
/// from train-split malware, labeled malicious) and refit; finally let the
/// GAN retrain against the hardened detector. "Before"/"After" TPRs are
/// measured on adversarial vectors generated from held-out test malware.
pub fn retrain_defense(
    kind: ClassifierKind,
    variant: GanVariant,
    data: &LabeledDataset,
    rounds: usize,
    config: &ExperimentConfig,
) -> Result<DefenseOutcome> {
    if rounds == 0 {
        return Err(Error::InvalidParam {
            name: "rounds",
            reason: "must be at least 1",
        });
    }
    let (train_split, test_split) =
        data::split(data, config.train_fraction, seeds::child_seed(config.seed, "split", 0))?;
    let train_malware = train_split.rows_with_label(1);
    let test_malware = test_split.rows_with_label(1);
    let seed = retrain_seed(config.seed, kind, variant);

    let mut blackbox = detectors::fit(
        kind,
        &config.detector_params,
        &train_split,
        seeds::child_seed(config.seed, "blackbox-fit", kind_ordinal(kind)),
    )?;
    let mut gan = build_variant(variant, &config.gan, seed)?;
    train(
        &mut gan,
        &blackbox,
        &train_split,
        &test_malware,
        config.gan.epochs,
        seed,
    )?;

    // Growing training set: original data plus every round's adversarial
    // vectors labeled malicious.
    let per_round = ((train_malware.rows() as f64 * RETRAIN_AUGMENT_RATIO) as usize).max(1);
    let (mut aug_features, mut aug_labels) = {
        let (f, l) = (train_split.features().clone(), train_split.labels().to_vec());
        (f, l)
    };
    let mut round_records = Vec::with_capacity(rounds);
    for round in 1..=rounds {
        let mut rng = seeds::child_rng(seed, "defense-round", round as u64);
        let src: Vec<usize> = rand::seq::index::sample(
            &mut rng,
            train_malware.rows(),
            per_round.min(train_malware.rows()),
        )
        .into_vec();
        let adv = generate_adversarial_dataset(&gan, &train_malware.select_rows(&src), &mut rng)?;

        aug_features = Matrix::stack_rows(&[&aug_features, &adv]);
        aug_labels.extend(core::iter::repeat(1u8).take(adv.rows()));
        let augmented = LabeledDataset::new(aug_features.clone(), aug_labels.clone())?;
        blackbox = detectors::fit(
            kind,
            &config.detector_params,
            &augmented,
            seeds::child_seed(seed, "defense-refit", round as u64),
        )?;

        let fresh = generate_adversarial_dataset(
            &gan,
            &test_malware,
            &mut seeds::child_rng(seed, "defense-fresh", round as u64),
        )?;
        round_records.push(RetrainRound {
            round,
            tpr_on_seen: blackbox.true_positive_rate(&adv)?,
            tpr_on_fresh: blackbox.true_positive_rate(&fresh)?,
        });
    }
    let tpr_before = round_records
        .last()
        .expect("rounds >= 1")
        .tpr_on_fresh;

    // The attacker's counter-move against the hardened detector. The
    // attacker never sees the defender's augmented set; it retrains on its
    // own corpus with fresh black-box labels from the hardened model.
    train(
        &mut gan,
        &blackbox,
        &train_split,
        &test_malware,
        config.gan.retrain_epochs,
        seeds::child_seed(seed, "gan-retrain", 0),
    )?;
    let final_adv = generate_adversarial_dataset(
        &gan,
        &test_malware,
        &mut seeds::child_rng(seed, "after", 0),
    )?;
    let tpr_after = blackbox.true_positive_rate(&final_adv)?;

    Ok(DefenseOutcome {
        row: RetrainRow {
            detector: kind,
            variant,
            rounds: round_records,
            tpr_before,
            tpr_after,
        },
        hardened: blackbox,
        gan,
    })
}
