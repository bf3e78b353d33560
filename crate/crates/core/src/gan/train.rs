//! The adversarial training loop: black-box labeling, the two detector
//! updates, then the generator update, batch by batch.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledDataset;
use crate::detectors::ClassifierModel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numnet::Mode;
use crate::seeds;

use super::losses::{combined_d_loss, generator_objective, two_set_loss};
use super::{sample_noise, Gan, Generator};

/// Loss values of one training step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    pub l_g: f64,
    pub l_d1: f64,
    /// Zero for the single-detector variants.
    pub l_d2: f64,
    /// α-weighted combination for the double-detector variant, otherwise
    /// equal to `l_d1`.
    pub l_d: f64,
}

/// One row of training history: epoch 0 is the freshly initialized state
/// evaluated without any update, later rows carry epoch-mean losses and the
/// black-box TPR on adversarial examples built from the held-out probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStatsRow {
    pub epoch: usize,
    pub l_g: f64,
    pub l_d1: f64,
    pub l_d2: f64,
    pub l_d: f64,
    pub adv_tpr: f64,
}

/// Splits black-box-labeled rows into a benign-first stack. Returns the
/// reordered matrix and how many of its leading rows were labeled benign.
fn partition_by_labels(stacked: &Matrix, labels: &[u8]) -> (Matrix, usize) {
    let benign: Vec<usize> = (0..stacked.rows()).filter(|&i| labels[i] == 0).collect();
    let malware: Vec<usize> = (0..stacked.rows()).filter(|&i| labels[i] == 1).collect();
    let n_benign = benign.len();
    let mut order = benign;
    order.extend(malware);
    (stacked.select_rows(&order), n_benign)
}

fn check_step_inputs(gan: &Gan, m_batch: &Matrix, b_batch: &Matrix, z_label: &Matrix, z_update: &Matrix) -> Result<()> {
    if m_batch.rows() == 0 {
        return Err(Error::EmptyInput {
            context: "malware batch",
        });
    }
    if b_batch.rows() == 0 {
        return Err(Error::EmptyInput {
            context: "benign batch",
        });
    }
    if b_batch.cols() != gan.config.num_features {
        return Err(Error::LengthMismatch {
            context: "benign batch width",
            expected: gan.config.num_features,
            got: b_batch.cols(),
        });
    }
    for z in [z_label, z_update] {
        if (z.rows(), z.cols()) != (m_batch.rows(), gan.config.noise_dim) {
            return Err(Error::ShapeMismatch {
                context: "step noise",
                expected: (m_batch.rows(), gan.config.noise_dim),
                got: (z.rows(), z.cols()),
            });
        }
    }
    Ok(())
}

/// One pass of the training algorithm on explicit batches:
///
/// 1. generate hard adversarial rows M' from the malware batch (frozen
///    batch-norm statistics, as at deployment);
/// 2. label M' and the benign batch with the black-box detector and stack
///    the result benign-labeled rows first;
/// 3. update the substitute detector toward those labels;
/// 4. for the double variant, update the additional detector on
///    ground-truth benign (toward 0) against M' (toward 1);
/// 5. update the generator through the smoothed path and the α-combined,
///    freshly updated detectors.
///
/// `z_label` drives step 1 and `z_update` step 5; noise is resampled per
/// generation call.
pub fn train_step(
    gan: &mut Gan,
    blackbox: &ClassifierModel,
    m_batch: &Matrix,
    b_batch: &Matrix,
    z_label: &Matrix,
    z_update: &Matrix,
) -> Result<StepLosses> {
    check_step_inputs(gan, m_batch, b_batch, z_label, z_update)?;
    let kind = gan.variant.loss_kind();
    let alpha = gan.config.alpha;

    // (1)-(2) adversarial rows, black-box labels, benign-first stack.
    let m_adv = gan.generator.generate_hard(m_batch, z_label)?;
    let stacked = Matrix::stack_rows(&[&m_adv, b_batch]);
    let labels = blackbox.predict(&stacked)?;
    let (bb_stack, n_bb_benign) = partition_by_labels(&stacked, &labels);

    // (3) substitute detector toward the black-box labels.
    let (p1, c1) = gan.substitute.forward(&bb_stack, Mode::Train)?;
    let (l_d1, d_out) = two_set_loss(kind, &p1, n_bb_benign)?;
    let (grads, _) = gan.substitute.backward(&c1, &d_out)?;
    gan.opt_substitute.step(&mut gan.substitute, &grads)?;

    // (4) additional detector: ground-truth benign vs generated rows.
    let mut l_d2 = 0.0;
    if let Some(d2) = gan.additional.as_mut() {
        let d2_stack = Matrix::stack_rows(&[b_batch, &m_adv]);
        let (p2, c2) = d2.forward(&d2_stack, Mode::Train)?;
        let (value, d_out2) = two_set_loss(kind, &p2, b_batch.rows())?;
        l_d2 = value;
        let (grads2, _) = d2.backward(&c2, &d_out2)?;
        gan.opt_additional
            .as_mut()
            .expect("optimizer exists whenever the detector does")
            .step(d2, &grads2)?;
    }
    let l_d = if gan.additional.is_some() {
        combined_d_loss(l_d1, l_d2, alpha)
    } else {
        l_d1
    };

    // (5) generator through the smoothed path and combined detector.
    let (smoothed, o, cache_g) = gan
        .generator
        .forward_smoothed(m_batch, z_update, Mode::Train)?;
    let (p1, c1) = gan.substitute.forward(&smoothed, Mode::Train)?;
    let mut forward_d2 = None;
    let mut q = p1;
    if let Some(d2) = gan.additional.as_mut() {
        let (p2, c2) = d2.forward(&smoothed, Mode::Train)?;
        q.scale(alpha);
        q.axpy(1.0 - alpha, &p2);
        forward_d2 = Some(c2);
    }
    let (l_g, dq) = generator_objective(kind, &q)?;
    let dp1 = if gan.additional.is_some() {
        dq.map(|g| g * alpha)
    } else {
        dq.clone()
    };
    let (_, mut d_smoothed) = gan.substitute.backward(&c1, &dp1)?;
    if let Some(c2) = &forward_d2 {
        let dp2 = dq.map(|g| g * (1.0 - alpha));
        let (_, ds2) = gan
            .additional
            .as_ref()
            .expect("cache exists only for the double variant")
            .backward(c2, &dp2)?;
        d_smoothed.axpy(1.0, &ds2);
    }
    let d_o = Generator::route_max_gradient(&d_smoothed, &o, m_batch);
    let (g_grads, _) = gan.generator.net.backward(&cache_g, &d_o)?;
    gan.opt_generator.step(&mut gan.generator.net, &g_grads)?;

    Ok(StepLosses { l_g, l_d1, l_d2, l_d })
}

/// The same loss computations as [`train_step`] on frozen parameters and
/// frozen batch-norm statistics; used for the epoch-0 baseline row.
fn eval_losses(
    gan: &Gan,
    blackbox: &ClassifierModel,
    m_batch: &Matrix,
    b_batch: &Matrix,
    z_label: &Matrix,
    z_update: &Matrix,
) -> Result<StepLosses> {
    check_step_inputs(gan, m_batch, b_batch, z_label, z_update)?;
    let kind = gan.variant.loss_kind();
    let alpha = gan.config.alpha;

    let m_adv = gan.generator.generate_hard(m_batch, z_label)?;
    let stacked = Matrix::stack_rows(&[&m_adv, b_batch]);
    let labels = blackbox.predict(&stacked)?;
    let (bb_stack, n_bb_benign) = partition_by_labels(&stacked, &labels);
    let (l_d1, _) = two_set_loss(kind, &gan.substitute.infer(&bb_stack)?, n_bb_benign)?;

    let mut l_d2 = 0.0;
    if let Some(d2) = &gan.additional {
        let d2_stack = Matrix::stack_rows(&[b_batch, &m_adv]);
        let (value, _) = two_set_loss(kind, &d2.infer(&d2_stack)?, b_batch.rows())?;
        l_d2 = value;
    }
    let l_d = if gan.additional.is_some() {
        combined_d_loss(l_d1, l_d2, alpha)
    } else {
        l_d1
    };

    let o = gan.generator.net.infer(&m_batch.concat_cols(z_update))?;
    let mut smoothed = o;
    for (s, &orig) in smoothed.data_mut().iter_mut().zip(m_batch.data()) {
        if orig > *s {
            *s = orig;
        }
    }
    let mut q = gan.substitute.infer(&smoothed)?;
    if let Some(d2) = &gan.additional {
        q.scale(alpha);
        q.axpy(1.0 - alpha, &d2.infer(&smoothed)?);
    }
    let (l_g, _) = generator_objective(kind, &q)?;
    Ok(StepLosses { l_g, l_d1, l_d2, l_d })
}

/// Hard adversarial rows for every input malware row, with fresh noise.
pub fn generate_adversarial_dataset(
    gan: &Gan,
    malware_x: &Matrix,
    rng: &mut ChaCha8Rng,
) -> Result<Matrix> {
    let z = sample_noise(malware_x.rows(), gan.config.noise_dim, rng);
    gan.generator.generate_hard(malware_x, &z)
}

fn adv_tpr_on_probe(
    gan: &Gan,
    blackbox: &ClassifierModel,
    probe_malware: &Matrix,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let adv = generate_adversarial_dataset(gan, probe_malware, rng)?;
    blackbox.true_positive_rate(&adv)
}

/// Trains for `epochs` full passes over the malware rows of `data`, using
/// the benign rows as the detectors' benign stream. Row 0 of the returned
/// history is the untouched initial state; `epochs = 0` therefore returns
/// one row and leaves the model unchanged. `probe_malware` should be
/// held-out malware; it only feeds the reported adversarial TPR, never a
/// parameter update.
pub fn train(
    gan: &mut Gan,
    blackbox: &ClassifierModel,
    data: &LabeledDataset,
    probe_malware: &Matrix,
    epochs: usize,
    seed: u64,
) -> Result<Vec<TrainStatsRow>> {
    gan.config.validate()?;
    let malware = data.rows_with_label(1);
    let benign = data.rows_with_label(0);
    if malware.rows() == 0 || benign.rows() == 0 {
        return Err(Error::SingleClassData);
    }
    if probe_malware.rows() == 0 {
        return Err(Error::EmptyInput {
            context: "probe malware",
        });
    }
    let batch = gan.config.batch_size;
    let z_dim = gan.config.noise_dim;

    // Baseline row from a deterministic eval stream, before any update.
    let mut history = Vec::with_capacity(epochs + 1);
    {
        let mut eval_rng = seeds::child_rng(seed, "gan-eval", 0);
        let take = |m: &Matrix, k: usize| {
            let idx: Vec<usize> = (0..k.min(m.rows())).collect();
            m.select_rows(&idx)
        };
        let m_batch = take(&malware, batch);
        let b_batch = take(&benign, batch);
        let z_label = sample_noise(m_batch.rows(), z_dim, &mut eval_rng);
        let z_update = sample_noise(m_batch.rows(), z_dim, &mut eval_rng);
        let losses = eval_losses(gan, blackbox, &m_batch, &b_batch, &z_label, &z_update)?;
        let adv_tpr = adv_tpr_on_probe(gan, blackbox, probe_malware, &mut eval_rng)?;
        history.push(TrainStatsRow {
            epoch: 0,
            l_g: losses.l_g,
            l_d1: losses.l_d1,
            l_d2: losses.l_d2,
            l_d: losses.l_d,
            adv_tpr,
        });
    }

    let mut rng = seeds::child_rng(seed, "gan-train", 0);
    let mut order: Vec<usize> = (0..malware.rows()).collect();
    for epoch in 1..=epochs {
        order.shuffle(&mut rng);
        let mut sums = StepLosses { l_g: 0.0, l_d1: 0.0, l_d2: 0.0, l_d: 0.0 };
        let mut steps = 0usize;
        for chunk in order.chunks(batch) {
            let m_batch = malware.select_rows(chunk);
            let b_idx: Vec<usize> =
                (0..chunk.len()).map(|_| rng.gen_range(0..benign.rows())).collect();
            let b_batch = benign.select_rows(&b_idx);
            let z_label = sample_noise(chunk.len(), z_dim, &mut rng);
            let z_update = sample_noise(chunk.len(), z_dim, &mut rng);
            let losses = train_step(gan, blackbox, &m_batch, &b_batch, &z_label, &z_update)?;
            sums.l_g += losses.l_g;
            sums.l_d1 += losses.l_d1;
            sums.l_d2 += losses.l_d2;
            sums.l_d += losses.l_d;
            steps += 1;
        }
        let scale = 1.0 / steps as f64;
        let adv_tpr = adv_tpr_on_probe(gan, blackbox, probe_malware, &mut rng)?;
        history.push(TrainStatsRow {
            epoch,
            l_g: sums.l_g * scale,
            l_d1: sums.l_d1 * scale,
            l_d2: sums.l_d2 * scale,
            l_d: sums.l_d * scale,
            adv_tpr,
        });
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::{self, ClassifierKind, HyperParams};
    use crate::gan::{build_variant, GanConfig, GanVariant};
    use crate::numnet::Network;
    use alloc::vec;

    fn toy_config() -> GanConfig {
        GanConfig {
            num_features: 4,
            noise_dim: 2,
            hidden_width: 5,
            batch_size: 2,
            ..GanConfig::default()
        }
    }

    /// Simple separable toy corpus at width 4: feature 0 marks malware,
    /// feature 3 marks benign software.
    fn toy_data() -> LabeledDataset {
        let rows = vec![
            (vec![1.0, 0.0, 0.0, 0.0], 1),
            (vec![1.0, 1.0, 0.0, 0.0], 1),
            (vec![1.0, 0.0, 1.0, 0.0], 1),
            (vec![0.0, 0.0, 0.0, 1.0], 0),
            (vec![0.0, 1.0, 0.0, 1.0], 0),
            (vec![0.0, 0.0, 1.0, 1.0], 0),
        ];
        let flat: Vec<f64> = rows.iter().flat_map(|(r, _)| r.clone()).collect();
        let labels: Vec<u8> = rows.iter().map(|&(_, l)| l).collect();
        LabeledDataset::new(Matrix::from_vec(6, 4, flat).unwrap(), labels).unwrap()
    }

    fn toy_blackbox() -> ClassifierModel {
        detectors::fit(ClassifierKind::Dt, &HyperParams::default(), &toy_data(), 0).unwrap()
    }

    fn all_params(net: &Network) -> Vec<f64> {
        net.param_blocks().iter().flat_map(|b| b.iter().copied()).collect()
    }

    /// Replays one step with raw primitives in the documented order
    /// (substitute, additional, generator) and demands bitwise-identical
    /// parameters. A step that updated the generator before the detectors,
    /// or assembled the label partition differently, would diverge.
    #[test]
    fn one_step_matches_a_manual_replay_in_d1_d2_g_order() {
        let config = toy_config();
        let blackbox = toy_blackbox();
        let data = toy_data();
        let malware = data.rows_with_label(1);
        let benign = data.rows_with_label(0);
        let m_batch = malware.select_rows(&[0, 1]);
        let b_batch = benign.select_rows(&[0, 2]);
        let mut rng = seeds::child_rng(33, "replay", 0);
        let z_label = sample_noise(2, 2, &mut rng);
        let z_update = sample_noise(2, 2, &mut rng);

        let mut gan = build_variant(GanVariant::MalD2Gan, &config, 7).unwrap();
        let mut replay = gan.clone();
        let stepped =
            train_step(&mut gan, &blackbox, &m_batch, &b_batch, &z_label, &z_update).unwrap();

        // Manual replay.
        let kind = replay.variant.loss_kind();
        let alpha = replay.config.alpha;
        let m_adv = replay.generator.generate_hard(&m_batch, &z_label).unwrap();
        let stacked = Matrix::stack_rows(&[&m_adv, &b_batch]);
        let labels = blackbox.predict(&stacked).unwrap();
        let benign_rows: Vec<usize> =
            (0..stacked.rows()).filter(|&i| labels[i] == 0).collect();
        let malware_rows: Vec<usize> =
            (0..stacked.rows()).filter(|&i| labels[i] == 1).collect();
        let mut order = benign_rows.clone();
        order.extend(&malware_rows);
        let bb_stack = stacked.select_rows(&order);

        let (p1, c1) = replay.substitute.forward(&bb_stack, Mode::Train).unwrap();
        let (l_d1, d_out) = two_set_loss(kind, &p1, benign_rows.len()).unwrap();
        let (grads, _) = replay.substitute.backward(&c1, &d_out).unwrap();
        replay.opt_substitute.step(&mut replay.substitute, &grads).unwrap();

        let d2 = replay.additional.as_mut().unwrap();
        let d2_stack = Matrix::stack_rows(&[&b_batch, &m_adv]);
        let (p2, c2) = d2.forward(&d2_stack, Mode::Train).unwrap();
        let (l_d2, d_out2) = two_set_loss(kind, &p2, b_batch.rows()).unwrap();
        let (grads2, _) = d2.backward(&c2, &d_out2).unwrap();
        replay.opt_additional.as_mut().unwrap().step(d2, &grads2).unwrap();

        let (smoothed, o, cache_g) = replay
            .generator
            .forward_smoothed(&m_batch, &z_update, Mode::Train)
            .unwrap();
        let (p1, c1) = replay.substitute.forward(&smoothed, Mode::Train).unwrap();
        let (p2, c2) = replay
            .additional
            .as_mut()
            .unwrap()
            .forward(&smoothed, Mode::Train)
            .unwrap();
        let mut q = p1;
        q.scale(alpha);
        q.axpy(1.0 - alpha, &p2);
        let (l_g, dq) = generator_objective(kind, &q).unwrap();
        let (_, mut ds) = replay.substitute.backward(&c1, &dq.map(|g| g * alpha)).unwrap();
        let (_, ds2) = replay
            .additional
            .as_ref()
            .unwrap()
            .backward(&c2, &dq.map(|g| g * (1.0 - alpha)))
            .unwrap();
        ds.axpy(1.0, &ds2);
        let d_o = Generator::route_max_gradient(&ds, &o, &m_batch);
        let (g_grads, _) = replay.generator.net.backward(&cache_g, &d_o).unwrap();
        replay.opt_generator.step(&mut replay.generator.net, &g_grads).unwrap();

        assert_eq!(stepped.l_d1, l_d1);
        assert_eq!(stepped.l_d2, l_d2);
        assert_eq!(stepped.l_g, l_g);
        assert_eq!(stepped.l_d, combined_d_loss(l_d1, l_d2, alpha));
        assert_eq!(all_params(&gan.substitute), all_params(&replay.substitute));
        assert_eq!(
            all_params(gan.additional.as_ref().unwrap()),
            all_params(replay.additional.as_ref().unwrap())
        );
        assert_eq!(all_params(&gan.generator.net), all_params(&replay.generator.net));
    }

    /// A zero gradient at the smoothed output must leave every generator
    /// parameter untouched; together with the losses' zero-at-target tests
    /// this pins the claim that a detector outputting exactly 0 cannot move
    /// the generator.
    #[test]
    fn zero_objective_gradient_leaves_generator_unchanged() {
        let config = toy_config();
        let mut gan = build_variant(GanVariant::MalD2Gan, &config, 11).unwrap();
        let before = all_params(&gan.generator.net);
        let m = Matrix::from_vec(2, 4, vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let mut rng = seeds::child_rng(11, "z", 0);
        let z = sample_noise(2, 2, &mut rng);
        let (_, o, cache) = gan.generator.forward_smoothed(&m, &z, Mode::Train).unwrap();
        let d_o = Generator::route_max_gradient(&Matrix::zeros(2, 4), &o, &m);
        let (grads, _) = gan.generator.net.backward(&cache, &d_o).unwrap();
        gan.opt_generator.step(&mut gan.generator.net, &grads).unwrap();
        assert_eq!(before, all_params(&gan.generator.net));
    }

    #[test]
    fn training_history_is_deterministic_and_finite() {
        let config = toy_config();
        let blackbox = toy_blackbox();
        let data = toy_data();
        let probe = data.rows_with_label(1);
        let run = |seed| {
            let mut gan = build_variant(GanVariant::MalD2Gan, &config, seed).unwrap();
            let stats = train(&mut gan, &blackbox, &data, &probe, 3, seed).unwrap();
            (stats, all_params(&gan.generator.net))
        };
        let (stats_a, params_a) = run(5);
        let (stats_b, params_b) = run(5);
        assert_eq!(stats_a, stats_b);
        assert_eq!(params_a, params_b);
        assert_eq!(stats_a.len(), 4);
        assert_eq!(stats_a[0].epoch, 0);
        for row in &stats_a {
            for v in [row.l_g, row.l_d1, row.l_d2, row.l_d, row.adv_tpr] {
                assert!(v.is_finite());
            }
        }
        let (stats_c, _) = run(6);
        assert_ne!(stats_a, stats_c);
    }

    #[test]
    fn zero_epochs_returns_one_row_and_changes_nothing() {
        let config = toy_config();
        let blackbox = toy_blackbox();
        let data = toy_data();
        let probe = data.rows_with_label(1);
        let mut gan = build_variant(GanVariant::MalLsGan, &config, 2).unwrap();
        let g0 = all_params(&gan.generator.net);
        let d0 = all_params(&gan.substitute);
        let stats = train(&mut gan, &blackbox, &data, &probe, 0, 2).unwrap();
        assert_eq!(stats.len(), 1);
        assert_eq!(stats[0].epoch, 0);
        assert_eq!(g0, all_params(&gan.generator.net));
        assert_eq!(d0, all_params(&gan.substitute));
    }

    #[test]
    fn train_rejects_single_class_data_and_empty_probe() {
        let config = toy_config();
        let blackbox = toy_blackbox();
        let data = toy_data();
        let malware_only = LabeledDataset::new(data.rows_with_label(1), vec![1, 1, 1]).unwrap();
        let probe = data.rows_with_label(1);
        let mut gan = build_variant(GanVariant::MalGan, &config, 1).unwrap();
        assert!(train(&mut gan, &blackbox, &malware_only, &probe, 1, 1).is_err());
        assert!(train(&mut gan, &blackbox, &data, &Matrix::zeros(0, 4), 1, 1).is_err());
    }

    #[test]
    fn generated_rows_are_binary_supersets_even_untrained() {
        let config = toy_config();
        let gan = build_variant(GanVariant::MalGan, &config, 9).unwrap();
        let data = toy_data();
        let malware = data.rows_with_label(1);
        let mut rng = seeds::child_rng(9, "gen", 0);
        let adv = generate_adversarial_dataset(&gan, &malware, &mut rng).unwrap();
        assert!(adv.is_binary());
        assert_eq!(adv.rows(), malware.rows());
        for r in 0..adv.rows() {
            for c in 0..adv.cols() {
                assert!(adv.get(r, c) >= malware.get(r, c));
            }
        }
        let again = generate_adversarial_dataset(&gan, &malware, &mut seeds::child_rng(9, "gen", 0)).unwrap();
        assert_eq!(adv, again);
    }

    /// Directional check on a small but learnable instance: training must
    /// cut the black-box TPR on fresh adversarial probes and raise the
    /// substitute detector's agreement with the black-box.
    #[test]
    fn attack_and_substitute_fidelity_improve_with_training() {
        // Width 12: three malware markers, six benign markers the generator
        // can add, three background features.
        let spec = crate::data::SyntheticSpec {
            malware_probs: vec![
                0.6, 0.6, 0.6, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.1, 0.1, 0.1,
            ],
            benign_probs: vec![
                0.05, 0.05, 0.05, 0.55, 0.55, 0.55, 0.55, 0.55, 0.55, 0.1, 0.1, 0.1,
            ],
            overlap: 0.2,
            malware_fraction: 0.5,
            n: 240,
        };
        let data = crate::data::synth_generate(&spec, 13).unwrap();
        let (train_split, test_split) = crate::data::split(&data, 0.8, 13).unwrap();
        let blackbox =
            detectors::fit(ClassifierKind::Lr, &HyperParams::default(), &train_split, 13)
                .unwrap();
        let probe = test_split.rows_with_label(1);

        // Hotter generator and more epochs than the defaults: the toy run
        // has only six steps per epoch to travel from the near-identity
        // initialization.
        let config = GanConfig {
            num_features: 12,
            noise_dim: 4,
            hidden_width: 16,
            batch_size: 16,
            lr_generator: 2e-2,
            ..GanConfig::default()
        };
        let mut gan = build_variant(GanVariant::MalD2Gan, &config, 17).unwrap();

        let agreement = |gan: &Gan, x: &Matrix| {
            let bb = blackbox.predict(x).unwrap();
            let sub = gan.substitute.infer(x).unwrap();
            let hits = bb
                .iter()
                .zip(sub.data())
                .filter(|&(&b, &p)| (p > 0.5) == (b == 1))
                .count();
            hits as f64 / bb.len() as f64
        };
        let probe_mixed = test_split.features();
        let agree_before = agreement(&gan, probe_mixed);

        let stats = train(&mut gan, &blackbox, &train_split, &probe, 40, 17).unwrap();
        let agree_after = agreement(&gan, probe_mixed);

        let first = stats.first().unwrap().adv_tpr;
        let last = stats.last().unwrap().adv_tpr;
        assert!(
            last < first,
            "adversarial TPR did not drop: {first} -> {last}"
        );
        assert!(
            agree_after > agree_before,
            "substitute agreement did not rise: {agree_before} -> {agree_after}"
        );
    }
}
