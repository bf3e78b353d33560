//! Subcommands and the CLI entry point.
//!
//! Every subcommand resolves one [`RunConfig`] (defaults, then `--config`
//! file, then flags), writes its artifacts under its own subdirectory of the
//! output directory, and drops a `manifest.json` there recording the seed and
//! the full config echo. The dataset is the one shared artifact: `synth-data`
//! writes it to the configured data path and everything downstream reads it
//! from there.
//!
//! Layout under `{out}/`:
//!
//! ```text
//! dataset.csv                          synth-data (or the --data override)
//! synth-data/manifest.json
//! featurize/dataset.csv                sandbox reports turned into vectors
//! select-features/dataset.csv          reduced columns + kept_features.txt
//! train-blackbox/{RF,...}.bin          fitted detectors
//! train-gan/{variant}_{kind}.bin       attack models + stats/ curves
//! evaluate/attack_report.{csv,md}      the full grid + models/ gan/ stats/
//! retrain-defense/retrain_report.{csv,md}  hardened models/ + retrained gan/
//! gradcheck/report.txt                 per-check max relative errors
//! ```
//!
//! Subcommands never write into another's directory, so any stage can be
//! rerun in place without invalidating the rest.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use malgan_core::data::{self, SyntheticSpec};
use malgan_core::detectors::{self, ClassifierKind, HyperParams};
use malgan_core::experiments::{self, ExperimentConfig};
use malgan_core::gan::{build_variant, train, GanVariant};
use malgan_core::numnet::{
    grad_check, ActivationKind, BatchNormLayer, DenseLayer, Layer, LossKind, Network,
};
use malgan_core::seeds;
use malgan_core::{LabeledDataset, Matrix};

use crate::config::{resolve_config, RunConfig};
use crate::container;
use crate::cuckoo;
use crate::dataset_csv;
use crate::error::{LabError, Result};
use crate::manifest::Manifest;
use crate::report::{self, AttackRow, DefenseRow, ReportFormat};

/// Adversarial-example laboratory for feature-vector malware detectors.
#[derive(Parser, Debug)]
#[command(name = "malgan-lab", version, about)]
pub struct Cli {
    /// Key=value config file applied between the defaults and the flags
    #[arg(long, value_name = "PATH", global = true)]
    pub config: Option<PathBuf>,
    /// Master seed every component seed derives from [default: 42]
    #[arg(long, value_name = "N", global = true)]
    pub seed: Option<String>,
    /// Output directory [default: out]
    #[arg(long, value_name = "DIR", global = true)]
    pub out: Option<String>,
    /// Dataset CSV path [default: {out}/dataset.csv]
    #[arg(long, value_name = "PATH", global = true)]
    pub data: Option<String>,
    /// Synthetic corpus size [default: 20000]
    #[arg(long, value_name = "N", global = true)]
    pub n: Option<String>,
    /// Fraction of synthetic rows labeled malware [default: 0.7]
    #[arg(long, value_name = "F", global = true)]
    pub malware_fraction: Option<String>,
    /// Class-distribution blending, 0 = fully apart [default: 0.45]
    #[arg(long, value_name = "F", global = true)]
    pub overlap: Option<String>,
    /// Fraction of rows in the training split [default: 0.8]
    #[arg(long, value_name = "F", global = true)]
    pub train_fraction: Option<String>,
    /// Feature-vector width [default: 160]
    #[arg(long, value_name = "M", global = true)]
    pub num_features: Option<String>,
    /// Generator noise width [default: 10]
    #[arg(long, value_name = "Z", global = true)]
    pub noise_dim: Option<String>,
    /// Substitute-detector weight in the combined loss [default: 0.5]
    #[arg(long, value_name = "A", global = true)]
    pub alpha: Option<String>,
    /// Hidden width of all dense blocks [default: 256]
    #[arg(long, value_name = "W", global = true)]
    pub hidden_width: Option<String>,
    /// Minibatch size [default: 128]
    #[arg(long, value_name = "B", global = true)]
    pub batch_size: Option<String>,
    /// Attack training epochs [default: 20]
    #[arg(long, value_name = "E", global = true)]
    pub epochs: Option<String>,
    /// Attacker epochs after the defense hardens [default: 5]
    #[arg(long, value_name = "E", global = true)]
    pub retrain_epochs: Option<String>,
    /// Generator learning rate [default: 0.005]
    #[arg(long, value_name = "LR", global = true)]
    pub lr_generator: Option<String>,
    /// Substitute-detector learning rate [default: 0.001]
    #[arg(long, value_name = "LR", global = true)]
    pub lr_substitute: Option<String>,
    /// Additional-detector learning rate [default: 0.001]
    #[arg(long, value_name = "LR", global = true)]
    pub lr_additional: Option<String>,
    /// Comma-separated detector kinds [default: RF,LR,DT,SVM,MLP,AB,GB,KNN]
    #[arg(long, value_name = "LIST", global = true)]
    pub detectors: Option<String>,
    /// Comma-separated attack variants [default: Mal-D2GAN,Mal-LSGAN,MalGAN]
    #[arg(long, value_name = "LIST", global = true)]
    pub variants: Option<String>,
    /// Defense rounds in the retraining experiment [default: 5]
    #[arg(long, value_name = "R", global = true)]
    pub rounds: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the synthetic dataset and write it to the data path
    SynthData,
    /// Turn sandbox behavior reports into a dataset CSV
    Featurize {
        /// Directory holding malware/ and benign/ subdirectories of JSON reports
        #[arg(long, value_name = "DIR")]
        reports: PathBuf,
        /// Feature vocabulary, one API name per line
        #[arg(long, value_name = "PATH")]
        vocab: PathBuf,
    },
    /// Keep the k most important dataset features
    SelectFeatures {
        /// How many features to keep
        #[arg(long, value_name = "K")]
        k: usize,
    },
    /// Fit the configured black-box detectors and save them
    TrainBlackbox,
    /// Train every configured attack variant against each saved detector
    TrainGan,
    /// Run the full attack grid and write its reports
    Evaluate,
    /// Run the retraining defense and write its reports
    RetrainDefense,
    /// Verify analytic gradients against central differences
    Gradcheck {
        /// Random architectures per network family
        #[arg(long, value_name = "N", default_value_t = 24)]
        seeds: usize,
    },
}

impl Cli {
    /// Flag values as config overrides, in declaration order.
    fn overrides(&self) -> Vec<(String, String)> {
        let pairs: [(&str, &Option<String>); 20] = [
            ("seed", &self.seed),
            ("out", &self.out),
            ("data", &self.data),
            ("n", &self.n),
            ("malware_fraction", &self.malware_fraction),
            ("overlap", &self.overlap),
            ("train_fraction", &self.train_fraction),
            ("num_features", &self.num_features),
            ("noise_dim", &self.noise_dim),
            ("alpha", &self.alpha),
            ("hidden_width", &self.hidden_width),
            ("batch_size", &self.batch_size),
            ("epochs", &self.epochs),
            ("retrain_epochs", &self.retrain_epochs),
            ("lr_generator", &self.lr_generator),
            ("lr_substitute", &self.lr_substitute),
            ("lr_additional", &self.lr_additional),
            ("detectors", &self.detectors),
            ("variants", &self.variants),
            ("rounds", &self.rounds),
        ];
        pairs
            .iter()
            .filter_map(|(key, value)| value.as_ref().map(|v| (key.to_string(), v.clone())))
            .collect()
    }

    /// Resolves the effective config for this invocation.
    pub fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
                Some((text, path.display().to_string()))
            }
            None => None,
        };
        resolve_config(
            file.as_ref().map(|(t, l)| (t.as_str(), l.as_str())),
            &self.overrides(),
        )
    }
}

/// Parses the process arguments, runs, and maps errors to exit codes
/// (0 success, 1 validation, 2 runtime).
pub fn cli_main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Dispatches one parsed invocation.
pub fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.resolve()?;
    match &cli.command {
        Command::SynthData => cmd_synth_data(&cfg),
        Command::Featurize { reports, vocab } => cmd_featurize(&cfg, reports, vocab),
        Command::SelectFeatures { k } => cmd_select_features(&cfg, *k),
        Command::TrainBlackbox => cmd_train_blackbox(&cfg),
        Command::TrainGan => cmd_train_gan(&cfg),
        Command::Evaluate => cmd_evaluate(&cfg),
        Command::RetrainDefense => cmd_retrain_defense(&cfg),
        Command::Gradcheck { seeds } => cmd_gradcheck(&cfg, *seeds),
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| LabError::io(path, e))
}

/// Creates and returns this subcommand's own directory under the out dir.
fn subdir(cfg: &RunConfig, name: &str) -> Result<PathBuf> {
    let dir = cfg.out.join(name);
    ensure_dir(&dir)?;
    Ok(dir)
}

fn write_manifest(cfg: &RunConfig, subcommand: &str, dir: &Path) -> Result<()> {
    Manifest::new(subcommand, cfg).save(&dir.join("manifest.json"))
}

fn load_dataset(cfg: &RunConfig) -> Result<LabeledDataset> {
    let path = cfg.data_path();
    if !path.is_file() {
        return Err(LabError::MissingArtifact {
            artifact: "dataset".into(),
            producer: "synth-data",
            path,
        });
    }
    dataset_csv::load_dataset(&path)
}

fn check_width(cfg: &RunConfig, dataset: &LabeledDataset) -> Result<()> {
    if dataset.num_features() != cfg.gan.num_features {
        return Err(LabError::config(
            "num_features",
            format!(
                "dataset at {} is {} features wide, not {}",
                cfg.data_path().display(),
                dataset.num_features(),
                cfg.gan.num_features
            ),
        ));
    }
    Ok(())
}

fn experiment_config(cfg: &RunConfig) -> ExperimentConfig {
    ExperimentConfig {
        gan: cfg.gan.clone(),
        detector_params: HyperParams::default(),
        train_fraction: cfg.train_fraction,
        seed: cfg.seed,
    }
}

fn split_seed(cfg: &RunConfig) -> u64 {
    seeds::child_seed(cfg.seed, "split", 0)
}

fn model_file(kind: ClassifierKind) -> String {
    format!("{}.bin", kind.name())
}

fn pair_file(variant: GanVariant, kind: ClassifierKind, ext: &str) -> String {
    format!("{}_{}.{ext}", variant.name(), kind.name())
}

fn cmd_synth_data(cfg: &RunConfig) -> Result<()> {
    let mut spec = SyntheticSpec::default_profile(cfg.n, cfg.overlap);
    spec.malware_fraction = cfg.malware_fraction;
    if spec.benign_probs.len() != cfg.gan.num_features {
        return Err(LabError::config(
            "num_features",
            format!(
                "the committed synthetic profile is {} features wide; \
                 use featurize with a matching vocabulary for other widths",
                spec.benign_probs.len()
            ),
        ));
    }
    // The dataset is seeded by the master seed itself; everything downstream
    // draws from labeled child streams.
    let dataset = data::synth_generate(&spec, cfg.seed)?;
    let path = cfg.data_path();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    dataset_csv::save_dataset(&path, &dataset)?;
    let dir = subdir(cfg, "synth-data")?;
    write_manifest(cfg, "synth-data", &dir)?;
    println!(
        "wrote {} rows x {} features ({} malware, {} benign) to {}",
        dataset.len(),
        dataset.num_features(),
        dataset.count_label(1),
        dataset.count_label(0),
        path.display()
    );
    Ok(())
}

fn sorted_json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(LabError::format(
            dir.display().to_string(),
            "directory not found; featurize expects malware/ and benign/ subdirectories",
        ));
    }
    let mut files = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| LabError::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| LabError::io(dir, e))?;
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    // Directory order is filesystem-dependent; sorting keeps runs identical.
    files.sort();
    Ok(files)
}

fn cmd_featurize(cfg: &RunConfig, reports: &Path, vocab_path: &Path) -> Result<()> {
    let vocab = cuckoo::load_vocab(vocab_path)?;
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    let mut counts = [0usize; 2];
    for (label, sub) in [(1u8, "malware"), (0u8, "benign")] {
        for file in sorted_json_files(&reports.join(sub))? {
            let report = cuckoo::load_report(&file)?;
            if report.missing_behavior {
                println!(
                    "note: {} has no behavior section; its features are all zero",
                    file.display()
                );
            }
            vectors.push(cuckoo::vectorize(&report, &vocab));
            labels.push(label);
            counts[label as usize] += 1;
        }
    }
    if vectors.is_empty() {
        return Err(LabError::format(
            reports.display().to_string(),
            "no .json reports under malware/ or benign/",
        ));
    }
    let features = Matrix::from_rows(&vectors)?;
    let dataset = LabeledDataset::new(features, labels)?;
    let dir = subdir(cfg, "featurize")?;
    let out_path = dir.join("dataset.csv");
    dataset_csv::save_dataset(&out_path, &dataset)?;
    write_manifest(cfg, "featurize", &dir)?;
    println!(
        "featurized {} reports ({} malware, {} benign) against {} vocabulary words: {}",
        dataset.len(),
        counts[1],
        counts[0],
        vocab.len(),
        out_path.display()
    );
    Ok(())
}

fn cmd_select_features(cfg: &RunConfig, k: usize) -> Result<()> {
    let dataset = load_dataset(cfg)?;
    let (kept, reduced) = data::select_features(
        &dataset,
        k,
        seeds::child_seed(cfg.seed, "select-features", 0),
    )?;
    let dir = subdir(cfg, "select-features")?;
    dataset_csv::save_dataset(&dir.join("dataset.csv"), &reduced)?;
    let listing: String = kept.iter().map(|i| format!("{i}\n")).collect();
    let kept_path = dir.join("kept_features.txt");
    fs::write(&kept_path, listing).map_err(|e| LabError::io(&kept_path, e))?;
    write_manifest(cfg, "select-features", &dir)?;
    println!(
        "kept {} of {} features (importance order in {})",
        k,
        dataset.num_features(),
        kept_path.display()
    );
    Ok(())
}

fn cmd_train_blackbox(cfg: &RunConfig) -> Result<()> {
    let dataset = load_dataset(cfg)?;
    let (train_split, test_split) = data::split(&dataset, cfg.train_fraction, split_seed(cfg))?;
    let train_malware = train_split.rows_with_label(1);
    let test_malware = test_split.rows_with_label(1);
    let dir = subdir(cfg, "train-blackbox")?;
    for &kind in &cfg.detectors {
        let model = detectors::fit(
            kind,
            &HyperParams::default(),
            &train_split,
            seeds::child_seed(cfg.seed, "blackbox-fit", experiments::kind_ordinal(kind)),
        )?;
        container::save_model(&dir.join(model_file(kind)), &model)?;
        println!(
            "{:4} train TPR {:.4}  test TPR {:.4}",
            kind.name(),
            model.true_positive_rate(&train_malware)?,
            model.true_positive_rate(&test_malware)?
        );
    }
    write_manifest(cfg, "train-blackbox", &dir)?;
    Ok(())
}

fn cmd_train_gan(cfg: &RunConfig) -> Result<()> {
    let dataset = load_dataset(cfg)?;
    check_width(cfg, &dataset)?;
    let (train_split, test_split) = data::split(&dataset, cfg.train_fraction, split_seed(cfg))?;
    let test_malware = test_split.rows_with_label(1);
    let models_dir = cfg.out.join("train-blackbox");
    let dir = subdir(cfg, "train-gan")?;
    ensure_dir(&dir.join("stats"))?;
    for &kind in &cfg.detectors {
        let model_path = models_dir.join(model_file(kind));
        if !model_path.is_file() {
            return Err(LabError::MissingArtifact {
                artifact: format!("{} detector model", kind.name()),
                producer: "train-blackbox",
                path: model_path,
            });
        }
        let blackbox = container::load_model(&model_path)?;
        if blackbox.kind() != kind {
            return Err(LabError::format(
                model_path.display().to_string(),
                format!(
                    "holds a {} model, expected {}",
                    blackbox.kind().name(),
                    kind.name()
                ),
            ));
        }
        for &variant in &cfg.variants {
            let seed = experiments::cell_seed(cfg.seed, kind, variant);
            let mut gan = build_variant(variant, &cfg.gan, seed)?;
            let stats = train(
                &mut gan,
                &blackbox,
                &train_split,
                &test_malware,
                cfg.gan.epochs,
                seed,
            )?;
            container::save_gan(&dir.join(pair_file(variant, kind, "bin")), &gan)?;
            report::save_train_stats(
                &dir.join("stats").join(pair_file(variant, kind, "csv")),
                &stats,
            )?;
            let last = stats.last().map_or(f64::NAN, |r| r.adv_tpr);
            println!(
                "{:9} vs {:4}  adversarial TPR on test malware {:.4}",
                variant.name(),
                kind.name(),
                last
            );
        }
    }
    write_manifest(cfg, "train-gan", &dir)?;
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig) -> Result<()> {
    let dataset = load_dataset(cfg)?;
    check_width(cfg, &dataset)?;
    let dir = subdir(cfg, "evaluate")?;
    for sub in ["models", "gan", "stats"] {
        ensure_dir(&dir.join(sub))?;
    }
    let xcfg = experiment_config(cfg);
    let mut rows: Vec<AttackRow> = Vec::new();
    let mut saved: Vec<ClassifierKind> = Vec::new();
    let grid = experiments::evaluate_attack_with(
        &dataset,
        &cfg.variants,
        &cfg.detectors,
        &xcfg,
        |cell, blackbox, gan| -> Result<()> {
            let model_rel = format!("models/{}", model_file(cell.detector));
            if !saved.contains(&cell.detector) {
                container::save_model(&dir.join(&model_rel), blackbox)?;
                saved.push(cell.detector);
            }
            let gan_rel = format!("gan/{}", pair_file(cell.variant, cell.detector, "bin"));
            let stats_rel = format!("stats/{}", pair_file(cell.variant, cell.detector, "csv"));
            container::save_gan(&dir.join(&gan_rel), gan)?;
            report::save_train_stats(&dir.join(&stats_rel), &cell.stats)?;
            rows.push(AttackRow {
                detector: cell.detector,
                variant: cell.variant,
                seed: experiments::cell_seed(cfg.seed, cell.detector, cell.variant),
                original_tpr_train: cell.original_tpr_train,
                original_tpr_test: cell.original_tpr_test,
                adversarial_tpr_train: cell.adversarial_tpr_train,
                adversarial_tpr_test: cell.adversarial_tpr_test,
                stats_csv: stats_rel,
                detector_model: model_rel,
                gan_checkpoint: gan_rel,
            });
            Ok(())
        },
    )?;
    report::emit_attack_report(&rows, ReportFormat::Csv, &dir.join("attack_report.csv"))?;
    report::emit_attack_report(&rows, ReportFormat::Markdown, &dir.join("attack_report.md"))?;
    for cell in &grid.cells {
        println!(
            "{:4} vs {:9}  original {:.4}/{:.4}  adversarial {:.4}/{:.4}  (train/test)",
            cell.detector.name(),
            cell.variant.name(),
            cell.original_tpr_train,
            cell.original_tpr_test,
            cell.adversarial_tpr_train,
            cell.adversarial_tpr_test
        );
    }
    for &variant in &cfg.variants {
        if let Some(mean) = grid.mean_adversarial_test_tpr(variant) {
            println!("mean adversarial test TPR {:9} {:.4}", variant.name(), mean);
        }
    }
    write_manifest(cfg, "evaluate", &dir)?;
    println!("reports at {}", dir.display());
    Ok(())
}

fn cmd_retrain_defense(cfg: &RunConfig) -> Result<()> {
    let dataset = load_dataset(cfg)?;
    check_width(cfg, &dataset)?;
    let dir = subdir(cfg, "retrain-defense")?;
    for sub in ["models", "gan"] {
        ensure_dir(&dir.join(sub))?;
    }
    let xcfg = experiment_config(cfg);
    let mut rows: Vec<DefenseRow> = Vec::new();
    for &kind in &cfg.detectors {
        for &variant in &cfg.variants {
            let outcome =
                experiments::retrain_defense(kind, variant, &dataset, cfg.rounds, &xcfg)?;
            let model_rel = format!("models/{}", pair_file(variant, kind, "bin"));
            let gan_rel = format!("gan/{}", pair_file(variant, kind, "bin"));
            container::save_model(&dir.join(&model_rel), &outcome.hardened)?;
            container::save_gan(&dir.join(&gan_rel), &outcome.gan)?;
            for record in &outcome.row.rounds {
                println!(
                    "{:4} {:9} round {}  TPR on seen {:.4}  on fresh {:.4}",
                    kind.name(),
                    variant.name(),
                    record.round,
                    record.tpr_on_seen,
                    record.tpr_on_fresh
                );
            }
            println!(
                "{:4} {:9} before {:.4}  after {:.4}",
                kind.name(),
                variant.name(),
                outcome.row.tpr_before,
                outcome.row.tpr_after
            );
            rows.push(DefenseRow {
                detector: kind,
                variant,
                seed: experiments::retrain_seed(cfg.seed, kind, variant),
                rounds: cfg.rounds,
                tpr_before: outcome.row.tpr_before,
                tpr_after: outcome.row.tpr_after,
                detector_model: model_rel,
                gan_checkpoint: gan_rel,
            });
        }
    }
    report::emit_retrain_report(&rows, ReportFormat::Csv, &dir.join("retrain_report.csv"))?;
    report::emit_retrain_report(&rows, ReportFormat::Markdown, &dir.join("retrain_report.md"))?;
    write_manifest(cfg, "retrain-defense", &dir)?;
    println!("reports at {}", dir.display());
    Ok(())
}

/// Toy sizes for the gradient sweep: feature width 8, noise width 4, batch
/// of 10 through hidden width 16. Small enough that a full central-difference
/// pass over every parameter stays well under a minute.
const CHECK_FEATURES: usize = 8;
const CHECK_NOISE: usize = 4;
const CHECK_HIDDEN: usize = 16;
const CHECK_BATCH: usize = 10;

fn random_inputs(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = rng.gen_range(-1.5..1.5);
    }
    m
}

fn binary_targets(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = f64::from(rng.gen_bool(0.5));
    }
    m
}

fn generator_toy(rng: &mut ChaCha8Rng) -> Result<Network> {
    let mut layers = Vec::new();
    let mut width = CHECK_FEATURES + CHECK_NOISE;
    for _ in 0..3 {
        layers.push(Layer::Dense(DenseLayer::glorot(width, CHECK_HIDDEN, rng)));
        layers.push(Layer::Activation(ActivationKind::LeakyReLU(0.2)));
        layers.push(Layer::BatchNorm(BatchNormLayer::new(CHECK_HIDDEN)));
        width = CHECK_HIDDEN;
    }
    layers.push(Layer::Dense(DenseLayer::glorot(width, CHECK_FEATURES, rng)));
    layers.push(Layer::Activation(ActivationKind::Sigmoid));
    Ok(Network::new(layers)?)
}

fn detector_toy(hidden: ActivationKind, rng: &mut ChaCha8Rng) -> Result<Network> {
    Ok(Network::new(vec![
        Layer::Dense(DenseLayer::glorot(CHECK_FEATURES, CHECK_HIDDEN, rng)),
        Layer::Activation(hidden),
        Layer::Dense(DenseLayer::glorot(CHECK_HIDDEN, 1, rng)),
        Layer::Activation(ActivationKind::Sigmoid),
    ])?)
}

fn cmd_gradcheck(cfg: &RunConfig, seeds_to_run: usize) -> Result<()> {
    if seeds_to_run == 0 {
        return Err(LabError::config("seeds", "must be at least 1"));
    }
    let dir = subdir(cfg, "gradcheck")?;
    let mut lines: Vec<String> = Vec::new();
    let mut failures = 0usize;
    let mut worst_plain = 0.0f64;
    let mut worst_bn = 0.0f64;
    let mut checks = 0usize;
    for index in 0..seeds_to_run {
        let mut rng = seeds::child_rng(cfg.seed, "gradcheck", index as u64);
        let nets: [(&str, Network, bool); 3] = [
            ("generator", generator_toy(&mut rng)?, true),
            (
                "detector-leakyrelu",
                detector_toy(ActivationKind::LeakyReLU(0.2), &mut rng)?,
                false,
            ),
            (
                "detector-sigmoid",
                detector_toy(ActivationKind::Sigmoid, &mut rng)?,
                false,
            ),
        ];
        for (name, net, has_bn) in &nets {
            let out_width = if *name == "generator" { CHECK_FEATURES } else { 1 };
            let in_width = if *name == "generator" {
                CHECK_FEATURES + CHECK_NOISE
            } else {
                CHECK_FEATURES
            };
            let x = random_inputs(CHECK_BATCH, in_width, &mut rng);
            let target = binary_targets(CHECK_BATCH, out_width, &mut rng);
            // Batch norm renormalizes the whole batch after every
            // perturbation, so its checks get a coarser tolerance.
            let (h, tol) = if *has_bn { (1e-5, 1e-3) } else { (1e-5, 1e-4) };
            for (kind, kind_name) in [
                (LossKind::LeastSquares, "least-squares"),
                (LossKind::BinaryCrossEntropy, "cross-entropy"),
            ] {
                let outcome = grad_check(net, kind, &x, &target, h, tol)?;
                let worst = if *has_bn { &mut worst_bn } else { &mut worst_plain };
                *worst = worst.max(outcome.max_relative_error);
                checks += 1;
                if !outcome.passed {
                    failures += 1;
                }
                lines.push(format!(
                    "seed {index:3}  {name:18} {kind_name:13}  max rel err {:.3e}  tol {tol:.0e}  {}",
                    outcome.max_relative_error,
                    if outcome.passed { "ok" } else { "FAIL" }
                ));
            }
        }
    }
    let summary = format!(
        "{checks} checks across {seeds_to_run} seeds; worst relative error {:.3e} plain, {:.3e} with batch norm; {failures} failures",
        worst_plain, worst_bn
    );
    lines.push(summary.clone());
    let report_path = dir.join("report.txt");
    let mut text = lines.join("\n");
    text.push('\n');
    fs::write(&report_path, text).map_err(|e| LabError::io(&report_path, e))?;
    write_manifest(cfg, "gradcheck", &dir)?;
    println!("{summary}");
    println!("details at {}", report_path.display());
    if failures > 0 {
        return Err(LabError::format(
            "gradcheck",
            format!("{failures} checks exceeded tolerance"),
        ));
    }
    Ok(())
}
