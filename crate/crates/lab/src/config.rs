//! Run configuration: documented defaults, a key=value config file, and flag
//! overrides, resolved in that precedence order (flag beats file beats
//! default).
//!
//! The file format is one `key = value` per line; blank lines and lines
//! starting with `#` are skipped. Values keep everything after the first `=`,
//! so paths may contain `=` but not leading or trailing whitespace. The
//! resolved config renders back to the same format via [`RunConfig::echo`],
//! and that text both reparses to an equal config and serves as the
//! provenance record hashed into run manifests.

use std::path::PathBuf;

use malgan_core::data::DEFAULT_OVERLAP;
use malgan_core::detectors::ClassifierKind;
use malgan_core::gan::{GanConfig, GanVariant};
use malgan_core::Error as CoreError;

use crate::error::{LabError, Result};

/// Everything a subcommand needs, fully resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Master seed; per-component seeds derive from it by labeled streams.
    pub seed: u64,
    /// Output directory; each subcommand writes under its own subdirectory.
    pub out: PathBuf,
    /// Dataset CSV location. Unset means `{out}/dataset.csv`.
    pub data: Option<PathBuf>,
    /// Architecture and training schedule shared by all attack variants.
    pub gan: GanConfig,
    /// Synthetic corpus size.
    pub n: usize,
    /// Fraction of synthetic rows labeled malware.
    pub malware_fraction: f64,
    /// Class-distribution blending for the synthetic corpus; 0 keeps the
    /// classes apart, 1 makes them identical.
    pub overlap: f64,
    /// Fraction of rows in the training split.
    pub train_fraction: f64,
    /// Black-box detector kinds to train and attack.
    pub detectors: Vec<ClassifierKind>,
    /// Attack variants to run.
    pub variants: Vec<GanVariant>,
    /// Defense rounds for the retraining experiment.
    pub rounds: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out: PathBuf::from("out"),
            data: None,
            gan: GanConfig::default(),
            n: 20_000,
            malware_fraction: 0.7,
            overlap: DEFAULT_OVERLAP,
            train_fraction: 0.8,
            detectors: ClassifierKind::ALL.to_vec(),
            variants: GanVariant::ALL.to_vec(),
            rounds: 5,
        }
    }
}

fn bad(key: &str, message: impl Into<String>) -> LabError {
    LabError::config(key, message)
}

fn parse_num<T: core::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| bad(key, format!("{value:?} is not {what}")))
}

fn parse_list<T: Copy + PartialEq>(
    key: &str,
    value: &str,
    lookup: impl Fn(&str) -> Option<T>,
    name_of: impl Fn(T) -> &'static str,
) -> Result<Vec<T>> {
    let mut items = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(bad(key, "empty list entry"));
        }
        let item = lookup(part).ok_or_else(|| bad(key, format!("unknown name {part:?}")))?;
        if items.contains(&item) {
            return Err(bad(key, format!("duplicate entry {:?}", name_of(item))));
        }
        items.push(item);
    }
    if items.is_empty() {
        return Err(bad(key, "list must not be empty"));
    }
    Ok(items)
}

impl RunConfig {
    /// Dataset path, defaulting next to the other artifacts.
    pub fn data_path(&self) -> PathBuf {
        self.data
            .clone()
            .unwrap_or_else(|| self.out.join("dataset.csv"))
    }

    /// Sets one key from its textual value. Both the config file and flag
    /// overrides funnel through here so they accept identical syntax.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_num(key, value, "a non-negative integer")?,
            "out" => self.out = PathBuf::from(value),
            "data" => self.data = Some(PathBuf::from(value)),
            "num_features" => self.gan.num_features = parse_num(key, value, "a positive integer")?,
            "noise_dim" => self.gan.noise_dim = parse_num(key, value, "a positive integer")?,
            "alpha" => self.gan.alpha = parse_num(key, value, "a number")?,
            "hidden_width" => self.gan.hidden_width = parse_num(key, value, "a positive integer")?,
            "batch_size" => self.gan.batch_size = parse_num(key, value, "a positive integer")?,
            "epochs" => self.gan.epochs = parse_num(key, value, "a positive integer")?,
            "retrain_epochs" => {
                self.gan.retrain_epochs = parse_num(key, value, "a positive integer")?
            }
            "lr_generator" => self.gan.lr_generator = parse_num(key, value, "a number")?,
            "lr_substitute" => self.gan.lr_substitute = parse_num(key, value, "a number")?,
            "lr_additional" => self.gan.lr_additional = parse_num(key, value, "a number")?,
            "n" => self.n = parse_num(key, value, "a positive integer")?,
            "malware_fraction" => self.malware_fraction = parse_num(key, value, "a number")?,
            "overlap" => self.overlap = parse_num(key, value, "a number")?,
            "train_fraction" => self.train_fraction = parse_num(key, value, "a number")?,
            "detectors" => {
                self.detectors =
                    parse_list(key, value, ClassifierKind::from_name, ClassifierKind::name)?
            }
            "variants" => {
                self.variants = parse_list(key, value, GanVariant::from_name, GanVariant::name)?
            }
            "rounds" => self.rounds = parse_num(key, value, "a positive integer")?,
            _ => return Err(bad(key, "unknown key")),
        }
        Ok(())
    }

    /// Range checks across the resolved values, each error naming its key.
    pub fn validate(&self) -> Result<()> {
        self.gan.validate().map_err(|e| match e {
            CoreError::InvalidParam { name, reason } => bad(name, reason),
            other => LabError::Core(other),
        })?;
        if self.gan.epochs == 0 {
            return Err(bad("epochs", "must be at least 1"));
        }
        if self.gan.retrain_epochs == 0 {
            return Err(bad("retrain_epochs", "must be at least 1"));
        }
        if self.n < 4 {
            return Err(bad("n", "needs at least 4 rows to split and train"));
        }
        if !(self.malware_fraction > 0.0 && self.malware_fraction < 1.0) {
            return Err(bad("malware_fraction", "must lie strictly inside (0,1)"));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(bad("overlap", "must lie in [0,1]"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(bad("train_fraction", "must lie strictly inside (0,1)"));
        }
        if self.rounds == 0 {
            return Err(bad("rounds", "must be at least 1"));
        }
        Ok(())
    }

    /// Canonical key=value rendering. Parsing this text back yields an equal
    /// config; its bytes are what run manifests hash for provenance.
    pub fn echo(&self) -> String {
        let detectors: Vec<&str> = self.detectors.iter().map(|k| k.name()).collect();
        let variants: Vec<&str> = self.variants.iter().map(|v| v.name()).collect();
        let mut out = String::new();
        for (key, value) in [
            ("seed", self.seed.to_string()),
            ("out", self.out.display().to_string()),
            ("data", self.data_path().display().to_string()),
            ("n", self.n.to_string()),
            ("malware_fraction", self.malware_fraction.to_string()),
            ("overlap", self.overlap.to_string()),
            ("train_fraction", self.train_fraction.to_string()),
            ("num_features", self.gan.num_features.to_string()),
            ("noise_dim", self.gan.noise_dim.to_string()),
            ("alpha", self.gan.alpha.to_string()),
            ("hidden_width", self.gan.hidden_width.to_string()),
            ("batch_size", self.gan.batch_size.to_string()),
            ("epochs", self.gan.epochs.to_string()),
            ("retrain_epochs", self.gan.retrain_epochs.to_string()),
            ("lr_generator", self.gan.lr_generator.to_string()),
            ("lr_substitute", self.gan.lr_substitute.to_string()),
            ("lr_additional", self.gan.lr_additional.to_string()),
            ("detectors", detectors.join(",")),
            ("variants", variants.join(",")),
            ("rounds", self.rounds.to_string()),
        ] {
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }
}

/// Applies a config file's lines on top of `config`.
pub fn apply_config_text(config: &mut RunConfig, text: &str, location: &str) -> Result<()> {
    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(LabError::format(
                format!("{location}:{line_no}"),
                format!("expected `key = value`, got {line:?}"),
            ));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(LabError::format(
                format!("{location}:{line_no}"),
                "empty key before `=`",
            ));
        }
        config.apply(key, value.trim())?;
    }
    Ok(())
}

/// Resolves defaults, then the optional file, then flag overrides, and
/// validates the result.
pub fn resolve_config(
    file: Option<(&str, &str)>,
    overrides: &[(String, String)],
) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    if let Some((text, location)) = file {
        apply_config_text(&mut config, text, location)?;
    }
    for (key, value) in overrides {
        config.apply(key, value)?;
    }
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let c = RunConfig::default();
        assert_eq!(c.seed, 42);
        assert_eq!(c.gan.num_features, 160);
        assert_eq!(c.gan.noise_dim, 10);
        assert_eq!(c.gan.alpha, 0.5);
        assert_eq!(c.gan.epochs, 20);
        assert_eq!(c.gan.retrain_epochs, 5);
        assert_eq!(c.n, 20_000);
        assert_eq!(c.malware_fraction, 0.7);
        assert_eq!(c.train_fraction, 0.8);
        assert_eq!(c.detectors.len(), 8);
        assert_eq!(c.variants.len(), 3);
        assert_eq!(c.rounds, 5);
        assert_eq!(c.data_path(), PathBuf::from("out/dataset.csv"));
        c.validate().unwrap();
    }

    #[test]
    fn empty_file_yields_defaults() {
        let c = resolve_config(Some(("", "empty.conf")), &[]).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# a comment\n\n  seed = 7\n# another\nepochs=3\n";
        let c = resolve_config(Some((text, "t.conf")), &[]).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.gan.epochs, 3);
    }

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let overrides = vec![("epochs".to_string(), "2".to_string())];
        let c = resolve_config(Some(("epochs = 20\nseed = 9\n", "t.conf")), &overrides).unwrap();
        assert_eq!(c.gan.epochs, 2);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn out_of_range_values_are_rejected_naming_the_key() {
        for (text, key) in [
            ("alpha = 1.5", "alpha"),
            ("train_fraction = 1", "train_fraction"),
            ("malware_fraction = 0", "malware_fraction"),
            ("overlap = -0.1", "overlap"),
            ("rounds = 0", "rounds"),
            ("epochs = 0", "epochs"),
            ("batch_size = 0", "batch_size"),
            ("n = 2", "n"),
        ] {
            let err = resolve_config(Some((text, "t.conf")), &[]).unwrap_err();
            assert!(err.to_string().contains(key), "{text} -> {err}");
        }
    }

    #[test]
    fn unknown_keys_and_malformed_lines_are_rejected() {
        let err = resolve_config(Some(("widgets = 3", "t.conf")), &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("widgets") && msg.contains("unknown"), "{msg}");

        let err = resolve_config(Some(("seed 42", "t.conf")), &[]).unwrap_err();
        assert!(err.to_string().contains("t.conf:1"), "{err}");

        let err = resolve_config(Some(("seed = abc", "t.conf")), &[]).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn detector_and_variant_lists_parse_and_reject_bad_entries() {
        let c = resolve_config(
            Some(("detectors = RF, knn\nvariants = MalGAN", "t.conf")),
            &[],
        )
        .unwrap();
        assert_eq!(c.detectors, vec![ClassifierKind::Rf, ClassifierKind::Knn]);
        assert_eq!(c.variants, vec![GanVariant::MalGan]);

        for text in [
            "detectors = RF, frobnicator",
            "detectors = RF, RF",
            "detectors = ",
            "variants = MalGAN,, MalGAN",
        ] {
            assert!(resolve_config(Some((text, "t.conf")), &[]).is_err(), "{text}");
        }
    }

    #[test]
    fn echo_reparses_to_an_equal_config() {
        let mut c = RunConfig::default();
        c.seed = 1234;
        c.gan.alpha = 0.25;
        c.gan.lr_generator = 5e-3;
        c.detectors = vec![ClassifierKind::Dt, ClassifierKind::Svm];
        c.variants = vec![GanVariant::MalD2Gan, GanVariant::MalGan];
        c.out = PathBuf::from("runs/demo");
        let echo = c.echo();
        let back = resolve_config(Some((&echo, "echo.conf")), &[]).unwrap();
        // The echo pins the resolved dataset path, so compare with it pinned.
        c.data = Some(c.data_path());
        assert_eq!(back, c);
        // Echo of the reparse is byte-identical, so hashing it is stable.
        assert_eq!(back.echo(), echo);
    }

    #[test]
    fn override_values_are_validated_too() {
        let overrides = vec![("alpha".to_string(), "1.5".to_string())];
        let err = resolve_config(None, &overrides).unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
    }
}
