//! Run manifests: the provenance record each subcommand writes next to its
//! artifacts.
//!
//! A manifest embeds the resolved config echo verbatim plus its SHA-256, the
//! master seed, the subcommand that ran, and the crate versions. That is
//! enough to recompute any artifact: feed the echo back as a config file and
//! rerun the subcommand. Manifests deliberately carry no timestamp or host
//! details, so identical runs write identical bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Which subcommand produced the artifacts beside this file.
    pub subcommand: String,
    /// Master seed the run derived all component seeds from.
    pub seed: u64,
    /// SHA-256 of `config`, for quick comparison between runs.
    pub config_sha256: String,
    /// The resolved config echo; a valid config file reproducing the run.
    pub config: String,
    pub versions: Versions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub malgan_lab: String,
    pub malgan_core: String,
}

/// Hex SHA-256 of the config echo text.
pub fn config_digest(echo: &str) -> String {
    hex::encode(Sha256::digest(echo.as_bytes()))
}

impl Manifest {
    pub fn new(subcommand: &str, config: &RunConfig) -> Manifest {
        let echo = config.echo();
        Manifest {
            subcommand: subcommand.to_string(),
            seed: config.seed,
            config_sha256: config_digest(&echo),
            config: echo,
            versions: Versions {
                malgan_lab: env!("CARGO_PKG_VERSION").to_string(),
                malgan_core: malgan_core::VERSION.to_string(),
            },
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| {
            LabError::format(path.display().to_string(), format!("encoding manifest: {e}"))
        })?;
        text.push('\n');
        fs::write(path, text).map_err(|e| LabError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| {
            LabError::format(format!("{}:{}:{}", path.display(), e.line(), e.column()), e.to_string())
        })?;
        if config_digest(&manifest.config) != manifest.config_sha256 {
            return Err(LabError::format(
                path.display().to_string(),
                "config_sha256 does not match the embedded config text",
            ));
        }
        Ok(manifest)
    }
}
