//! IO, file formats, reporting, and the CLI around the `malgan-core`
//! numerics: binary model containers, dataset CSVs, Cuckoo-report
//! featurization, experiment reports, configuration, and run manifests.

pub mod config;
pub mod container;
pub mod cuckoo;
pub mod dataset_csv;
pub mod error;
pub mod manifest;
pub mod report;
pub mod runner;

pub use error::{LabError, Result};
