//! Experiment driver: sweeps sparsity domains and sampling fractions over a
//! dataset, reconstructs every cell, reruns the recognition pipeline on the
//! reconstruction and matches it against the fully sampled enrollment.
//!
//! A run is fully determined by its [`ExperimentConfig`]. Every grid cell
//! `(image, domain, fraction)` draws its sampling mask from a cell seed
//! derived only from the cell identity and the base seed (see
//! [`cell_seed`]), so reordering the fraction or domain lists never changes
//! a per-cell result and two runs of the same config are byte-identical.

mod config;
mod experiment;
mod tables;

pub use config::ExperimentConfig;
pub use experiment::{cell_seed, run_experiment, CellRecord, ExperimentReport, SkippedImage};
pub use tables::emit_tables;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("image error: {0}")]
    Image(#[from] crate::imagekit::ImageError),
    #[error("sampling error: {0}")]
    Sampling(#[from] crate::sampling::SamplingError),
    #[error("reconstruction error: {0}")]
    Recon(#[from] crate::recon::ReconError),
    #[error("iris error: {0}")]
    Iris(#[from] crate::iris::IrisError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}
