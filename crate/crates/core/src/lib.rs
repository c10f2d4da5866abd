//! Reconstruction of pixel-undersampled grayscale iris images and a
//! Daugman-style recognition pipeline over the reconstructions.
//!
//! The crate is organized as a small stack:
//!
//! - [`imagekit`] — grayscale image I/O (PGM/PNG), PSNR, dataset manifests.
//! - [`transforms`] — orthonormal 2D DCT and unitary 2D DFT sparsity bases,
//!   plus coefficient thresholding.
//! - [`sampling`] — seeded random pixel subsampling masks and measurement
//!   vectors.
//! - [`recon`] — total-variation and iterative-thresholding solvers that
//!   recover a full image from a subset of its pixels.
//! - [`iris`] — integro-differential boundary localization, rubber-sheet
//!   normalization, Gabor iris codes, masked Hamming matching.
//! - [`fixtures`] — deterministic synthetic eye images used as test data.
//! - [`harness`] — experiment driver sweeping sparsity domains and sampling
//!   fractions over a dataset, emitting CSV/JSON reports.

pub mod fixtures;
pub mod harness;
pub mod imagekit;
pub mod iris;
pub mod recon;
pub mod sampling;
pub mod transforms;
