//! Learning on covariance matrices.
//!
//! The crate treats a covariance matrix as the shift operator of a graph
//! whose nodes are data dimensions. On top of that sit:
//!
//! - [`numcore`]: dense symmetric linear algebra, covariance estimation,
//!   and dataset handling;
//! - [`spectral`]: the covariance Fourier transform, polynomial covariance
//!   filters, and the filterbank route to PCA scores;
//! - [`vnn`]: covariance neural networks built from filter banks, with
//!   analytic backpropagation, Adam/SGD training, covariance swapping, and
//!   a versioned model blob format;
//! - [`baseline`]: PCA regression baselines (linear and RBF kernel ridge)
//!   with cross-validated component selection;
//! - [`datagen`]: seeded synthetic data generators;
//! - [`experiments`]: stability, scaling-law, Lipschitz-bound, and
//!   transferability harnesses that emit structured, reproducible reports.
//!
//! Everything is deterministic given a seed: randomness flows through a
//! ChaCha8 generator and Gaussian draws use an explicit Box-Muller
//! transform, so reports and CSV fixtures are bit-reproducible.

#![allow(clippy::needless_range_loop)]

pub mod baseline;
pub mod datagen;
pub mod error;
pub mod experiments;
pub mod numcore;
pub mod spectral;
pub mod vnn;

pub use error::{Error, Result};
pub use numcore::{
    canonical_sign, covariance_error_norm, format_f64, operator_norm_sym, sample_covariance,
    sym_eigendecomposition, CovNormalization, CovarianceModel, Dataset, DenseMatrix, EigenSystem,
    TargetSource,
};
pub use spectral::{
    apply_filter, filter_matrix, frequency_response, inverse_vft, pca_scores_via_filterbank,
    spectral_apply, vft, FilterTaps, PcaFilterbank, SpectralResponse,
};
