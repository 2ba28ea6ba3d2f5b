//! Dense symmetric linear algebra and covariance estimation.

pub mod covariance;
pub mod dataset;
pub mod eigen;
pub mod matrix;

pub use covariance::{covariance_error_norm, sample_covariance, CovNormalization, CovarianceModel};
pub use dataset::{format_f64, Dataset, TargetSource};
pub use eigen::{canonical_sign, operator_norm_sym, sym_eigendecomposition, EigenSystem};
pub use matrix::{dot, norm2, DenseMatrix};
