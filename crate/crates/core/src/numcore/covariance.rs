//! Covariance models: the graph shift operator of the whole framework.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::dataset::Dataset;
use crate::numcore::eigen::{operator_norm_sym, sym_eigendecomposition, EigenSystem, SYMMETRY_TOL};
use crate::numcore::matrix::DenseMatrix;

/// Eigenvalues may dip below zero by at most this factor of the largest
/// eigenvalue before the matrix is rejected as not PSD.
const PSD_TOL: f64 = 1e-8;

/// How a covariance is normalized before a model binds to it. `Spectral`
/// divides by the top eigenvalue, making the shift operator's scale
/// comparable across covariances of different dimension.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovNormalization {
    #[default]
    None,
    Spectral,
}

impl CovNormalization {
    pub fn apply(self, cov: &CovarianceModel) -> Result<CovarianceModel> {
        match self {
            CovNormalization::None => Ok(cov.clone()),
            CovNormalization::Spectral => cov.spectral_normalized(),
        }
    }
}

/// A symmetric positive semi-definite matrix with a lazily cached
/// eigendecomposition.
///
/// The matrix is immutable after construction; the cache is initialized at
/// most once and is safe to share across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceModel {
    dim: usize,
    matrix: DenseMatrix,
    #[serde(skip)]
    eigen: OnceLock<Result<EigenSystem>>,
}

impl PartialEq for CovarianceModel {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.matrix == other.matrix
    }
}

impl CovarianceModel {
    /// Wraps a symmetric matrix. Inputs asymmetric within the relative
    /// tolerance are symmetrized exactly; anything worse is rejected.
    /// Positive semi-definiteness is validated when the eigendecomposition
    /// is first computed.
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimMismatch {
                expected: matrix.rows(),
                found: matrix.cols(),
                context: "covariance matrix must be square",
            });
        }
        if !matrix.is_finite() {
            return Err(Error::NonFinite("covariance matrix"));
        }
        let scale = matrix.max_abs();
        let dev = matrix.asymmetry();
        if dev > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotSymmetric {
                deviation: dev,
                tol: SYMMETRY_TOL * scale,
            });
        }
        Ok(CovarianceModel {
            dim: matrix.rows(),
            matrix: matrix.symmetrized(),
            eigen: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// The cached eigendecomposition, computed once on first access.
    pub fn eigen(&self) -> Result<&EigenSystem> {
        self.eigen
            .get_or_init(|| {
                let eigen = sym_eigendecomposition(&self.matrix)?;
                let max_eig = eigen.eigenvalues().first().copied().unwrap_or(0.0);
                let min_eig = eigen.eigenvalues().last().copied().unwrap_or(0.0);
                let tol = PSD_TOL * max_eig.max(0.0);
                if min_eig < -tol {
                    return Err(Error::NotPsd { min_eig, tol });
                }
                Ok(eigen)
            })
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// Applies the matrix to a vector.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.matrix.matvec(x)
    }

    /// Divides the matrix by its largest eigenvalue (no-op on the zero
    /// matrix). Off by default everywhere; exposed behind `--cov-scale
    /// spectral` to tame filter taps when the raw covariance is large.
    pub fn spectral_normalized(&self) -> Result<CovarianceModel> {
        let top = self.eigen()?.eigenvalues().first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return Ok(self.clone());
        }
        CovarianceModel::new(self.matrix.scale(1.0 / top))
    }
}

/// Sample covariance of a dataset:
/// `(1/n) * sum_i (x_i - mean)(x_i - mean)^T`.
///
/// The normalization is `1/n`, not the `1/(n-1)` many ecosystems default to.
/// A single sample therefore yields the zero matrix.
pub fn sample_covariance(data: &Dataset) -> CovarianceModel {
    let n = data.n_samples();
    let m = data.n_features();
    let features = data.features();

    let mut mean = vec![0.0; m];
    for i in 0..n {
        for (s, &x) in mean.iter_mut().zip(features.row(i).iter()) {
            *s += x;
        }
    }
    for s in mean.iter_mut() {
        *s /= n as f64;
    }

    let mut cov = DenseMatrix::zeros(m, m);
    let mut dev = vec![0.0; m];
    for i in 0..n {
        for (d, (&x, &mu)) in dev.iter_mut().zip(features.row(i).iter().zip(mean.iter())) {
            *d = x - mu;
        }
        for a in 0..m {
            let da = dev[a];
            if da == 0.0 {
                continue;
            }
            let row = cov.row_mut(a);
            for (c, &db) in row.iter_mut().zip(dev.iter()) {
                *c += da * db;
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for v in cov.as_mut_slice() {
        *v *= inv_n;
    }

    CovarianceModel::new(cov).expect("sample covariance is symmetric by construction")
}

/// Operator norm of the perturbation between a sample covariance and the
/// ensemble covariance it estimates.
pub fn covariance_error_norm(sample: &CovarianceModel, ensemble: &CovarianceModel) -> Result<f64> {
    if sample.dim() != ensemble.dim() {
        return Err(Error::DimMismatch {
            expected: ensemble.dim(),
            found: sample.dim(),
            context: "covariance error norm",
        });
    }
    operator_norm_sym(&sample.matrix().sub(ensemble.matrix())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_gives_zero_matrix() {
        let data = Dataset::new(
            DenseMatrix::from_vec(1, 3, vec![4.0, -1.0, 7.5]).unwrap(),
            None,
            None,
        )
        .unwrap();
        let cov = sample_covariance(&data);
        assert_eq!(cov.matrix().max_abs(), 0.0);
    }

    #[test]
    fn two_scalar_samples() {
        let data = Dataset::new(
            DenseMatrix::from_vec(2, 1, vec![0.0, 2.0]).unwrap(),
            None,
            None,
        )
        .unwrap();
        let cov = sample_covariance(&data);
        assert_eq!(cov.matrix().get(0, 0), 1.0);
    }

    #[test]
    fn matches_brute_force_definition() {
        // Independent oracle: the definition evaluated entry by entry.
        let n = 5;
        let m = 3;
        let raw: Vec<f64> = (0..n * m)
            .map(|k| ((k * 37 + 11) % 17) as f64 * 0.25 - 2.0)
            .collect();
        let data = Dataset::new(
            DenseMatrix::from_vec(n, m, raw.clone()).unwrap(),
            None,
            None,
        )
        .unwrap();
        let cov = sample_covariance(&data);

        let mut mean = vec![0.0; m];
        for i in 0..n {
            for j in 0..m {
                mean[j] += raw[i * m + j] / n as f64;
            }
        }
        for a in 0..m {
            for b in 0..m {
                let mut expect = 0.0;
                for i in 0..n {
                    expect += (raw[i * m + a] - mean[a]) * (raw[i * m + b] - mean[b]);
                }
                expect /= n as f64;
                assert!(
                    (cov.matrix().get(a, b) - expect).abs() <= 1e-12,
                    "entry ({a}, {b})"
                );
            }
        }
    }

    #[test]
    fn error_norm_examples() {
        let id = CovarianceModel::new(DenseMatrix::identity(3)).unwrap();
        let twice = CovarianceModel::new(DenseMatrix::identity(3).scale(2.0)).unwrap();
        assert_eq!(covariance_error_norm(&id, &id).unwrap(), 0.0);
        assert!((covariance_error_norm(&twice, &id).unwrap() - 1.0).abs() < 1e-12);
        let other = CovarianceModel::new(DenseMatrix::identity(2)).unwrap();
        assert!(covariance_error_norm(&other, &id).is_err());
    }

    #[test]
    fn error_norm_median_shrinks_with_sample_size() {
        // Monte-Carlo oracle: per-seed perturbation norms against a known
        // ensemble; the across-seed medians of both the covariance error
        // and the empirical mean must fall as n grows.
        use crate::datagen::rng::derive_seed;
        use crate::datagen::{gen_gaussian_ensemble, EnsembleSpec};
        use crate::experiments::median;
        use crate::numcore::matrix::norm2;

        let spec = EnsembleSpec::new(4, vec![2.0, 1.0, 0.5, 0.25], 5).unwrap();
        let grid = [100usize, 1000, 10_000];
        let mut cov_medians = Vec::new();
        let mut mean_medians = Vec::new();
        for &n in &grid {
            let mut cov_norms = Vec::new();
            let mut mean_norms = Vec::new();
            for s in 0..20 {
                let (data, ensemble) =
                    gen_gaussian_ensemble(&spec, n, derive_seed(900, s)).unwrap();
                cov_norms.push(
                    covariance_error_norm(&sample_covariance(&data), &ensemble).unwrap(),
                );
                let mut mean = vec![0.0; 4];
                for i in 0..n {
                    for (m, &x) in mean.iter_mut().zip(data.sample(i)) {
                        *m += x / n as f64;
                    }
                }
                mean_norms.push(norm2(&mean));
            }
            cov_medians.push(median(&cov_norms));
            mean_medians.push(median(&mean_norms));
        }
        assert!(
            cov_medians[0] > cov_medians[1] && cov_medians[1] > cov_medians[2],
            "covariance medians {cov_medians:?}"
        );
        assert!(
            mean_medians[0] > mean_medians[1] && mean_medians[1] > mean_medians[2],
            "mean medians {mean_medians:?}"
        );
    }

    #[test]
    fn rejects_asymmetric_beyond_tolerance() {
        let a = DenseMatrix::from_vec(2, 2, vec![1.0, 0.2, 0.1, 1.0]).unwrap();
        assert!(matches!(
            CovarianceModel::new(a),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn symmetrizes_within_tolerance() {
        let eps = 1e-12;
        let a = DenseMatrix::from_vec(2, 2, vec![1.0, 0.5 + eps, 0.5, 1.0]).unwrap();
        let cov = CovarianceModel::new(a).unwrap();
        assert_eq!(cov.matrix().get(0, 1), cov.matrix().get(1, 0));
    }

    #[test]
    fn rejects_indefinite_matrix_on_eigen_access() {
        let a = DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        let cov = CovarianceModel::new(a).unwrap();
        assert!(matches!(cov.eigen(), Err(Error::NotPsd { .. })));
    }
}
