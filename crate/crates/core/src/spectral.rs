//! Spectral operations on covariance matrices: the covariance Fourier
//! transform, polynomial covariance filters, per-eigenvalue frequency
//! responses, and the filterbank route to PCA scores.
//!
//! A filter with taps `h_0..h_{T-1}` acts on a vector as
//! `sum_k h_k C^k x`, evaluated by iterated matrix-vector products
//! (`O(m^2 T)`); its frequency response `h(lambda) = sum_k h_k lambda^k`
//! is evaluated by Horner's rule. The two routes agree on the eigenvalue
//! grid, which the tests pin down.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::matrix::{dot, DenseMatrix};
use crate::numcore::{CovarianceModel, EigenSystem};

/// Minimum eigenvalue gap below which narrowband PCA recovery is refused.
pub const MIN_RECOVERY_EIGENGAP: f64 = 1e-6;

/// Scalar polynomial filter coefficients `h_0..h_{T-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterTaps {
    taps: Vec<f64>,
}

impl FilterTaps {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidParameter(
                "a filter needs at least one tap".into(),
            ));
        }
        if !taps.iter().all(|t| t.is_finite()) {
            return Err(Error::NonFinite("filter taps"));
        }
        Ok(FilterTaps { taps })
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least one tap
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.taps
    }

    pub fn scaled(&self, a: f64) -> FilterTaps {
        FilterTaps {
            taps: self.taps.iter().map(|t| t * a).collect(),
        }
    }

    /// A filter bound to an m-dimensional covariance may use at most
    /// `m + 1` taps.
    fn check_order(&self, m: usize) -> Result<()> {
        if self.taps.len() > m + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} taps exceed the m + 1 = {} allowed for dimension {m}",
                self.taps.len(),
                m + 1
            )));
        }
        Ok(())
    }
}

/// A frequency response sampled on an eigenvalue grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResponse {
    pub eigenvalue_grid: Vec<f64>,
    pub response_values: Vec<f64>,
}

impl SpectralResponse {
    pub fn from_taps(taps: &FilterTaps, eigenvalues: &[f64]) -> Self {
        SpectralResponse {
            eigenvalue_grid: eigenvalues.to_vec(),
            response_values: eigenvalues
                .iter()
                .map(|&l| frequency_response(taps, l))
                .collect(),
        }
    }
}

/// Covariance Fourier transform: projection `U^T x` onto the eigenbasis.
/// Entry `i` of the result pairs with eigenvalue `w_i`.
pub fn vft(eigen: &EigenSystem, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != eigen.dim() {
        return Err(Error::DimMismatch {
            expected: eigen.dim(),
            found: x.len(),
            context: "vft input",
        });
    }
    eigen.eigenvectors().matvec_transposed(x)
}

/// Inverse transform: `U * coeffs`.
pub fn inverse_vft(eigen: &EigenSystem, coeffs: &[f64]) -> Result<Vec<f64>> {
    if coeffs.len() != eigen.dim() {
        return Err(Error::DimMismatch {
            expected: eigen.dim(),
            found: coeffs.len(),
            context: "inverse vft input",
        });
    }
    eigen.eigenvectors().matvec(coeffs)
}

/// Applies the polynomial filter in the vertex domain:
/// `z = sum_k h_k C^k x` with `z_0 = x`, `z_{k+1} = C z_k`. The powers of
/// `C` are never formed explicitly.
pub fn apply_filter(cov: &CovarianceModel, taps: &FilterTaps, x: &[f64]) -> Result<Vec<f64>> {
    let m = cov.dim();
    taps.check_order(m)?;
    if x.len() != m {
        return Err(Error::DimMismatch {
            expected: m,
            found: x.len(),
            context: "filter input",
        });
    }
    let h = taps.as_slice();
    let mut acc: Vec<f64> = x.iter().map(|&v| h[0] * v).collect();
    let mut power = x.to_vec();
    for &hk in &h[1..] {
        power = cov.apply(&power)?;
        for (a, &p) in acc.iter_mut().zip(power.iter()) {
            *a += hk * p;
        }
    }
    Ok(acc)
}

/// Frequency response `h(lambda) = sum_k h_k lambda^k`, Horner evaluation.
pub fn frequency_response(taps: &FilterTaps, lambda: f64) -> f64 {
    taps.as_slice()
        .iter()
        .rev()
        .fold(0.0, |acc, &h| acc * lambda + h)
}

/// Applies per-eigenvalue gains in the spectral domain:
/// `U diag(gains) U^T x`. With `gains_i = h(w_i)` this equals
/// [`apply_filter`] up to rounding.
pub fn spectral_apply(eigen: &EigenSystem, gains: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if gains.len() != eigen.dim() {
        return Err(Error::DimMismatch {
            expected: eigen.dim(),
            found: gains.len(),
            context: "spectral gains",
        });
    }
    let mut coeffs = vft(eigen, x)?;
    for (c, &g) in coeffs.iter_mut().zip(gains.iter()) {
        *c *= g;
    }
    inverse_vft(eigen, &coeffs)
}

/// A bank of narrowband filters realizing the PCA transform: filter `i` has
/// response `eta_i` at eigenvalue `w_i` and zero elsewhere.
#[derive(Debug, Clone)]
pub struct PcaFilterbank {
    eigen: EigenSystem,
    gains: Vec<f64>,
}

impl PcaFilterbank {
    pub fn new(eigen: EigenSystem, gains: Vec<f64>) -> Result<Self> {
        if gains.len() != eigen.dim() {
            return Err(Error::DimMismatch {
                expected: eigen.dim(),
                found: gains.len(),
                context: "filterbank gains",
            });
        }
        if !gains.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFinite("filterbank gains"));
        }
        Ok(PcaFilterbank { eigen, gains })
    }

    /// Unit gains: the bank that reproduces `U^T x` exactly.
    pub fn unit(eigen: EigenSystem) -> Self {
        let gains = vec![1.0; eigen.dim()];
        PcaFilterbank { eigen, gains }
    }

    pub fn eigen(&self) -> &EigenSystem {
        &self.eigen
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }
}

/// Recovers (scaled) PCA scores through the filterbank:
/// `y_i = u_i^T H_i x` where `H_i` is the narrowband filter with gain
/// `eta_i` at `w_i`, realized in the spectral domain. Requires distinct
/// eigenvalues; with nearly coincident eigenvalues the narrowband filters
/// are ill-posed and the call is refused.
pub fn pca_scores_via_filterbank(bank: &PcaFilterbank, x: &[f64]) -> Result<Vec<f64>> {
    let eigen = bank.eigen();
    let m = eigen.dim();
    if x.len() != m {
        return Err(Error::DimMismatch {
            expected: m,
            found: x.len(),
            context: "filterbank input",
        });
    }
    if m > 1 {
        let gap = eigen.min_eigengap();
        if gap < MIN_RECOVERY_EIGENGAP {
            return Err(Error::EigengapTooSmall {
                gap,
                min_gap: MIN_RECOVERY_EIGENGAP,
            });
        }
    }
    let mut scores = vec![0.0; m];
    let mut gains = vec![0.0; m];
    for i in 0..m {
        gains[i] = bank.gains()[i];
        let filtered = spectral_apply(eigen, &gains, x)?;
        gains[i] = 0.0;
        scores[i] = dot(&eigen.eigenvector(i), &filtered);
    }
    Ok(scores)
}

/// Materializes `H(C) = sum_k h_k C^k` as an explicit matrix, for norm
/// computations.
pub fn filter_matrix(cov: &CovarianceModel, taps: &FilterTaps) -> Result<DenseMatrix> {
    let m = cov.dim();
    taps.check_order(m)?;
    let h = taps.as_slice();
    let mut acc = DenseMatrix::identity(m).scale(h[0]);
    let mut power = DenseMatrix::identity(m);
    for &hk in &h[1..] {
        power = cov.matrix().matmul(&power)?;
        acc.add_scaled(hk, &power);
    }
    Ok(acc)
}
