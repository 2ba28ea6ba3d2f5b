//! Seeded synthetic data generators: the Friedman #1 benchmark, low-rank
//! linear regression with a controllable singular-value tail, Gaussian
//! ensembles with known covariance, and multi-resolution datasets sharing a
//! common latent process.
//!
//! Every generator is a pure function of its spec and seed; regenerating
//! with the same arguments is bit-identical.

pub mod rng;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::matrix::{dot, norm2, DenseMatrix};
use crate::numcore::{CovarianceModel, Dataset};
use rng::SeededRng;

/// The Friedman #1 response surface over the first five features.
pub fn friedman1_response(x: &[f64]) -> f64 {
    10.0 * (std::f64::consts::PI * x[0] * x[1]).sin()
        + 20.0 * (x[2] - 0.5).powi(2)
        + 10.0 * x[3]
        + 5.0 * x[4]
}

/// Friedman #1 regression data: `m >= 5` features uniform on `[0, 1)`, the
/// first five driving the response, the rest pure noise features.
pub fn gen_friedman1(n: usize, m: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if m < 5 {
        return Err(Error::InvalidParameter(format!(
            "friedman1 needs at least 5 features, got {m}"
        )));
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = SeededRng::new(seed);
    let mut features = DenseMatrix::zeros(n, m);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let row = features.row_mut(i);
        for v in row.iter_mut() {
            *v = rng.uniform();
        }
        targets.push(friedman1_response(row) + rng.normal_scaled(noise_sd));
    }
    Dataset::new(features, Some(targets), None)
}

/// Singular value profile of the low-rank generator: a Gaussian bump of
/// width `effective_rank` plus an exponentially decaying tail whose relative
/// weight is `tail_strength`.
pub fn singular_profile(index: usize, effective_rank: usize, tail_strength: f64) -> f64 {
    let i = index as f64 / effective_rank as f64;
    (1.0 - tail_strength) * (-i * i).exp() + tail_strength * (-0.1 * i).exp()
}

/// Low-rank regression data: features are `U diag(s) V^T` for seeded
/// orthonormal factors and the profile above; targets are a linear
/// combination of the first `n_informative` features plus Gaussian noise
/// with standard deviation `noise_sd`.
#[allow(clippy::too_many_arguments)]
pub fn gen_lowrank_regression(
    n: usize,
    m: usize,
    n_informative: usize,
    effective_rank: usize,
    tail_strength: f64,
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if effective_rank == 0 || effective_rank > m {
        return Err(Error::InvalidParameter(format!(
            "effective_rank {effective_rank} out of range 1..={m}"
        )));
    }
    if n_informative == 0 || n_informative > m {
        return Err(Error::InvalidParameter(format!(
            "n_informative {n_informative} out of range 1..={m}"
        )));
    }
    if !(0.0..=1.0).contains(&tail_strength) {
        return Err(Error::InvalidParameter(format!(
            "tail_strength {tail_strength} outside [0, 1]"
        )));
    }

    let k = n.min(m);
    let mut rng = SeededRng::new(seed);
    let u = random_orthonormal(n, k, &mut rng);
    let v = random_orthonormal(m, k, &mut rng);

    // X = (U diag(s)) V^T
    let mut us = u;
    for i in 0..n {
        let row = us.row_mut(i);
        for (j, val) in row.iter_mut().enumerate() {
            *val *= singular_profile(j, effective_rank, tail_strength);
        }
    }
    let features = us.matmul(&v.transpose())?;

    let weights: Vec<f64> = (0..n_informative).map(|_| 100.0 * rng.uniform()).collect();
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let y = dot(&features.row(i)[..n_informative], &weights) + rng.normal_scaled(noise_sd);
        targets.push(y);
    }
    Dataset::new(features, Some(targets), None)
}

/// A known ensemble covariance: a descending nonnegative spectrum rotated by
/// a seeded orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub dim: usize,
    pub spectrum: Vec<f64>,
    pub rotation_seed: u64,
}

impl EnsembleSpec {
    pub fn new(dim: usize, spectrum: Vec<f64>, rotation_seed: u64) -> Result<Self> {
        let spec = EnsembleSpec {
            dim,
            spectrum,
            rotation_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.spectrum.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: self.spectrum.len(),
                context: "ensemble spectrum length",
            });
        }
        if self.spectrum.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidParameter(
                "ensemble spectrum must be finite and nonnegative".into(),
            ));
        }
        if self.spectrum.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "ensemble spectrum must be nonincreasing".into(),
            ));
        }
        Ok(())
    }

    /// The exact eigenbasis, spectrum, and covariance matrix this spec
    /// describes. The basis is deterministic in `rotation_seed`.
    pub fn realize(&self) -> Result<RealizedEnsemble> {
        self.validate()?;
        let mut rot_rng = SeededRng::new(self.rotation_seed);
        let basis = random_orthonormal(self.dim, self.dim, &mut rot_rng);
        let covariance =
            CovarianceModel::new(similarity_with_diagonal(&basis, &self.spectrum, |l| l))?;
        Ok(RealizedEnsemble {
            basis,
            spectrum: self.spectrum.clone(),
            covariance,
        })
    }
}

/// An [`EnsembleSpec`] materialized into numbers.
#[derive(Debug, Clone)]
pub struct RealizedEnsemble {
    /// Orthonormal eigenbasis, columns ordered to match `spectrum`.
    pub basis: DenseMatrix,
    /// Descending eigenvalues.
    pub spectrum: Vec<f64>,
    /// `basis * diag(spectrum) * basis^T`.
    pub covariance: CovarianceModel,
}

impl RealizedEnsemble {
    /// `basis * diag(sqrt(spectrum)) * basis^T`, the sampling square root.
    pub fn sqrt_matrix(&self) -> DenseMatrix {
        similarity_with_diagonal(&self.basis, &self.spectrum, |l| l.sqrt())
    }
}

/// Draws `n` i.i.d. samples `x = C^{1/2} z` with `z` standard normal, and
/// returns them together with the exact ensemble covariance.
pub fn gen_gaussian_ensemble(
    spec: &EnsembleSpec,
    n: usize,
    seed: u64,
) -> Result<(Dataset, CovarianceModel)> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let realized = spec.realize()?;
    let sqrt = realized.sqrt_matrix();
    let mut rng = SeededRng::new(seed);
    let m = spec.dim;
    let mut z = DenseMatrix::zeros(n, m);
    for i in 0..n {
        for v in z.row_mut(i).iter_mut() {
            *v = rng.normal();
        }
    }
    // x_i = S z_i for symmetric S, i.e. rows of Z S.
    let features = z.matmul(&sqrt)?;
    Ok((Dataset::new(features, None, None)?, realized.covariance))
}

/// Multi-resolution data: every resolution observes block means of the same
/// fine-grained features, which load a shared latent process. Targets are a
/// fixed function of the latent factors, identical across resolutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiResSpec {
    pub fine_dim: usize,
    pub resolutions: Vec<usize>,
    pub latent_dim: usize,
    pub noise_sd: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Force every fine feature's loading to 1. With zero noise this makes
    /// each coarse feature exactly equal to the fine features in its block
    /// whenever blocks align with latent groups.
    #[serde(default)]
    pub constant_loadings: bool,
}

impl MultiResSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::EmptyDataset);
        }
        if self.latent_dim == 0 || self.latent_dim > self.fine_dim {
            return Err(Error::InvalidParameter(format!(
                "latent_dim {} out of range 1..={}",
                self.latent_dim, self.fine_dim
            )));
        }
        if self.resolutions.is_empty() {
            return Err(Error::InvalidParameter("no resolutions given".into()));
        }
        if self
            .resolutions
            .iter()
            .any(|&r| r == 0 || r > self.fine_dim)
        {
            return Err(Error::InvalidParameter(format!(
                "every resolution must lie in 1..={}",
                self.fine_dim
            )));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(Error::InvalidParameter(
                "noise_sd must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Contiguous partition of `fine` indices into `coarse` blocks of near-equal
/// size: block `j` covers `[floor(j*fine/coarse), floor((j+1)*fine/coarse))`.
pub fn block_ranges(fine: usize, coarse: usize) -> Vec<std::ops::Range<usize>> {
    (0..coarse)
        .map(|j| (j * fine / coarse)..((j + 1) * fine / coarse))
        .collect()
}

/// Block means of each row of `fine` under the standard partition.
pub fn block_mean_features(fine: &DenseMatrix, coarse_dim: usize) -> DenseMatrix {
    let ranges = block_ranges(fine.cols(), coarse_dim);
    DenseMatrix::from_fn(fine.rows(), coarse_dim, |i, j| {
        let r = &ranges[j];
        let row = fine.row(i);
        row[r.clone()].iter().sum::<f64>() / r.len() as f64
    })
}

/// One dataset per requested resolution, sharing the same targets vector.
pub fn gen_multires(spec: &MultiResSpec) -> Result<Vec<(usize, Dataset)>> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let m = spec.fine_dim;
    let n = spec.n_samples;

    let loadings: Vec<f64> = (0..m)
        .map(|_| {
            if spec.constant_loadings {
                // Consume the stream either way so toggling the flag only
                // changes loadings, not every downstream draw.
                let _ = rng.uniform();
                1.0
            } else {
                0.75 + 0.5 * rng.uniform()
            }
        })
        .collect();
    let betas: Vec<f64> = (0..spec.latent_dim).map(|_| 0.5 + rng.uniform()).collect();

    let latent_groups = block_ranges(m, spec.latent_dim);
    let group_of: Vec<usize> = (0..m)
        .map(|j| {
            latent_groups
                .iter()
                .position(|r| r.contains(&j))
                .expect("partition covers all indices")
        })
        .collect();

    let mut fine = DenseMatrix::zeros(n, m);
    let mut targets = Vec::with_capacity(n);
    let mut z = vec![0.0; spec.latent_dim];
    for i in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.normal();
        }
        let row = fine.row_mut(i);
        for (j, v) in row.iter_mut().enumerate() {
            *v = loadings[j] * z[group_of[j]] + rng.normal_scaled(spec.noise_sd);
        }
        let nonlinear = if spec.latent_dim >= 2 {
            (z[0] * z[1]).sin()
        } else {
            z[0].sin()
        };
        targets.push(dot(&betas, &z) + nonlinear);
    }

    spec.resolutions
        .iter()
        .map(|&r| {
            let features = if r == m {
                fine.clone()
            } else {
                block_mean_features(&fine, r)
            };
            Ok((r, Dataset::new(features, Some(targets.clone()), None)?))
        })
        .collect()
}

/// Monte-Carlo kurtosis factors of a Gaussian ensemble:
/// `k_i = sqrt(E[||X X^T v_i||^2] - lambda_i^2)` per eigenvector, plus the
/// minimum over positive-eigenvalue directions and the pairwise maximum of
/// `k_i^2 / |lambda_i - lambda_j|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KurtosisFactors {
    pub k: Vec<f64>,
    pub k_min: f64,
    pub kappa: f64,
}

pub fn kurtosis_factor(spec: &EnsembleSpec, n_mc: usize, seed: u64) -> Result<KurtosisFactors> {
    if n_mc < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "kurtosis estimation needs at least 10^4 draws, got {n_mc}"
        )));
    }
    let lambda = &spec.spectrum;
    let distinct_pair_exists = lambda.iter().any(|&a| lambda.iter().any(|&b| a != b));
    if !distinct_pair_exists {
        return Err(Error::DegenerateSpectrum(
            "kappa is undefined when all eigenvalues coincide",
        ));
    }

    let realized = spec.realize()?;
    let sqrt = realized.sqrt_matrix();
    let m = spec.dim;
    let mut rng = SeededRng::new(seed);
    let mut acc = vec![0.0_f64; m];
    let mut z = vec![0.0; m];
    for _ in 0..n_mc {
        for zi in z.iter_mut() {
            *zi = rng.normal();
        }
        let x = sqrt.matvec(&z)?;
        let x_norm_sq = dot(&x, &x);
        // ||X X^T v_i||^2 = (x . v_i)^2 ||x||^2; x . v_i for all i at once.
        let proj = realized.basis.matvec_transposed(&x)?;
        for (a, p) in acc.iter_mut().zip(proj.iter()) {
            *a += p * p * x_norm_sq;
        }
    }

    let k: Vec<f64> = acc
        .iter()
        .zip(lambda.iter())
        .map(|(a, &l)| (a / n_mc as f64 - l * l).max(0.0).sqrt())
        .collect();

    let k_min = k
        .iter()
        .zip(lambda.iter())
        .filter(|(_, &l)| l > 0.0)
        .map(|(&ki, _)| ki)
        .fold(f64::INFINITY, f64::min);

    let mut kappa = 0.0_f64;
    for i in 0..m {
        for j in 0..m {
            if lambda[i] != lambda[j] {
                kappa = kappa.max(k[i] * k[i] / (lambda[i] - lambda[j]).abs());
            }
        }
    }

    Ok(KurtosisFactors { k, k_min, kappa })
}

/// Matrix with orthonormal columns from the QR of a seeded Gaussian draw
/// (modified Gram-Schmidt, two orthogonalization passes).
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut SeededRng) -> DenseMatrix {
    assert!(
        cols <= rows,
        "cannot have more orthonormal columns than rows"
    );
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut v: Vec<f64> = (0..rows).map(|_| rng.normal()).collect();
        for _ in 0..2 {
            for prev in &basis {
                let ip = dot(&v, prev);
                for (x, p) in v.iter_mut().zip(prev.iter()) {
                    *x -= ip * p;
                }
            }
        }
        let nrm = norm2(&v);
        if nrm < 1e-8 {
            continue; // essentially impossible; redraw
        }
        for x in v.iter_mut() {
            *x /= nrm;
        }
        basis.push(v);
    }
    let mut out = DenseMatrix::zeros(rows, cols);
    for (j, v) in basis.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// `B * diag(f(d)) * B^T` for a matrix with orthonormal columns.
fn similarity_with_diagonal(
    basis: &DenseMatrix,
    diagonal: &[f64],
    f: impl Fn(f64) -> f64,
) -> DenseMatrix {
    let m = basis.rows();
    let mut out = DenseMatrix::zeros(m, m);
    for (idx, &d) in diagonal.iter().enumerate() {
        let fd = f(d);
        if fd == 0.0 {
            continue;
        }
        let v = basis.column(idx);
        for i in 0..m {
            let vi = fd * v[i];
            let row = out.row_mut(i);
            for (o, &vj) in row.iter_mut().zip(v.iter()) {
                *o += vi * vj;
            }
        }
    }
    out.symmetrized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::sample_covariance;

    #[test]
    fn friedman_response_plug_ins() {
        let mut x = vec![0.0; 8];
        x[0] = 0.5;
        x[1] = 1.0;
        x[2] = 0.5;
        assert!((friedman1_response(&x) - 10.0).abs() < 1e-12);
        let mut x2 = vec![0.0; 8];
        x2[1] = 0.9;
        x2[2] = 0.5;
        x2[3] = 1.0;
        x2[4] = 1.0;
        assert!((friedman1_response(&x2) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn friedman_rejects_small_m() {
        assert!(gen_friedman1(10, 4, 0.0, 1).is_err());
    }

    #[test]
    fn friedman_targets_depend_only_on_first_five() {
        let data = gen_friedman1(50, 12, 0.0, 99).unwrap();
        let targets = data.targets().unwrap();
        for i in 0..data.n_samples() {
            let expect = friedman1_response(&data.sample(i)[..5]);
            assert!((targets[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn friedman_paper_defaults_shape() {
        let data = gen_friedman1(1000, 100, 1.0, 7).unwrap();
        assert_eq!(data.n_samples(), 1000);
        assert_eq!(data.n_features(), 100);
    }

    #[test]
    fn generators_are_bit_deterministic() {
        let a = gen_friedman1(20, 6, 0.5, 42).unwrap();
        let b = gen_friedman1(20, 6, 0.5, 42).unwrap();
        assert_eq!(a, b);

        let spec = EnsembleSpec::new(3, vec![2.0, 1.0, 0.5], 5).unwrap();
        let (da, ca) = gen_gaussian_ensemble(&spec, 100, 9).unwrap();
        let (db, cb) = gen_gaussian_ensemble(&spec, 100, 9).unwrap();
        assert_eq!(da, db);
        assert_eq!(ca, cb);
    }

    #[test]
    fn profile_limit_is_near_rank_one() {
        let ratio = singular_profile(5, 1, 0.0) / singular_profile(0, 1, 0.0);
        assert!(ratio < 1e-10, "ratio {ratio}");
    }

    #[test]
    fn lowrank_single_informative_feature_is_exactly_linear() {
        let d = gen_lowrank_regression(200, 10, 1, 3, 0.5, 0.0, 31).unwrap();
        let y = d.targets().unwrap();
        // Closed-form simple regression of y on feature 0 must be exact.
        let x: Vec<f64> = (0..d.n_samples()).map(|i| d.sample(i)[0]).collect();
        let xm = x.iter().sum::<f64>() / x.len() as f64;
        let ym = y.iter().sum::<f64>() / y.len() as f64;
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
        let sxx: f64 = x.iter().map(|a| (a - xm) * (a - xm)).sum();
        let slope = sxy / sxx;
        let intercept = ym - slope * xm;
        let mse: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - (slope * a + intercept)).powi(2))
            .sum::<f64>()
            / x.len() as f64;
        assert!(mse <= 1e-10, "mse {mse}");
    }

    #[test]
    fn lowrank_tail_controls_eigenvalue_spread() {
        let wide = gen_lowrank_regression(1000, 100, 20, 25, 0.7, 3.0, 11).unwrap();
        let tight = gen_lowrank_regression(1000, 100, 20, 25, 0.2, 3.0, 11).unwrap();
        let ratio = |d: &Dataset| {
            let eig = sample_covariance(d).eigen().unwrap().eigenvalues().to_vec();
            eig[0] / eig[49]
        };
        let r_wide = ratio(&wide);
        let r_tight = ratio(&tight);
        assert!(
            r_wide < r_tight,
            "tail 0.7 should spread eigenvalues: {r_wide} vs {r_tight}"
        );
    }

    #[test]
    fn gaussian_ensemble_zero_spectrum() {
        let spec = EnsembleSpec::new(3, vec![0.0, 0.0, 0.0], 1).unwrap();
        let (data, _) = gen_gaussian_ensemble(&spec, 10, 2).unwrap();
        assert_eq!(data.features().max_abs(), 0.0);
    }

    #[test]
    fn gaussian_ensemble_identity_spectrum_concentrates() {
        let spec = EnsembleSpec::new(5, vec![1.0; 5], 3).unwrap();
        let (data, cov) = gen_gaussian_ensemble(&spec, 100_000, 17).unwrap();
        let err = crate::numcore::covariance_error_norm(&sample_covariance(&data), &cov).unwrap();
        assert!(err <= 0.1, "||C_hat - I|| = {err}");
    }

    #[test]
    fn gaussian_ensemble_large_n_entrywise() {
        let spec = EnsembleSpec::new(4, vec![3.0, 2.0, 1.0, 0.5], 8).unwrap();
        let (data, cov) = gen_gaussian_ensemble(&spec, 1_000_000, 23).unwrap();
        let sample = sample_covariance(&data);
        let scale = cov.matrix().max_abs();
        for i in 0..4 {
            for j in 0..4 {
                let diff = (sample.matrix().get(i, j) - cov.matrix().get(i, j)).abs();
                assert!(diff <= 0.01 * scale, "entry ({i},{j}) off by {diff}");
            }
        }
    }

    #[test]
    fn ensemble_spec_validation() {
        assert!(EnsembleSpec::new(2, vec![1.0], 0).is_err());
        assert!(EnsembleSpec::new(2, vec![1.0, 2.0], 0).is_err());
        assert!(EnsembleSpec::new(2, vec![1.0, -0.1], 0).is_err());
    }

    #[test]
    fn multires_block_mean_consistency() {
        let spec = MultiResSpec {
            fine_dim: 120,
            resolutions: vec![40, 120],
            latent_dim: 10,
            noise_sd: 0.3,
            n_samples: 50,
            seed: 5,
            constant_loadings: false,
        };
        let sets = gen_multires(&spec).unwrap();
        let fine = sets.iter().find(|(r, _)| *r == 120).unwrap().1.features();
        let coarse = sets.iter().find(|(r, _)| *r == 40).unwrap().1.features();
        let expect = block_mean_features(fine, 40);
        for i in 0..50 {
            for j in 0..40 {
                assert!((coarse.get(i, j) - expect.get(i, j)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn multires_targets_shared_bitwise() {
        let spec = MultiResSpec {
            fine_dim: 60,
            resolutions: vec![20, 30, 60],
            latent_dim: 6,
            noise_sd: 0.2,
            n_samples: 40,
            seed: 77,
            constant_loadings: false,
        };
        let sets = gen_multires(&spec).unwrap();
        let t0 = sets[0].1.targets().unwrap();
        for (_, d) in &sets {
            assert_eq!(d.targets().unwrap(), t0);
        }
    }

    #[test]
    fn multires_constant_loadings_make_blocks_constant() {
        // Latent groups sized to coincide with the coarse blocks.
        let spec = MultiResSpec {
            fine_dim: 8,
            resolutions: vec![4, 8],
            latent_dim: 4,
            noise_sd: 0.0,
            n_samples: 10,
            seed: 1,
            constant_loadings: true,
        };
        let sets = gen_multires(&spec).unwrap();
        let fine = sets.iter().find(|(r, _)| *r == 8).unwrap().1.features();
        let coarse = sets.iter().find(|(r, _)| *r == 4).unwrap().1.features();
        for i in 0..10 {
            for b in 0..4 {
                for j in (2 * b)..(2 * b + 2) {
                    assert_eq!(coarse.get(i, b), fine.get(i, j));
                }
            }
        }
    }

    #[test]
    fn kurtosis_zero_variance_direction() {
        let spec = EnsembleSpec::new(3, vec![2.0, 1.0, 0.0], 4).unwrap();
        let kf = kurtosis_factor(&spec, 20_000, 6).unwrap();
        assert!(kf.k[2] <= 1e-8, "k along null direction: {}", kf.k[2]);
    }

    #[test]
    fn kurtosis_isotropic_is_degenerate() {
        let spec = EnsembleSpec::new(2, vec![1.0, 1.0], 4).unwrap();
        assert!(matches!(
            kurtosis_factor(&spec, 20_000, 6),
            Err(Error::DegenerateSpectrum(_))
        ));
    }

    #[test]
    fn kurtosis_gaussian_closed_form_and_stability() {
        // For Gaussian data, k_i^2 = lambda_i (tr C + lambda_i).
        let spec = EnsembleSpec::new(2, vec![4.0, 1.0], 12).unwrap();
        let mut estimates = Vec::new();
        for seed in 0..10 {
            let kf = kurtosis_factor(&spec, 100_000, seed).unwrap();
            estimates.push(kf.k.clone());
        }
        let expect = [6.0, 6.0_f64.sqrt()];
        for i in 0..2 {
            for e in &estimates {
                assert!(
                    (e[i] - expect[i]).abs() / expect[i] <= 0.05,
                    "k[{i}] = {} vs {}",
                    e[i],
                    expect[i]
                );
            }
        }
    }

    #[test]
    fn orthonormal_columns() {
        let mut rng = SeededRng::new(2);
        let q = random_orthonormal(30, 10, &mut rng);
        for a in 0..10 {
            for b in 0..10 {
                let ip = dot(&q.column(a), &q.column(b));
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-10);
            }
        }
    }
}
