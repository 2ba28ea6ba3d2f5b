//! PCA regression baselines: ordinary least squares or RBF kernel ridge on
//! the top-c principal component scores, with component count selected by
//! repeated k-fold cross-validation.
//!
//! The eigenbasis is part of the fitted model. Evaluating against a
//! different basis (`reproject_with`) recomputes the scores there while
//! keeping the regression weights fixed; perturbed bases are
//! sign-canonicalized exactly like nominal ones, with no alignment to the
//! training basis, unless the alignment ablation is requested explicitly.

use serde::{Deserialize, Serialize};

use crate::datagen::rng::SeededRng;
use crate::error::{Error, Result};
use crate::numcore::matrix::{dot, DenseMatrix};
use crate::numcore::{Dataset, EigenSystem};
use crate::spectral::vft;

/// Default ridge jitter added to normal equations for conditioning.
pub const DEFAULT_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKernel {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegressorKind {
    Linear {
        /// One weight per retained component.
        weights: Vec<f64>,
        intercept: f64,
    },
    Rbf {
        gamma: f64,
        lambda: f64,
        /// Mean of the training targets; the dual solve runs on centered
        /// targets so heavy regularization shrinks predictions to the mean
        /// rather than to zero.
        intercept: f64,
        dual_coefficients: Vec<f64>,
        /// Training-point scores, one row per sample, c columns.
        train_scores: DenseMatrix,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaRegressor {
    eigen_basis: EigenSystem,
    n_components: usize,
    kind: RegressorKind,
}

impl PcaRegressor {
    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn eigen_basis(&self) -> &EigenSystem {
        &self.eigen_basis
    }

    pub fn kind(&self) -> &RegressorKind {
        &self.kind
    }

    /// Prediction using the training eigenbasis.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        reproject_with(&self.eigen_basis, self, x)
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        (0..data.n_samples())
            .map(|i| self.predict(data.sample(i)))
            .collect()
    }

    fn predict_scores(&self, scores: &[f64]) -> f64 {
        match &self.kind {
            RegressorKind::Linear { weights, intercept } => intercept + dot(weights, scores),
            RegressorKind::Rbf {
                gamma,
                intercept,
                dual_coefficients,
                train_scores,
                ..
            } => {
                let mut out = *intercept;
                for (i, &alpha) in dual_coefficients.iter().enumerate() {
                    let sq = squared_distance(train_scores.row(i), scores);
                    out += alpha * (-gamma * sq).exp();
                }
                out
            }
        }
    }
}

/// First `c` entries of the eigenbasis projection `U^T x`.
pub fn pca_transform_topk(eigen: &EigenSystem, x: &[f64], c: usize) -> Result<Vec<f64>> {
    if c == 0 || c > eigen.dim() {
        return Err(Error::InvalidParameter(format!(
            "component count {c} out of range 1..={}",
            eigen.dim()
        )));
    }
    let mut scores = vft(eigen, x)?;
    scores.truncate(c);
    Ok(scores)
}

/// Scores for every sample: an n-by-c matrix.
fn score_matrix(data: &Dataset, eigen: &EigenSystem, c: usize) -> Result<DenseMatrix> {
    let mut out = DenseMatrix::zeros(data.n_samples(), c);
    for i in 0..data.n_samples() {
        let s = pca_transform_topk(eigen, data.sample(i), c)?;
        out.row_mut(i).copy_from_slice(&s);
    }
    Ok(out)
}

/// Ordinary least squares with intercept on the top-c scores, solved by
/// normal equations with a ridge jitter for conditioning.
pub fn fit_pca_linear(data: &Dataset, eigen: &EigenSystem, c: usize) -> Result<PcaRegressor> {
    fit_pca_linear_with_jitter(data, eigen, c, DEFAULT_JITTER)
}

pub fn fit_pca_linear_with_jitter(
    data: &Dataset,
    eigen: &EigenSystem,
    c: usize,
    jitter: f64,
) -> Result<PcaRegressor> {
    let targets = data.require_targets("pca linear fit")?;
    let scores = score_matrix(data, eigen, c)?;
    let (weights, intercept) = ols_fit(&scores, targets, jitter)?;
    Ok(PcaRegressor {
        eigen_basis: eigen.clone(),
        n_components: c,
        kind: RegressorKind::Linear { weights, intercept },
    })
}

fn ols_fit(scores: &DenseMatrix, targets: &[f64], jitter: f64) -> Result<(Vec<f64>, f64)> {
    let n = scores.rows();
    let c = scores.cols();
    let dim = c + 1; // intercept first

    // Normal equations over the design [1 | scores].
    let mut ata = DenseMatrix::zeros(dim, dim);
    let mut atb = vec![0.0; dim];
    for i in 0..n {
        let row = scores.row(i);
        let y = targets[i];
        ata.set(0, 0, ata.get(0, 0) + 1.0);
        atb[0] += y;
        for a in 0..c {
            ata.set(0, a + 1, ata.get(0, a + 1) + row[a]);
            atb[a + 1] += row[a] * y;
            for b in a..c {
                ata.set(a + 1, b + 1, ata.get(a + 1, b + 1) + row[a] * row[b]);
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            ata.set(a, b, ata.get(b, a));
        }
    }
    if jitter > 0.0 {
        for a in 0..dim {
            ata.set(a, a, ata.get(a, a) + jitter);
        }
    }
    let solution = solve_spd(ata, atb)?;
    Ok((solution[1..].to_vec(), solution[0]))
}

/// Kernel ridge regression with the RBF kernel on top-c scores:
/// `alpha = (K + lambda I)^{-1} (y - mean(y))` with
/// `K_ij = exp(-gamma ||s_i - s_j||^2)`; predictions are
/// `mean(y) + k(x)^T alpha`, so the ridge limit is the target mean.
pub fn fit_pca_rbf(
    data: &Dataset,
    eigen: &EigenSystem,
    c: usize,
    gamma: f64,
    lambda: f64,
) -> Result<PcaRegressor> {
    if gamma <= 0.0 || lambda <= 0.0 {
        return Err(Error::InvalidParameter(
            "rbf fit needs gamma > 0 and lambda > 0".into(),
        ));
    }
    let targets = data.require_targets("pca rbf fit")?;
    let scores = score_matrix(data, eigen, c)?;
    let (dual, intercept) = rbf_dual_solve(&scores, targets, gamma, lambda)?;
    Ok(PcaRegressor {
        eigen_basis: eigen.clone(),
        n_components: c,
        kind: RegressorKind::Rbf {
            gamma,
            lambda,
            intercept,
            dual_coefficients: dual,
            train_scores: scores,
        },
    })
}

fn rbf_dual_solve(
    scores: &DenseMatrix,
    targets: &[f64],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = scores.rows();
    let intercept = targets.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = targets.iter().map(|t| t - intercept).collect();
    let mut k = DenseMatrix::zeros(n, n);
    for i in 0..n {
        k.set(i, i, 1.0 + lambda);
        for j in (i + 1)..n {
            let v = (-gamma * squared_distance(scores.row(i), scores.row(j))).exp();
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    Ok((solve_spd(k, centered)?, intercept))
}

/// Default RBF bandwidth: `1 / (c * var)` with `var` the pooled variance of
/// all score entries.
pub fn default_rbf_gamma(data: &Dataset, eigen: &EigenSystem, c: usize) -> Result<f64> {
    let scores = score_matrix(data, eigen, c)?;
    let entries = scores.as_slice();
    let mean = entries.iter().sum::<f64>() / entries.len() as f64;
    let var = entries.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / entries.len() as f64;
    if var <= 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 / (c as f64 * var))
}

/// Standard candidate grid for the component count.
pub fn default_component_candidates(m: usize, n: usize) -> Vec<usize> {
    let cap = m.min(n.saturating_sub(1)).max(1);
    let mut cs: Vec<usize> = [1usize, 2, 5, 10, 20, 50]
        .iter()
        .copied()
        .filter(|&c| c <= cap)
        .collect();
    if !cs.contains(&cap) {
        cs.push(cap);
    }
    cs.sort_unstable();
    cs.dedup();
    cs
}

/// Selects the component count minimizing mean validation MSE over 10 folds
/// repeated 5 times with seeded shuffles. Ties break to the smaller count.
pub fn cv_select_components(
    data: &Dataset,
    eigen: &EigenSystem,
    candidates: &[usize],
    kernel: BaselineKernel,
    seed: u64,
) -> Result<usize> {
    const FOLDS: usize = 10;
    const REPEATS: usize = 5;

    let n = data.n_samples();
    if n < FOLDS {
        return Err(Error::InvalidParameter(format!(
            "cross-validation needs at least {FOLDS} samples, got {n}"
        )));
    }
    let targets = data.require_targets("component selection")?;
    let mut candidates: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&c| c >= 1 && c <= eigen.dim())
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    if candidates.is_empty() {
        return Err(Error::InvalidParameter(
            "no usable component candidates".into(),
        ));
    }

    let c_max = *candidates.last().unwrap();
    let all_scores = score_matrix(data, eigen, c_max)?;

    let mut best_c = candidates[0];
    let mut best_mse = f64::INFINITY;
    for &c in &candidates {
        let mut total = 0.0;
        let mut count = 0usize;
        for rep in 0..REPEATS {
            let mut rng = SeededRng::with_stream(seed, rep as u64);
            let perm = rng.permutation(n);
            for fold in 0..FOLDS {
                let lo = fold * n / FOLDS;
                let hi = (fold + 1) * n / FOLDS;
                let val = &perm[lo..hi];
                let train: Vec<usize> = perm[..lo]
                    .iter()
                    .chain(perm[hi..].iter())
                    .copied()
                    .collect();

                let mut train_scores = DenseMatrix::zeros(train.len(), c);
                let mut train_y = Vec::with_capacity(train.len());
                for (dst, &src) in train.iter().enumerate() {
                    train_scores
                        .row_mut(dst)
                        .copy_from_slice(&all_scores.row(src)[..c]);
                    train_y.push(targets[src]);
                }

                let fold_mse = match kernel {
                    BaselineKernel::Linear => {
                        let (w, b) = ols_fit(&train_scores, &train_y, DEFAULT_JITTER)?;
                        val.iter()
                            .map(|&i| {
                                let pred = b + dot(&w, &all_scores.row(i)[..c]);
                                (pred - targets[i]).powi(2)
                            })
                            .sum::<f64>()
                            / val.len() as f64
                    }
                    BaselineKernel::Rbf => {
                        let gamma = {
                            let entries = train_scores.as_slice();
                            let mean = entries.iter().sum::<f64>() / entries.len() as f64;
                            let var = entries.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                                / entries.len() as f64;
                            if var <= 0.0 {
                                1.0
                            } else {
                                1.0 / (c as f64 * var)
                            }
                        };
                        let (dual, intercept) =
                            rbf_dual_solve(&train_scores, &train_y, gamma, 1.0)?;
                        val.iter()
                            .map(|&i| {
                                let s = &all_scores.row(i)[..c];
                                let mut pred = intercept;
                                for (t, &a) in dual.iter().enumerate() {
                                    let sq = squared_distance(train_scores.row(t), s);
                                    pred += a * (-gamma * sq).exp();
                                }
                                (pred - targets[i]).powi(2)
                            })
                            .sum::<f64>()
                            / val.len() as f64
                    }
                };
                total += fold_mse;
                count += 1;
            }
        }
        let mean_mse = total / count as f64;
        if mean_mse < best_mse {
            best_mse = mean_mse;
            best_c = c;
        }
    }
    Ok(best_c)
}

/// Prediction with the regression weights fixed but scores computed in a
/// different eigenbasis. With the training basis this is exactly
/// `PcaRegressor::predict`.
pub fn reproject_with(eigen_new: &EigenSystem, reg: &PcaRegressor, x: &[f64]) -> Result<f64> {
    if eigen_new.dim() != reg.eigen_basis.dim() {
        return Err(Error::DimMismatch {
            expected: reg.eigen_basis.dim(),
            found: eigen_new.dim(),
            context: "reprojection basis dimension",
        });
    }
    let scores = pca_transform_topk(eigen_new, x, reg.n_components)?;
    Ok(reg.predict_scores(&scores))
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cholesky solve of a symmetric positive definite system.
fn solve_spd(mut a: DenseMatrix, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = a.rows();
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= a.get(j, k) * a.get(j, k);
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::SingularSystem);
        }
        let d = d.sqrt();
        a.set(j, j, d);
        for i in (j + 1)..n {
            let mut v = a.get(i, j);
            for k in 0..j {
                v -= a.get(i, k) * a.get(j, k);
            }
            a.set(i, j, v / d);
        }
    }
    // Forward then backward substitution.
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= a.get(i, k) * b[k];
        }
        b[i] = v / a.get(i, i);
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in (i + 1)..n {
            v -= a.get(k, i) * b[k];
        }
        b[i] = v / a.get(i, i);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::rng::SeededRng;
    use crate::datagen::{gen_gaussian_ensemble, EnsembleSpec};
    use crate::numcore::{sample_covariance, CovarianceModel};

    fn scored_dataset(m: usize, n: usize, seed: u64) -> (Dataset, EigenSystem) {
        let spec =
            EnsembleSpec::new(m, (0..m).map(|i| 2.0 / (1.0 + i as f64)).collect(), seed).unwrap();
        let (data, _) = gen_gaussian_ensemble(&spec, n, seed + 1).unwrap();
        let eigen = sample_covariance(&data).eigen().unwrap().clone();
        (data, eigen)
    }

    fn with_targets(data: &Dataset, f: impl Fn(&[f64]) -> f64) -> Dataset {
        let targets: Vec<f64> = (0..data.n_samples()).map(|i| f(data.sample(i))).collect();
        Dataset::new(data.features().clone(), Some(targets), None).unwrap()
    }

    #[test]
    fn topk_is_prefix_of_full_transform() {
        let (data, eigen) = scored_dataset(8, 30, 1);
        let x = data.sample(3);
        let full = pca_transform_topk(&eigen, x, 8).unwrap();
        let direct = vft(&eigen, x).unwrap();
        for (a, b) in full.iter().zip(direct.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
        let top3 = pca_transform_topk(&eigen, x, 3).unwrap();
        assert_eq!(&full[..3], top3.as_slice());
        assert!(pca_transform_topk(&eigen, x, 9).is_err());
        assert!(pca_transform_topk(&eigen, x, 0).is_err());
    }

    #[test]
    fn topk_on_diagonal_case() {
        let cov =
            CovarianceModel::new(DenseMatrix::from_vec(2, 2, vec![3.0, 0.0, 0.0, 1.0]).unwrap())
                .unwrap();
        let eigen = cov.eigen().unwrap();
        let s = pca_transform_topk(eigen, &[5.0, 7.0], 1).unwrap();
        assert_eq!(s, vec![5.0]);
    }

    #[test]
    fn linear_fit_recovers_realizable_target() {
        let (data, eigen) = scored_dataset(6, 50, 3);
        let teacher = {
            let e = eigen.clone();
            move |x: &[f64]| 2.5 * pca_transform_topk(&e, x, 1).unwrap()[0] - 0.75
        };
        let data = with_targets(&data, teacher);
        let reg = fit_pca_linear(&data, &eigen, 1).unwrap();
        let preds = reg.predict_dataset(&data).unwrap();
        let mse: f64 = preds
            .iter()
            .zip(data.targets().unwrap())
            .map(|(p, t)| (p - t).powi(2))
            .sum::<f64>()
            / preds.len() as f64;
        assert!(mse <= 1e-10, "mse {mse}");
    }

    #[test]
    fn constant_targets_give_zero_slope() {
        let (data, eigen) = scored_dataset(5, 40, 5);
        let data = with_targets(&data, |_| 4.2);
        let reg = fit_pca_linear(&data, &eigen, 3).unwrap();
        match reg.kind() {
            RegressorKind::Linear { weights, intercept } => {
                for w in weights {
                    assert!(w.abs() <= 1e-8, "weight {w}");
                }
                assert!((intercept - 4.2).abs() <= 1e-8);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn linear_fit_matches_least_squares_oracle() {
        // Oracle: Gaussian elimination with partial pivoting on the same
        // normal equations, written independently of the Cholesky path.
        let (data, eigen) = scored_dataset(5, 30, 7);
        let mut rng = SeededRng::new(2);
        let data = with_targets(&data, |x| x[0] - 0.5 * x[2] + 0.1);
        let c = 3;
        let _ = rng.uniform();
        let reg = fit_pca_linear_with_jitter(&data, &eigen, c, 0.0).unwrap();

        let scores = score_matrix(&data, &eigen, c).unwrap();
        let targets = data.targets().unwrap();
        let dim = c + 1;
        let mut a = vec![vec![0.0; dim]; dim];
        let mut b = vec![0.0; dim];
        for i in 0..data.n_samples() {
            let mut design = vec![1.0];
            design.extend_from_slice(scores.row(i));
            for p in 0..dim {
                b[p] += design[p] * targets[i];
                for q in 0..dim {
                    a[p][q] += design[p] * design[q];
                }
            }
        }
        // Gaussian elimination.
        for col in 0..dim {
            let pivot = (col..dim)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            b.swap(col, pivot);
            for row in (col + 1)..dim {
                let factor = a[row][col] / a[col][col];
                for k in col..dim {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
        let mut solution = vec![0.0; dim];
        for row in (0..dim).rev() {
            let mut v = b[row];
            for k in (row + 1)..dim {
                v -= a[row][k] * solution[k];
            }
            solution[row] = v / a[row][row];
        }

        match reg.kind() {
            RegressorKind::Linear { weights, intercept } => {
                assert!((intercept - solution[0]).abs() <= 1e-8);
                for (w, s) in weights.iter().zip(&solution[1..]) {
                    assert!((w - s).abs() <= 1e-8);
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn rbf_ridge_limit_predicts_mean() {
        let (data, eigen) = scored_dataset(4, 40, 9);
        let data = with_targets(&data, |x| 3.0 * x[0] + 1.0);
        let targets = data.targets().unwrap();
        let mean = targets.iter().sum::<f64>() / targets.len() as f64;
        let reg = fit_pca_rbf(&data, &eigen, 2, 0.5, 1e6).unwrap();
        let preds = reg.predict_dataset(&data).unwrap();
        for p in preds {
            assert!(
                (p - mean).abs() <= 0.01 * mean.abs().max(1.0),
                "{p} vs mean {mean}"
            );
        }
    }

    #[test]
    fn rbf_interpolation_limit_hits_targets() {
        let (data, eigen) = scored_dataset(4, 25, 11);
        let data = with_targets(&data, |x| x[0] * x[1] - x[2]);
        let reg = fit_pca_rbf(&data, &eigen, 4, 0.8, 1e-8).unwrap();
        let preds = reg.predict_dataset(&data).unwrap();
        for (p, t) in preds.iter().zip(data.targets().unwrap()) {
            assert!((p - t).abs() <= 1e-3, "{p} vs {t}");
        }
    }

    #[test]
    fn rbf_matches_direct_dual_solve_oracle() {
        let (data, eigen) = scored_dataset(5, 50, 13);
        let data = with_targets(&data, |x| x[0] - x[1] + 0.3 * x[2]);
        let c = 3;
        let gamma = 0.7;
        let lambda = 0.05;
        let reg = fit_pca_rbf(&data, &eigen, c, gamma, lambda).unwrap();

        // Oracle: build K explicitly, solve by Gaussian elimination.
        let scores = score_matrix(&data, &eigen, c).unwrap();
        let n = data.n_samples();
        let mut k = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let sq = squared_distance(scores.row(i), scores.row(j));
                k[i][j] = (-gamma * sq).exp() + if i == j { lambda } else { 0.0 };
            }
        }
        let targets_raw = data.targets().unwrap();
        let y_mean = targets_raw.iter().sum::<f64>() / n as f64;
        let mut rhs: Vec<f64> = targets_raw.iter().map(|t| t - y_mean).collect();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| k[i][col].abs().partial_cmp(&k[j][col].abs()).unwrap())
                .unwrap();
            k.swap(col, pivot);
            rhs.swap(col, pivot);
            for row in (col + 1)..n {
                let factor = k[row][col] / k[col][col];
                for t in col..n {
                    k[row][t] -= factor * k[col][t];
                }
                rhs[row] -= factor * rhs[col];
            }
        }
        let mut alpha = vec![0.0; n];
        for row in (0..n).rev() {
            let mut v = rhs[row];
            for t in (row + 1)..n {
                v -= k[row][t] * alpha[t];
            }
            alpha[row] = v / k[row][row];
        }

        match reg.kind() {
            RegressorKind::Rbf {
                dual_coefficients, ..
            } => {
                for (a, b) in dual_coefficients.iter().zip(alpha.iter()) {
                    assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn cv_selects_single_informative_component() {
        let (data, eigen) = scored_dataset(10, 120, 15);
        let teacher = {
            let e = eigen.clone();
            move |x: &[f64]| 4.0 * pca_transform_topk(&e, x, 1).unwrap()[0]
        };
        let data = with_targets(&data, teacher);
        let c =
            cv_select_components(&data, &eigen, &[1, 5, 10], BaselineKernel::Linear, 3).unwrap();
        assert_eq!(c, 1);
    }

    #[test]
    fn cv_breaks_ties_to_smallest() {
        let (data, eigen) = scored_dataset(6, 60, 17);
        let data = with_targets(&data, |_| 1.0);
        let c = cv_select_components(&data, &eigen, &[2, 4, 6], BaselineKernel::Linear, 5).unwrap();
        assert_eq!(c, 2);
    }

    #[test]
    fn cv_is_deterministic_given_seed() {
        let (data, eigen) = scored_dataset(8, 90, 19);
        let data = with_targets(&data, |x| x[0] + x[3].powi(2));
        let a = cv_select_components(
            &data,
            &eigen,
            &default_component_candidates(8, 90),
            BaselineKernel::Linear,
            7,
        )
        .unwrap();
        let b = cv_select_components(
            &data,
            &eigen,
            &default_component_candidates(8, 90),
            BaselineKernel::Linear,
            7,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cv_requires_enough_samples() {
        let (data, eigen) = scored_dataset(4, 30, 21);
        let small = data.subset(&[0, 1, 2, 3, 4]).unwrap();
        let small = with_targets(&small, |x| x[0]);
        assert!(cv_select_components(&small, &eigen, &[1], BaselineKernel::Linear, 1).is_err());
    }

    #[test]
    fn reprojection_with_training_basis_is_identity() {
        let (data, eigen) = scored_dataset(6, 60, 23);
        let data = with_targets(&data, |x| x[1] - 2.0 * x[4]);
        let reg = fit_pca_linear(&data, &eigen, 4).unwrap();
        for i in 0..5 {
            let a = reg.predict(data.sample(i)).unwrap();
            let b = reproject_with(&eigen, &reg, data.sample(i)).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn sign_flip_shifts_prediction_by_twice_weighted_score() {
        let (data, eigen) = scored_dataset(5, 40, 25);
        let data = with_targets(&data, |x| x[0] + 0.5 * x[1]);
        let reg = fit_pca_linear(&data, &eigen, 2).unwrap();
        let w1 = match reg.kind() {
            RegressorKind::Linear { weights, .. } => weights[0],
            _ => unreachable!(),
        };

        // Flip the sign of the leading eigenvector.
        let mut vectors = eigen.eigenvectors().clone();
        let flipped: Vec<f64> = eigen.eigenvector(0).iter().map(|v| -v).collect();
        vectors.set_column(0, &flipped);
        let eigen_flipped = EigenSystem::from_parts(eigen.eigenvalues().to_vec(), vectors);

        let x = data.sample(7);
        let score1 = pca_transform_topk(&eigen, x, 1).unwrap()[0];
        let base = reg.predict(x).unwrap();
        let flipped_pred = reproject_with(&eigen_flipped, &reg, x).unwrap();
        let expect = 2.0 * w1 * score1;
        assert!(
            ((base - flipped_pred) - expect).abs() <= 1e-10,
            "shift {} vs {expect}",
            base - flipped_pred
        );
    }

    #[test]
    fn full_component_linear_fit_equals_raw_ols() {
        // With c = m and no jitter, regression on scores is OLS on the
        // features after an orthonormal change of basis.
        let (data, eigen) = scored_dataset(5, 60, 27);
        let data = with_targets(&data, |x| 1.0 + x[0] - 3.0 * x[2] + 0.25 * x[4]);
        let reg = fit_pca_linear_with_jitter(&data, &eigen, 5, 0.0).unwrap();

        // Raw OLS oracle on the original features.
        let targets = data.targets().unwrap();
        let raw = {
            let mut scores = DenseMatrix::zeros(data.n_samples(), 5);
            for i in 0..data.n_samples() {
                scores.row_mut(i).copy_from_slice(data.sample(i));
            }
            ols_fit(&scores, targets, 0.0).unwrap()
        };
        for i in 0..10 {
            let x = data.sample(i);
            let pca_pred = reg.predict(x).unwrap();
            let raw_pred = raw.1 + dot(&raw.0, x);
            assert!((pca_pred - raw_pred).abs() <= 1e-8);
        }
    }
}
