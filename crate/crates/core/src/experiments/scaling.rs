//! Empirical scaling of filter perturbation with sample size: how fast
//! `||H(C_hat_n) - H(C)||` shrinks as `n` grows, measured over a grid of
//! sample sizes and seeds against a known ensemble covariance.
//!
//! Sample covariances for the different grid sizes are computed from
//! prefixes of one stream of draws per seed, so the sweep is nested and a
//! report is reproducible from `(spec, seed)` alone. The slope is fitted to
//! the per-size medians across seeds, which is robust to the heavy-tail
//! events a finite-sample bound tolerates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::rng::derive_seed;
use crate::datagen::{gen_gaussian_ensemble, EnsembleSpec};
use crate::error::{Error, Result};
use crate::experiments::{median, Provenance};
use crate::numcore::{format_f64, operator_norm_sym, sample_covariance};
use crate::spectral::{filter_matrix, frequency_response, FilterTaps};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub ensemble: EnsembleSpec,
    /// Filter taps; the harness rescales them so the ensemble-spectrum
    /// response magnitude is at most 1 before measuring.
    pub taps: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub n_seeds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedNorms {
    pub seed_index: usize,
    pub norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub spec: ScalingSpec,
    pub rescaled_taps: Vec<f64>,
    pub per_seed: Vec<SeedNorms>,
    pub median_norms: Vec<f64>,
    /// Least-squares slope of `log median norm` against `log n`; absent for
    /// the constant-filter case where every norm is exactly zero.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub constant_zero: bool,
    /// Number of adjacent median pairs that increase with n.
    pub median_inversions: usize,
    pub provenance: Provenance,
}

impl ScalingReport {
    pub fn to_tidy_csv(&self) -> String {
        let mut out = String::from("seed_index,n,norm\n");
        for seed in &self.per_seed {
            for (n, norm) in self.spec.n_grid.iter().zip(seed.norms.iter()) {
                out.push_str(&format!("{},{n},{}\n", seed.seed_index, format_f64(*norm)));
            }
        }
        out
    }
}

pub fn scaling_law_experiment(spec: &ScalingSpec) -> Result<ScalingReport> {
    if spec.n_seeds == 0 {
        return Err(Error::InvalidParameter("need at least one seed".into()));
    }
    if spec.n_grid.len() < 2 {
        return Err(Error::InvalidParameter(
            "scaling grid needs at least two sample sizes".into(),
        ));
    }
    if spec.n_grid.iter().any(|&n| n < 2) {
        return Err(Error::InvalidParameter(
            "every grid size must be at least 2".into(),
        ));
    }
    if spec.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "scaling grid must be strictly increasing".into(),
        ));
    }
    let n_min = *spec.n_grid.first().unwrap() as f64;
    let n_max = *spec.n_grid.last().unwrap() as f64;
    if n_max / n_min < 100.0 {
        return Err(Error::InvalidParameter(
            "scaling grid must span at least two decades".into(),
        ));
    }

    let realized = spec.ensemble.realize()?;
    let raw_taps = FilterTaps::new(spec.taps.clone())?;
    let max_response = realized
        .spectrum
        .iter()
        .map(|&l| frequency_response(&raw_taps, l).abs())
        .fold(0.0_f64, f64::max);
    let taps = if max_response > 0.0 {
        raw_taps.scaled(1.0 / max_response)
    } else {
        raw_taps
    };

    let ensemble_filter = filter_matrix(&realized.covariance, &taps)?;
    let n_total = *spec.n_grid.last().unwrap();

    let per_seed: Vec<SeedNorms> = (0..spec.n_seeds)
        .into_par_iter()
        .map(|s| -> Result<SeedNorms> {
            let (data, _) =
                gen_gaussian_ensemble(&spec.ensemble, n_total, derive_seed(spec.seed, s as u64))?;
            let norms = spec
                .n_grid
                .iter()
                .map(|&n| {
                    let prefix: Vec<usize> = (0..n).collect();
                    let cov = sample_covariance(&data.subset(&prefix)?);
                    let diff = filter_matrix(&cov, &taps)?.sub(&ensemble_filter)?;
                    operator_norm_sym(&diff)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SeedNorms {
                seed_index: s,
                norms,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let median_norms: Vec<f64> = (0..spec.n_grid.len())
        .map(|gi| median(&per_seed.iter().map(|s| s.norms[gi]).collect::<Vec<_>>()))
        .collect();

    let constant_zero = median_norms.iter().all(|&v| v == 0.0);
    let (slope, intercept) = if constant_zero || median_norms.iter().any(|&v| v <= 0.0) {
        (None, None)
    } else {
        let xs: Vec<f64> = spec.n_grid.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = median_norms.iter().map(|&v| v.ln()).collect();
        let (a, b) = least_squares_line(&xs, &ys);
        (Some(a), Some(b))
    };

    let median_inversions = median_norms.windows(2).filter(|w| w[1] > w[0]).count();

    Ok(ScalingReport {
        spec: spec.clone(),
        rescaled_taps: taps.as_slice().to_vec(),
        per_seed,
        median_norms,
        slope,
        intercept,
        constant_zero,
        median_inversions,
        provenance: Provenance::new(spec.seed, spec),
    })
}

fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::rng::SeededRng;
    use crate::numcore::covariance_error_norm;

    fn small_spec(taps: Vec<f64>) -> ScalingSpec {
        ScalingSpec {
            ensemble: EnsembleSpec::new(4, vec![2.0, 1.0, 0.5, 0.25], 3).unwrap(),
            taps,
            n_grid: vec![10, 100, 1000],
            n_seeds: 3,
            seed: 5,
        }
    }

    #[test]
    fn constant_filter_reports_zero_case() {
        let report = scaling_law_experiment(&small_spec(vec![0.7])).unwrap();
        assert!(report.constant_zero);
        assert!(report.slope.is_none());
        assert!(report
            .per_seed
            .iter()
            .all(|s| s.norms.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn identity_map_taps_reduce_to_covariance_error() {
        // taps (0, 1): H(A) = A, so the filter perturbation equals the raw
        // covariance perturbation. The harness rescales taps by the max
        // response (top eigenvalue 2), so norms scale by 1/2.
        let spec = small_spec(vec![0.0, 1.0]);
        let report = scaling_law_experiment(&spec).unwrap();
        let realized = spec.ensemble.realize().unwrap();
        for seed in &report.per_seed {
            let (data, ensemble) = gen_gaussian_ensemble(
                &spec.ensemble,
                *spec.n_grid.last().unwrap(),
                derive_seed(spec.seed, seed.seed_index as u64),
            )
            .unwrap();
            for (gi, &n) in spec.n_grid.iter().enumerate() {
                let prefix: Vec<usize> = (0..n).collect();
                let cov = sample_covariance(&data.subset(&prefix).unwrap());
                let expect = covariance_error_norm(&cov, &ensemble).unwrap() / realized.spectrum[0];
                assert!(
                    (seed.norms[gi] - expect).abs() <= 1e-12,
                    "{} vs {expect}",
                    seed.norms[gi]
                );
            }
        }
    }

    #[test]
    fn medians_shrink_with_sample_size() {
        let report = scaling_law_experiment(&small_spec(vec![0.3, 0.5, 0.2])).unwrap();
        assert!(report.median_inversions <= 1);
        assert!(report.slope.unwrap() < -0.2, "slope {:?}", report.slope);
    }

    #[test]
    fn grid_must_span_two_decades() {
        let mut spec = small_spec(vec![0.3, 0.5]);
        spec.n_grid = vec![10, 99];
        assert!(scaling_law_experiment(&spec).is_err());
    }

    #[test]
    fn least_squares_recovers_exact_line() {
        let mut rng = SeededRng::new(1);
        let xs: Vec<f64> = (0..20).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -0.5 * x + 2.0).collect();
        let (slope, intercept) = least_squares_line(&xs, &ys);
        assert!((slope + 0.5).abs() < 1e-12);
        assert!((intercept - 2.0).abs() < 1e-12);
    }
}
