//! Direct evaluation of the network perturbation bound: for two shift
//! operators whose per-filter difference is at most `alpha` in operator
//! norm, and filters whose responses are bounded by 1 on both spectra, the
//! final-layer outputs may differ by at most `L * F^(L-1) * alpha * ||x||`.
//!
//! The bound concerns the pre-readout outputs; the scalar readout is a
//! `1/(mF)`-Lipschitz mean on top, so its difference is reported alongside
//! rather than folded into the check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::Provenance;
use crate::numcore::matrix::norm2;
use crate::numcore::{operator_norm_sym, CovarianceModel};
use crate::spectral::{filter_matrix, frequency_response};
use crate::vnn::{vnn_forward, VnnModel};

/// Slack for the response-bound hypothesis check, covering rescaling
/// round-off only.
const RESPONSE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCase {
    /// Sum over final-layer channels of the Euclidean norm of the output
    /// difference.
    pub lhs: f64,
    /// `L * F^(L-1) * alpha * ||x||`.
    pub rhs: f64,
    /// Difference of the scalar readouts, reported separately.
    pub readout_diff: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// Max over all filters of `||H(C_a) - H(C_b)||`.
    pub alpha: f64,
    pub layers: usize,
    pub width: usize,
    pub cases: Vec<LipschitzCase>,
    pub all_pass: bool,
    pub provenance: Provenance,
}

/// Checks the bound for every input in the batch. The model must already
/// satisfy the response hypothesis `max |h(lambda)| <= 1` over the union of
/// both spectra (see `vnn::rescale_filter_responses`); a violating filter
/// is reported by its position.
pub fn lipschitz_check(
    model: &VnnModel,
    cov_a: &CovarianceModel,
    cov_b: &CovarianceModel,
    inputs: &[Vec<f64>],
) -> Result<LipschitzReport> {
    if cov_a.dim() != cov_b.dim() {
        return Err(Error::DimMismatch {
            expected: cov_a.dim(),
            found: cov_b.dim(),
            context: "covariance pair",
        });
    }

    let mut union_spectrum = cov_a.eigen()?.eigenvalues().to_vec();
    union_spectrum.extend_from_slice(cov_b.eigen()?.eigenvalues());

    let mut alpha = 0.0_f64;
    for (l, layer) in model.layers().iter().enumerate() {
        let spec = layer.spec();
        for f in 0..spec.f_out {
            for g in 0..spec.f_in {
                let taps = layer.filter_taps(f, g);
                let max_response = union_spectrum
                    .iter()
                    .map(|&lam| frequency_response(&taps, lam).abs())
                    .fold(0.0_f64, f64::max);
                if max_response > 1.0 + RESPONSE_TOL {
                    return Err(Error::ResponseBoundViolated {
                        layer: l,
                        f_out: f,
                        f_in: g,
                        max_response,
                    });
                }
                let diff = filter_matrix(cov_a, &taps)?.sub(&filter_matrix(cov_b, &taps)?)?;
                alpha = alpha.max(operator_norm_sym(&diff)?);
            }
        }
    }

    let layers = model.num_layers();
    let width = model.max_width();
    let factor = layers as f64 * (width as f64).powi(layers as i32 - 1);

    let cases = inputs
        .iter()
        .map(|x| -> Result<LipschitzCase> {
            let (pred_a, cache_a) = vnn_forward(model, cov_a, x)?;
            let (pred_b, cache_b) = vnn_forward(model, cov_b, x)?;
            let lhs: f64 = cache_a
                .final_outputs()
                .iter()
                .zip(cache_b.final_outputs().iter())
                .map(|(a, b)| {
                    let diff: Vec<f64> = a
                        .as_slice()
                        .iter()
                        .zip(b.as_slice().iter())
                        .map(|(x, y)| x - y)
                        .collect();
                    norm2(&diff)
                })
                .sum();
            let rhs = factor * alpha * norm2(x);
            Ok(LipschitzCase {
                lhs,
                rhs,
                readout_diff: (pred_a - pred_b).abs(),
                pass: lhs <= rhs + 1e-12 * (1.0 + rhs),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let all_pass = cases.iter().all(|c| c.pass);
    Ok(LipschitzReport {
        alpha,
        layers,
        width,
        cases,
        all_pass,
        provenance: Provenance::new(0, &(layers, width)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_gaussian_ensemble, EnsembleSpec};
    use crate::numcore::sample_covariance;
    use crate::vnn::{rescale_filter_responses, Activation, FilterBankLayer, LayerSpec};

    fn cov_pair(m: usize, seed: u64) -> (CovarianceModel, CovarianceModel) {
        let spec =
            EnsembleSpec::new(m, (0..m).map(|i| 1.0 / (1.0 + i as f64)).collect(), seed).unwrap();
        let (data, ensemble) = gen_gaussian_ensemble(&spec, 6 * m, seed + 1).unwrap();
        (sample_covariance(&data), ensemble)
    }

    #[test]
    fn identical_covariances_give_zero_on_both_sides() {
        let (cov, _) = cov_pair(5, 1);
        let layer = FilterBankLayer::new(
            LayerSpec {
                f_in: 1,
                f_out: 1,
                taps_per_filter: 2,
                activation: Activation::Relu,
            },
            vec![0.2, 0.3],
        )
        .unwrap();
        let model = rescale_filter_responses(
            &VnnModel::new(vec![layer], 1).unwrap(),
            cov.eigen().unwrap().eigenvalues(),
        );
        let report =
            lipschitz_check(&model, &cov, &cov, &[vec![0.5, -0.2, 0.1, 0.0, 0.3]]).unwrap();
        assert_eq!(report.alpha, 0.0);
        assert_eq!(report.cases[0].lhs, 0.0);
        assert_eq!(report.cases[0].rhs, 0.0);
        assert!(report.all_pass);
    }

    #[test]
    fn constant_identity_filter_is_covariance_free() {
        let (a, b) = cov_pair(6, 7);
        let layer = FilterBankLayer::new(
            LayerSpec {
                f_in: 1,
                f_out: 1,
                taps_per_filter: 1,
                activation: Activation::Tanh,
            },
            vec![1.0],
        )
        .unwrap();
        let model = VnnModel::new(vec![layer], 1).unwrap();
        let report =
            lipschitz_check(&model, &a, &b, &[vec![0.1, 0.2, -0.4, 0.0, 0.3, -0.1]]).unwrap();
        assert_eq!(report.alpha, 0.0);
        assert_eq!(report.cases[0].lhs, 0.0);
        assert!(report.all_pass);
    }

    #[test]
    fn response_hypothesis_violation_names_the_filter() {
        let (a, b) = cov_pair(4, 13);
        let layer = FilterBankLayer::new(
            LayerSpec {
                f_in: 1,
                f_out: 2,
                taps_per_filter: 2,
                activation: Activation::Relu,
            },
            vec![0.1, 0.1, 5.0, 5.0],
        )
        .unwrap();
        let model = VnnModel::new(vec![layer], 1).unwrap();
        match lipschitz_check(&model, &a, &b, &[vec![1.0, 0.0, 0.0, 0.0]]) {
            Err(Error::ResponseBoundViolated {
                layer: 0,
                f_out: 1,
                f_in: 0,
                ..
            }) => {}
            other => panic!("expected response violation, got {other:?}"),
        }
    }

    #[test]
    fn bound_holds_on_seeded_cases() {
        let mut all_alpha = 0.0_f64;
        for seed in 0..8 {
            let (a, b) = cov_pair(6, 100 + seed);
            let specs = [
                LayerSpec {
                    f_in: 1,
                    f_out: 3,
                    taps_per_filter: 2,
                    activation: Activation::Relu,
                },
                LayerSpec {
                    f_in: 3,
                    f_out: 1,
                    taps_per_filter: 2,
                    activation: Activation::Tanh,
                },
            ];
            let raw = VnnModel::init_random(&specs, seed).unwrap();
            let mut union = a.eigen().unwrap().eigenvalues().to_vec();
            union.extend_from_slice(b.eigen().unwrap().eigenvalues());
            let model = rescale_filter_responses(&raw, &union);
            let mut rng = crate::datagen::rng::SeededRng::new(seed);
            let xs: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..6).map(|_| rng.normal()).collect())
                .collect();
            let report = lipschitz_check(&model, &a, &b, &xs).unwrap();
            assert!(report.all_pass, "seed {seed}: {:?}", report.cases);
            all_alpha = all_alpha.max(report.alpha);
        }
        assert!(all_alpha > 0.0);
    }
}
