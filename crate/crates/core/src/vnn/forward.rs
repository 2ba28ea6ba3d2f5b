//! Forward pass. Samples are processed in batches stored as the columns of
//! m-by-B matrices, one matrix per channel; powers `C^k x` are computed once
//! per input channel and shared across the layer's output filters, which
//! leaves the arithmetic identical to summing per-filter applications.

use crate::error::{Error, Result};
use crate::numcore::{CovarianceModel, DenseMatrix};
use crate::vnn::{FilterBankLayer, Readout, VnnModel};

/// Everything the backward pass needs, recorded layer by layer.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub(crate) layers: Vec<LayerCache>,
    /// Activations of the final layer, one m-by-B matrix per channel.
    pub(crate) outputs: Vec<DenseMatrix>,
    pub(crate) batch: usize,
    pub(crate) cov_dim: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    /// powers[g][k] = C^k X_g, k in 0..T.
    pub(crate) powers: Vec<Vec<DenseMatrix>>,
    /// Pre-activation sums per output channel.
    pub(crate) pre_activations: Vec<DenseMatrix>,
}

impl ForwardCache {
    /// Final-layer activations (pre-readout outputs), per channel.
    pub fn final_outputs(&self) -> &[DenseMatrix] {
        &self.outputs
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    pub(crate) fn check_model(&self, model: &VnnModel, cov: &CovarianceModel) -> Result<()> {
        if self.cov_dim != cov.dim() {
            return Err(Error::DimMismatch {
                expected: self.cov_dim,
                found: cov.dim(),
                context: "cache covariance dimension",
            });
        }
        if self.layers.len() != model.num_layers() {
            return Err(Error::DimMismatch {
                expected: self.layers.len(),
                found: model.num_layers(),
                context: "cache layer count",
            });
        }
        for (cache, layer) in self.layers.iter().zip(model.layers()) {
            let spec = layer.spec();
            if cache.powers.len() != spec.f_in
                || cache.pre_activations.len() != spec.f_out
                || cache.powers.iter().any(|p| p.len() != spec.taps_per_filter)
            {
                return Err(Error::DimMismatch {
                    expected: spec.tap_count(),
                    found: cache.powers.len(),
                    context: "cache layer shape (stale cache?)",
                });
            }
        }
        Ok(())
    }
}

fn layer_forward(
    cov: &CovarianceModel,
    layer: &FilterBankLayer,
    inputs: &[DenseMatrix],
) -> Result<(Vec<DenseMatrix>, LayerCache)> {
    let spec = layer.spec();
    if inputs.len() != spec.f_in {
        return Err(Error::DimMismatch {
            expected: spec.f_in,
            found: inputs.len(),
            context: "layer input channels",
        });
    }
    let m = cov.dim();
    if spec.taps_per_filter > m + 1 {
        return Err(Error::InvalidParameter(format!(
            "{} taps exceed the m + 1 = {} allowed for dimension {m}",
            spec.taps_per_filter,
            m + 1
        )));
    }
    for x in inputs {
        if x.rows() != m {
            return Err(Error::DimMismatch {
                expected: m,
                found: x.rows(),
                context: "layer input dimension",
            });
        }
    }
    let batch = inputs[0].cols();

    let mut powers: Vec<Vec<DenseMatrix>> = Vec::with_capacity(spec.f_in);
    for x in inputs {
        let mut stack = Vec::with_capacity(spec.taps_per_filter);
        stack.push(x.clone());
        for k in 1..spec.taps_per_filter {
            stack.push(cov.matrix().matmul(&stack[k - 1])?);
        }
        powers.push(stack);
    }

    let mut pre_activations = Vec::with_capacity(spec.f_out);
    let mut outputs = Vec::with_capacity(spec.f_out);
    for f in 0..spec.f_out {
        let mut sum = DenseMatrix::zeros(m, batch);
        for (g, stack) in powers.iter().enumerate() {
            for (k, power) in stack.iter().enumerate() {
                sum.add_scaled(layer.tap(f, g, k), power);
            }
        }
        let mut act = sum.clone();
        for v in act.as_mut_slice() {
            *v = spec.activation.apply(*v);
        }
        pre_activations.push(sum);
        outputs.push(act);
    }

    Ok((
        outputs,
        LayerCache {
            powers,
            pre_activations,
        },
    ))
}

/// One perceptron layer applied to a single sample laid out as an
/// m-by-F_in matrix of channels; returns the m-by-F_out output.
pub fn perceptron_forward(
    cov: &CovarianceModel,
    layer: &FilterBankLayer,
    x_in: &DenseMatrix,
) -> Result<DenseMatrix> {
    let spec = layer.spec();
    if x_in.cols() != spec.f_in {
        return Err(Error::DimMismatch {
            expected: spec.f_in,
            found: x_in.cols(),
            context: "perceptron input channels",
        });
    }
    let channels: Vec<DenseMatrix> = (0..spec.f_in)
        .map(|g| {
            let mut c = DenseMatrix::zeros(x_in.rows(), 1);
            c.set_column(0, &x_in.column(g));
            c
        })
        .collect();
    let (outputs, _) = layer_forward(cov, layer, &channels)?;
    let mut out = DenseMatrix::zeros(x_in.rows(), spec.f_out);
    for (f, channel) in outputs.iter().enumerate() {
        out.set_column(f, &channel.column(0));
    }
    Ok(out)
}

/// Full forward pass over a batch of samples (columns of `columns`),
/// returning the scalar readout per sample plus the cached intermediates.
pub fn vnn_forward_batch(
    model: &VnnModel,
    cov: &CovarianceModel,
    columns: &DenseMatrix,
) -> Result<(Vec<f64>, ForwardCache)> {
    if model.input_channels() != 1 {
        return Err(Error::InvalidParameter(
            "batch forward expects a single-channel input; use perceptron_forward for multi-channel layers".into(),
        ));
    }
    if columns.rows() != cov.dim() {
        return Err(Error::DimMismatch {
            expected: cov.dim(),
            found: columns.rows(),
            context: "input dimension vs covariance",
        });
    }
    let batch = columns.cols();
    let mut activations = vec![columns.clone()];
    let mut layer_caches = Vec::with_capacity(model.num_layers());
    for layer in model.layers() {
        let (outputs, cache) = layer_forward(cov, layer, &activations)?;
        layer_caches.push(cache);
        activations = outputs;
    }

    let predictions = readout(model.readout(), &activations, batch);
    Ok((
        predictions,
        ForwardCache {
            layers: layer_caches,
            outputs: activations,
            batch,
            cov_dim: cov.dim(),
        },
    ))
}

pub(crate) fn readout(readout: Readout, channels: &[DenseMatrix], batch: usize) -> Vec<f64> {
    match readout {
        Readout::MeanAll => {
            let m = channels[0].rows();
            let denom = (m * channels.len()) as f64;
            let mut sums = vec![0.0; batch];
            for channel in channels {
                for i in 0..m {
                    for (s, &v) in sums.iter_mut().zip(channel.row(i).iter()) {
                        *s += v;
                    }
                }
            }
            for s in sums.iter_mut() {
                *s /= denom;
            }
            sums
        }
    }
}

/// Forward pass for a single sample: the scalar prediction plus the cached
/// per-layer activations for backpropagation.
pub fn vnn_forward(
    model: &VnnModel,
    cov: &CovarianceModel,
    x: &[f64],
) -> Result<(f64, ForwardCache)> {
    let mut column = DenseMatrix::zeros(x.len(), 1);
    column.set_column(0, x);
    let (preds, cache) = vnn_forward_batch(model, cov, &column)?;
    Ok((preds[0], cache))
}

/// Predictions only, dropping the cache.
pub fn forward_predictions(
    model: &VnnModel,
    cov: &CovarianceModel,
    columns: &DenseMatrix,
) -> Result<Vec<f64>> {
    Ok(vnn_forward_batch(model, cov, columns)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::rng::SeededRng;
    use crate::datagen::{gen_gaussian_ensemble, EnsembleSpec};
    use crate::numcore::sample_covariance;
    use crate::spectral::apply_filter;
    use crate::vnn::{Activation, FilterBankLayer, LayerSpec};

    fn test_cov(m: usize, seed: u64) -> CovarianceModel {
        let spec =
            EnsembleSpec::new(m, (0..m).map(|i| 1.0 / (1.0 + i as f64)).collect(), seed).unwrap();
        let (data, _) = gen_gaussian_ensemble(&spec, 3 * m, seed).unwrap();
        sample_covariance(&data)
    }

    #[test]
    fn identity_filter_passes_nonnegative_input_through_relu() {
        let layer = FilterBankLayer::new(
            LayerSpec {
                f_in: 1,
                f_out: 1,
                taps_per_filter: 1,
                activation: Activation::Relu,
            },
            vec![1.0],
        )
        .unwrap();
        let cov = test_cov(4, 1);
        let x = DenseMatrix::from_vec(4, 1, vec![0.5, 0.0, 2.0, 1.25]).unwrap();
        let out = perceptron_forward(&cov, &layer, &x).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn zero_taps_give_zero_output() {
        let layer = FilterBankLayer::zeros(LayerSpec {
            f_in: 2,
            f_out: 3,
            taps_per_filter: 2,
            activation: Activation::Relu,
        })
        .unwrap();
        let cov = test_cov(5, 2);
        let x = DenseMatrix::from_fn(5, 2, |i, j| (i + j) as f64 - 1.0);
        let out = perceptron_forward(&cov, &layer, &x).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn perceptron_matches_sum_of_filter_outputs() {
        // Oracle: output channel f as the explicit sum over input channels
        // of per-filter applications.
        let mut rng = SeededRng::new(33);
        let spec = LayerSpec {
            f_in: 2,
            f_out: 2,
            taps_per_filter: 3,
            activation: Activation::Identity,
        };
        let taps: Vec<f64> = (0..spec.tap_count())
            .map(|_| rng.uniform_in(-1.0, 1.0))
            .collect();
        let layer = FilterBankLayer::new(spec, taps).unwrap();
        let cov = test_cov(6, 3);
        let x = DenseMatrix::from_fn(6, 2, |i, j| ((i * 2 + j) as f64 * 0.37).sin());

        let out = perceptron_forward(&cov, &layer, &x).unwrap();
        for f in 0..2 {
            let mut expect = [0.0; 6];
            for g in 0..2 {
                let part = apply_filter(&cov, &layer.filter_taps(f, g), &x.column(g)).unwrap();
                for (e, p) in expect.iter_mut().zip(part.iter()) {
                    *e += p;
                }
            }
            for i in 0..6 {
                assert!((out.get(i, f) - expect[i]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn single_identity_layer_predicts_mean() {
        let layer = FilterBankLayer::new(
            LayerSpec {
                f_in: 1,
                f_out: 1,
                taps_per_filter: 1,
                activation: Activation::Identity,
            },
            vec![1.0],
        )
        .unwrap();
        let model = VnnModel::new(vec![layer], 1).unwrap();
        let cov = test_cov(5, 4);
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let (pred, _) = vnn_forward(&model, &cov, &x).unwrap();
        assert!((pred - 3.0).abs() < 1e-14);
    }

    #[test]
    fn zero_model_with_relu_predicts_zero() {
        let specs = [
            LayerSpec {
                f_in: 1,
                f_out: 2,
                taps_per_filter: 2,
                activation: Activation::Relu,
            },
            LayerSpec {
                f_in: 2,
                f_out: 2,
                taps_per_filter: 2,
                activation: Activation::Relu,
            },
        ];
        let layers = specs
            .iter()
            .map(|s| FilterBankLayer::zeros(*s).unwrap())
            .collect();
        let model = VnnModel::new(layers, 1).unwrap();
        let cov = test_cov(4, 5);
        let (pred, _) = vnn_forward(&model, &cov, &[1.0, -2.0, 0.5, 3.0]).unwrap();
        assert_eq!(pred, 0.0);
    }

    #[test]
    fn two_layer_forward_matches_straight_line_oracle() {
        // Straight-line reimplementation: per-layer loops over
        // apply_filter with no power sharing, then the mean readout.
        let mut rng = SeededRng::new(71);
        let specs = [
            LayerSpec {
                f_in: 1,
                f_out: 3,
                taps_per_filter: 2,
                activation: Activation::Tanh,
            },
            LayerSpec {
                f_in: 3,
                f_out: 2,
                taps_per_filter: 2,
                activation: Activation::Relu,
            },
        ];
        let model = VnnModel::init_random(&specs, 8).unwrap();
        let cov = test_cov(10, 6);
        let x: Vec<f64> = (0..10).map(|_| rng.normal()).collect();

        let (pred, _) = vnn_forward(&model, &cov, &x).unwrap();

        let mut channels: Vec<Vec<f64>> = vec![x.clone()];
        for layer in model.layers() {
            let spec = layer.spec();
            let mut next = Vec::new();
            for f in 0..spec.f_out {
                let mut sum = vec![0.0; 10];
                for (g, ch) in channels.iter().enumerate() {
                    let part = apply_filter(&cov, &layer.filter_taps(f, g), ch).unwrap();
                    for (s, p) in sum.iter_mut().zip(part.iter()) {
                        *s += p;
                    }
                }
                for s in sum.iter_mut() {
                    *s = spec.activation.apply(*s);
                }
                next.push(sum);
            }
            channels = next;
        }
        let total: f64 = channels.iter().flat_map(|c| c.iter()).sum();
        let oracle = total / (10.0 * channels.len() as f64);
        assert!((pred - oracle).abs() <= 1e-9, "{pred} vs {oracle}");
    }

    #[test]
    fn batch_and_single_sample_agree() {
        let specs = [LayerSpec {
            f_in: 1,
            f_out: 4,
            taps_per_filter: 2,
            activation: Activation::Relu,
        }];
        let model = VnnModel::init_random(&specs, 12).unwrap();
        let cov = test_cov(6, 9);
        let mut rng = SeededRng::new(10);
        let batch = DenseMatrix::from_fn(6, 5, |_, _| rng.normal());
        let (preds, _) = vnn_forward_batch(&model, &cov, &batch).unwrap();
        for s in 0..5 {
            let (single, _) = vnn_forward(&model, &cov, &batch.column(s)).unwrap();
            assert_eq!(single.to_bits(), preds[s].to_bits());
        }
    }

    #[test]
    fn prediction_is_permutation_invariant() {
        let specs = [
            LayerSpec {
                f_in: 1,
                f_out: 3,
                taps_per_filter: 2,
                activation: Activation::Relu,
            },
            LayerSpec {
                f_in: 3,
                f_out: 3,
                taps_per_filter: 2,
                activation: Activation::Tanh,
            },
        ];
        let model = VnnModel::init_random(&specs, 21).unwrap();
        let cov = test_cov(8, 13);
        let mut rng = SeededRng::new(14);
        let x: Vec<f64> = (0..8).map(|_| rng.normal()).collect();
        let perm = rng.permutation(8);

        let (base, _) = vnn_forward(&model, &cov, &x).unwrap();
        let permuted_cov = CovarianceModel::new(cov.matrix().permute_symmetric(&perm)).unwrap();
        let px: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
        let (permuted, _) = vnn_forward(&model, &permuted_cov, &px).unwrap();
        assert!((base - permuted).abs() <= 1e-10);
    }
}
