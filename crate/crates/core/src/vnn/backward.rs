//! Analytic backpropagation through the filter banks.
//!
//! The key identity is `d(sum_k h_k C^k x)/dh_k = C^k x`: the cached power
//! stacks from the forward pass are exactly the per-tap sensitivities.
//! Gradients flow backwards through a layer via the transposed filters,
//! which for a symmetric shift operator are the same polynomials.

use crate::error::Result;
use crate::numcore::{dot, CovarianceModel, DenseMatrix};
use crate::vnn::forward::ForwardCache;
use crate::vnn::{Readout, VnnModel};

/// Per-layer tap gradients, flattened in the same `[f][g][k]` order as
/// `FilterBankLayer::taps`.
pub type VnnGradients = Vec<Vec<f64>>;

/// Gradients of a scalar loss with respect to every tap, given the
/// per-sample derivative of the loss at the readout.
pub fn vnn_backward_batch(
    model: &VnnModel,
    cov: &CovarianceModel,
    cache: &ForwardCache,
    loss_grads: &[f64],
) -> Result<VnnGradients> {
    cache.check_model(model, cov)?;
    if loss_grads.len() != cache.batch {
        return Err(crate::error::Error::DimMismatch {
            expected: cache.batch,
            found: loss_grads.len(),
            context: "per-sample loss gradients",
        });
    }
    let m = cov.dim();
    let last = model.layers().last().expect("model has layers");

    // Readout gradient: every entry of every final channel contributes
    // 1/(m * F_last) of the prediction.
    let mut d_act: Vec<DenseMatrix> = match model.readout() {
        Readout::MeanAll => {
            let denom = (m * last.spec().f_out) as f64;
            let template = DenseMatrix::from_fn(m, cache.batch, |_, s| loss_grads[s] / denom);
            vec![template; last.spec().f_out]
        }
    };

    let mut grads: VnnGradients = model
        .layers()
        .iter()
        .map(|l| vec![0.0; l.spec().tap_count()])
        .collect();

    for (l, layer) in model.layers().iter().enumerate().rev() {
        let spec = layer.spec();
        let layer_cache = &cache.layers[l];

        // Through the activation.
        let mut d_pre = Vec::with_capacity(spec.f_out);
        for (f, da) in d_act.iter().enumerate() {
            let pre = &layer_cache.pre_activations[f];
            let mut dp = da.clone();
            for (v, &p) in dp.as_mut_slice().iter_mut().zip(pre.as_slice().iter()) {
                *v *= spec.activation.derivative(p);
            }
            d_pre.push(dp);
        }

        // Tap gradients: inner products with the cached powers.
        for f in 0..spec.f_out {
            let dp = &d_pre[f];
            for g in 0..spec.f_in {
                for (k, power) in layer_cache.powers[g].iter().enumerate() {
                    let idx = (f * spec.f_in + g) * spec.taps_per_filter + k;
                    grads[l][idx] = dot(dp.as_slice(), power.as_slice());
                }
            }
        }

        // Gradient w.r.t. the layer inputs, except below the first layer.
        if l > 0 {
            let mut d_inputs = vec![DenseMatrix::zeros(m, cache.batch); spec.f_in];
            for (f, dp) in d_pre.iter().enumerate() {
                // Powers of the symmetric shift applied to the upstream
                // gradient; shared across all input channels of this f.
                let mut stack = Vec::with_capacity(spec.taps_per_filter);
                stack.push(dp.clone());
                for k in 1..spec.taps_per_filter {
                    stack.push(cov.matrix().matmul(&stack[k - 1])?);
                }
                for (g, d_input) in d_inputs.iter_mut().enumerate() {
                    for (k, q) in stack.iter().enumerate() {
                        d_input.add_scaled(layer.tap(f, g, k), q);
                    }
                }
            }
            d_act = d_inputs;
        }
    }

    Ok(grads)
}

/// Single-sample variant: `loss_grad` is the derivative of the loss with
/// respect to the scalar prediction.
pub fn vnn_backward(
    model: &VnnModel,
    cov: &CovarianceModel,
    cache: &ForwardCache,
    loss_grad: f64,
) -> Result<VnnGradients> {
    vnn_backward_batch(model, cov, cache, &[loss_grad])
}
