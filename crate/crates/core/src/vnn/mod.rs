//! Covariance neural networks: stacks of filter-bank perceptrons over a
//! covariance shift operator, with a dimension-free mean readout.
//!
//! A layer maps `F_in` m-dimensional channels to `F_out` channels; output
//! channel `f` is `sigma(sum_g H_fg(C) x_in[g])` where each `H_fg` is a
//! polynomial covariance filter. Parameters are filter taps only, so a
//! trained model contains nothing sized by `m` and can be rebound to a
//! covariance of any dimension (`swap_covariance`).

mod backward;
mod blob;
mod forward;
mod train;

pub use backward::{vnn_backward, vnn_backward_batch, VnnGradients};
pub use blob::{deserialize, serialize, SCHEMA_VERSION};
pub use forward::{
    forward_predictions, perceptron_forward, vnn_forward, vnn_forward_batch, ForwardCache,
};
pub use train::{train, EpochStats, Optimizer, TrainConfig, TrainTrace};

use serde::{Deserialize, Serialize};

use crate::datagen::rng::SeededRng;
use crate::error::{Error, Result};
use crate::numcore::CovarianceModel;
use crate::spectral::{frequency_response, FilterTaps};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative at the pre-activation value. The ReLU subgradient at 0
    /// is taken as 0.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// Unweighted mean over every entry of every final-layer channel. The
    /// only readout that stays dimension-free in both `m` and the channel
    /// count, which covariance swapping requires.
    MeanAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub f_in: usize,
    pub f_out: usize,
    pub taps_per_filter: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.f_in == 0 || self.f_out == 0 || self.taps_per_filter == 0 {
            return Err(Error::InvalidParameter(
                "layer channel counts and tap count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn tap_count(&self) -> usize {
        self.f_in * self.f_out * self.taps_per_filter
    }
}

/// One perceptron layer: an `F_out x F_in` grid of tap vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBankLayer {
    spec: LayerSpec,
    taps: Vec<f64>,
}

impl FilterBankLayer {
    pub fn new(spec: LayerSpec, taps: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if taps.len() != spec.tap_count() {
            return Err(Error::DimMismatch {
                expected: spec.tap_count(),
                found: taps.len(),
                context: "layer tap tensor size",
            });
        }
        if !taps.iter().all(|t| t.is_finite()) {
            return Err(Error::NonFinite("layer taps"));
        }
        Ok(FilterBankLayer { spec, taps })
    }

    pub fn zeros(spec: LayerSpec) -> Result<Self> {
        spec.validate()?;
        let taps = vec![0.0; spec.tap_count()];
        Ok(FilterBankLayer { spec, taps })
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    #[inline]
    fn tap_index(&self, f: usize, g: usize, k: usize) -> usize {
        (f * self.spec.f_in + g) * self.spec.taps_per_filter + k
    }

    #[inline]
    pub fn tap(&self, f: usize, g: usize, k: usize) -> f64 {
        self.taps[self.tap_index(f, g, k)]
    }

    /// Taps of one filter, the `k`-contiguous slice for `(f, g)`.
    pub fn filter(&self, f: usize, g: usize) -> &[f64] {
        let start = self.tap_index(f, g, 0);
        &self.taps[start..start + self.spec.taps_per_filter]
    }

    pub fn filter_taps(&self, f: usize, g: usize) -> FilterTaps {
        FilterTaps::new(self.filter(f, g).to_vec()).expect("layer taps are valid")
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn taps_mut(&mut self) -> &mut [f64] {
        &mut self.taps
    }
}

/// Architecture shorthand: `layers` perceptrons of uniform width. The first
/// layer always takes a single input channel (the raw feature vector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VnnArch {
    pub layers: usize,
    pub channels: usize,
    pub taps_per_filter: usize,
    pub activation: Activation,
    /// Activation of the last layer; defaults to `activation`. An identity
    /// head keeps the mean readout unbounded on both sides, which matters
    /// for targets that are not nonnegative.
    #[serde(default)]
    pub final_activation: Option<Activation>,
}

impl VnnArch {
    pub fn layer_specs(&self) -> Result<Vec<LayerSpec>> {
        if self.layers == 0 {
            return Err(Error::InvalidParameter("need at least one layer".into()));
        }
        Ok((0..self.layers)
            .map(|l| LayerSpec {
                f_in: if l == 0 { 1 } else { self.channels },
                f_out: self.channels,
                taps_per_filter: self.taps_per_filter,
                activation: if l == self.layers - 1 {
                    self.final_activation.unwrap_or(self.activation)
                } else {
                    self.activation
                },
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VnnModel {
    layers: Vec<FilterBankLayer>,
    input_channels: usize,
    readout: Readout,
}

impl VnnModel {
    pub fn new(layers: Vec<FilterBankLayer>, input_channels: usize) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParameter(
                "model needs at least one layer".into(),
            ));
        }
        if layers[0].spec().f_in != input_channels {
            return Err(Error::DimMismatch {
                expected: input_channels,
                found: layers[0].spec().f_in,
                context: "first layer input channels",
            });
        }
        for pair in layers.windows(2) {
            if pair[0].spec().f_out != pair[1].spec().f_in {
                return Err(Error::DimMismatch {
                    expected: pair[0].spec().f_out,
                    found: pair[1].spec().f_in,
                    context: "adjacent layer channel chain",
                });
            }
        }
        Ok(VnnModel {
            layers,
            input_channels,
            readout: Readout::MeanAll,
        })
    }

    /// Fresh model with taps i.i.d. uniform on `[-a, a]`,
    /// `a = 1 / sqrt(f_in * T)` per layer, which keeps pre-activation
    /// variance O(1) for unit-scale inputs.
    pub fn init_random(specs: &[LayerSpec], seed: u64) -> Result<Self> {
        let mut rng = SeededRng::with_stream(seed, 0);
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            spec.validate()?;
            let a = 1.0 / ((spec.f_in * spec.taps_per_filter) as f64).sqrt();
            let taps: Vec<f64> = (0..spec.tap_count())
                .map(|_| rng.uniform_in(-a, a))
                .collect();
            layers.push(FilterBankLayer::new(*spec, taps)?);
        }
        let input_channels = specs[0].f_in;
        VnnModel::new(layers, input_channels)
    }

    pub fn from_arch(arch: &VnnArch, seed: u64) -> Result<Self> {
        Self::init_random(&arch.layer_specs()?, seed)
    }

    pub fn layers(&self) -> &[FilterBankLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [FilterBankLayer] {
        &mut self.layers
    }

    pub fn input_channels(&self) -> usize {
        self.input_channels
    }

    pub fn readout(&self) -> Readout {
        self.readout
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Largest channel count appearing in any layer.
    pub fn max_width(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.spec().f_in.max(l.spec().f_out))
            .max()
            .unwrap_or(0)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.spec().tap_count()).sum()
    }

    /// The model holds filter taps only; nothing in it is sized by the data
    /// dimension, which is what makes covariance swapping sound.
    pub fn is_dimension_free(&self) -> bool {
        true
    }
}

/// A model paired with the covariance it currently operates on.
#[derive(Debug, Clone)]
pub struct BoundVnn {
    model: VnnModel,
    cov: CovarianceModel,
}

impl BoundVnn {
    /// Binds a model to a shift operator. There is no constraint tying the
    /// model to the covariance dimension.
    pub fn bind(model: VnnModel, cov: CovarianceModel) -> Self {
        BoundVnn { model, cov }
    }

    pub fn model(&self) -> &VnnModel {
        &self.model
    }

    pub fn cov(&self) -> &CovarianceModel {
        &self.cov
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let (pred, _) = vnn_forward(&self.model, &self.cov, x)?;
        Ok(pred)
    }

    /// Predictions for samples stored as the columns of an m-by-B matrix.
    pub fn predict_columns(&self, columns: &crate::numcore::DenseMatrix) -> Result<Vec<f64>> {
        forward_predictions(&self.model, &self.cov, columns)
    }

    /// Predictions for every sample of a dataset.
    pub fn predict_dataset(&self, data: &crate::numcore::Dataset) -> Result<Vec<f64>> {
        self.predict_columns(&data.features_transposed())
    }
}

/// Rebinds the model to a new shift operator: same taps, new covariance,
/// possibly of a different dimension.
pub fn swap_covariance(bound: &BoundVnn, new_cov: CovarianceModel) -> BoundVnn {
    BoundVnn {
        model: bound.model.clone(),
        cov: new_cov,
    }
}

/// Divides every filter's taps by its maximum response magnitude over
/// `spectrum`, so each filter satisfies `max |h(lambda)| <= 1` afterwards
/// (exactly 1 for filters with a nonzero response). All-zero filters are
/// left untouched.
pub fn rescale_filter_responses(model: &VnnModel, spectrum: &[f64]) -> VnnModel {
    let mut out = model.clone();
    for layer in out.layers_mut() {
        let spec = *layer.spec();
        for f in 0..spec.f_out {
            for g in 0..spec.f_in {
                let taps = layer.filter_taps(f, g);
                let max_resp = spectrum
                    .iter()
                    .map(|&l| frequency_response(&taps, l).abs())
                    .fold(0.0_f64, f64::max);
                if max_resp > 0.0 {
                    let start = (f * spec.f_in + g) * spec.taps_per_filter;
                    for t in &mut layer.taps_mut()[start..start + spec.taps_per_filter] {
                        *t /= max_resp;
                    }
                }
            }
        }
    }
    out
}
