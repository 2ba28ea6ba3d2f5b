//! Versioned JSON model blobs. Tap values survive the round trip
//! bit-exactly: serde_json prints the shortest decimal that parses back to
//! the same f64.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vnn::{Activation, FilterBankLayer, LayerSpec, Readout, VnnModel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelBlob {
    schema_version: u32,
    input_channels: usize,
    readout: Readout,
    layers: Vec<LayerBlob>,
}

#[derive(Serialize, Deserialize)]
struct LayerBlob {
    f_in: usize,
    f_out: usize,
    activation: Activation,
    /// Indexed `[f_out][f_in][k]`.
    taps: Vec<Vec<Vec<f64>>>,
}

pub fn serialize(model: &VnnModel) -> String {
    let layers = model
        .layers()
        .iter()
        .map(|layer| {
            let spec = layer.spec();
            LayerBlob {
                f_in: spec.f_in,
                f_out: spec.f_out,
                activation: spec.activation,
                taps: (0..spec.f_out)
                    .map(|f| {
                        (0..spec.f_in)
                            .map(|g| layer.filter(f, g).to_vec())
                            .collect()
                    })
                    .collect(),
            }
        })
        .collect();
    let blob = ModelBlob {
        schema_version: SCHEMA_VERSION,
        input_channels: model.input_channels(),
        readout: model.readout(),
        layers,
    };
    serde_json::to_string_pretty(&blob).expect("model blob serialization cannot fail")
}

pub fn deserialize(text: &str) -> Result<VnnModel> {
    let blob: ModelBlob =
        serde_json::from_str(text).map_err(|e| Error::MalformedBlob(e.to_string()))?;
    if blob.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: blob.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    if blob.layers.is_empty() {
        return Err(Error::MalformedBlob("model has no layers".into()));
    }
    let mut layers = Vec::with_capacity(blob.layers.len());
    for (l, lb) in blob.layers.iter().enumerate() {
        if lb.taps.len() != lb.f_out || lb.taps.iter().any(|row| row.len() != lb.f_in) {
            return Err(Error::MalformedBlob(format!(
                "layer {l} tap tensor does not match (f_out, f_in) = ({}, {})",
                lb.f_out, lb.f_in
            )));
        }
        let t = lb
            .taps
            .first()
            .and_then(|row| row.first())
            .map(|f| f.len())
            .unwrap_or(0);
        if t == 0 || lb.taps.iter().flatten().any(|f| f.len() != t) {
            return Err(Error::MalformedBlob(format!(
                "layer {l} filters must all have the same nonzero tap count"
            )));
        }
        let spec = LayerSpec {
            f_in: lb.f_in,
            f_out: lb.f_out,
            taps_per_filter: t,
            activation: lb.activation,
        };
        let flat: Vec<f64> = lb.taps.iter().flatten().flatten().copied().collect();
        layers.push(FilterBankLayer::new(spec, flat)?);
    }
    VnnModel::new(layers, blob.input_channels)
}
