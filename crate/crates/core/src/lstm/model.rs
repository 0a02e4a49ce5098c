//! Versioned JSON model files.

use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::network::{LstmNetwork, NetworkConfig};
use super::train::HyperParams;
use crate::preprocess::Scaler;
use crate::{Error, Result};

pub const MODEL_FORMAT: &str = "foodcast-lstm";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Tensor {
    name: String,
    shape: (usize, usize),
    data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    config: NetworkConfig,
    #[serde(default)]
    hyperparams: Option<HyperParams>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    x_scaler: Option<Scaler>,
    #[serde(default)]
    y_scaler: Option<Scaler>,
    tensors: Vec<Tensor>,
}

/// A network plus everything needed to apply it to raw features.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub network: LstmNetwork,
    pub hyperparams: Option<HyperParams>,
    pub seed: Option<u64>,
    pub x_scaler: Option<Scaler>,
    pub y_scaler: Option<Scaler>,
}

impl SavedModel {
    pub fn new(network: LstmNetwork) -> Self {
        SavedModel {
            network,
            hyperparams: None,
            seed: None,
            x_scaler: None,
            y_scaler: None,
        }
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        let shapes = self.network.config.param_shapes();
        let tensors = shapes
            .into_iter()
            .zip(&self.network.params)
            .map(|((name, shape), p)| Tensor {
                name,
                shape,
                data: p.iter().copied().collect(),
            })
            .collect();
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.network.config.clone(),
            hyperparams: self.hyperparams.clone(),
            seed: self.seed,
            x_scaler: self.x_scaler.clone(),
            y_scaler: self.y_scaler.clone(),
            tensors,
        };
        serde_json::to_writer_pretty(w, &file)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(r)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Model(format!("unexpected format `{}`", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported version {}", file.version)));
        }
        file.config.validate()?;
        let shapes = file.config.param_shapes();
        if shapes.len() != file.tensors.len() {
            return Err(Error::Model(format!(
                "expected {} tensors, found {}",
                shapes.len(),
                file.tensors.len()
            )));
        }
        let mut params = Vec::with_capacity(shapes.len());
        for ((name, shape), t) in shapes.into_iter().zip(file.tensors) {
            if t.name != name || t.shape != shape {
                return Err(Error::Model(format!(
                    "tensor `{}` {:?} does not match `{name}` {shape:?}",
                    t.name, t.shape
                )));
            }
            let p = Array2::from_shape_vec(shape, t.data)
                .map_err(|e| Error::Model(format!("tensor `{name}`: {e}")))?;
            params.push(p);
        }
        Ok(SavedModel {
            network: LstmNetwork {
                config: file.config,
                params,
            },
            hyperparams: file.hyperparams,
            seed: file.seed,
            x_scaler: file.x_scaler,
            y_scaler: file.y_scaler,
        })
    }
}
