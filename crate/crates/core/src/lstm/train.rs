use std::time::Instant;

use ndarray::{Array2, Array3, ArrayView2, ArrayView3, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{clip_global_norm, AdamConfig, AdamState};
use super::network::{loss_mse, loss_mse_grad, LstmNetwork, Mode, NetworkConfig};
use crate::preprocess::WindowedDataset;
use crate::rng::stream;
use crate::{Error, Result};

pub const CLIP_NORM: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub epochs: usize,
    pub units: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub layers: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            epochs: 100,
            units: 64,
            batch_size: 32,
            dropout: 0.2,
            learning_rate: 0.005,
            layers: 1,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if self.units == 0 || self.batch_size == 0 {
            return Err(Error::config("units/batch_size", "must be > 0"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        self.network(1, 1).validate()
    }

    pub fn network(&self, input_dim: usize, output_dim: usize) -> NetworkConfig {
        NetworkConfig {
            input_dim,
            layer_sizes: vec![self.units; self.layers],
            output_dim,
            dropout: self.dropout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean batch loss per epoch.
    pub train_loss: Vec<f64>,
    /// Validation loss after each epoch, empty without a validation set.
    pub val_loss: Vec<f64>,
    pub seconds: f64,
    pub param_digest: String,
}

impl TrainReport {
    pub fn final_val_loss(&self) -> Option<f64> {
        self.val_loss.last().copied()
    }
}

fn gather(x: &ArrayView3<f64>, y: &ArrayView2<f64>, idx: &[usize]) -> (Array3<f64>, Array2<f64>) {
    (x.select(Axis(0), idx), y.select(Axis(0), idx))
}

/// Fits a fresh network on `(x, y)` with shuffled mini-batches.
pub fn train_arrays(
    x: ArrayView3<f64>,
    y: ArrayView2<f64>,
    val: Option<(ArrayView3<f64>, ArrayView2<f64>)>,
    hp: &HyperParams,
    seed: u64,
) -> Result<(LstmNetwork, TrainReport)> {
    hp.validate()?;
    let n = x.dim().0;
    if n == 0 {
        return Err(Error::InsufficientData {
            what: "training windows".into(),
            needed: 1,
            available: 0,
        });
    }
    if y.nrows() != n {
        return Err(Error::shape("training targets", n, y.nrows()));
    }
    let start = Instant::now();
    let mut init_rng = stream(seed, "lstm.init");
    let mut shuffle_rng = stream(seed, "lstm.shuffle");
    let mut dropout_rng = stream(seed, "lstm.dropout");
    let mut net = LstmNetwork::new(hp.network(x.dim().2, y.ncols()), &mut init_rng)?;
    let mut adam = AdamState::new(AdamConfig::new(hp.learning_rate), &net.params);
    let mut order: Vec<usize> = (0..n).collect();
    let mut train_loss = Vec::with_capacity(hp.epochs);
    let mut val_loss = Vec::new();
    for epoch in 0..hp.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        let mut batches = 0;
        for (b, idx) in order.chunks(hp.batch_size).enumerate() {
            let (bx, by) = gather(&x, &y, idx);
            let (pred, cache) = net.forward(bx.view(), Mode::Train(&mut dropout_rng))?;
            let loss = loss_mse(&pred, &by)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, batch: b });
            }
            let mut grads = net.backward(&cache, &loss_mse_grad(&pred, &by));
            let norm = clip_global_norm(&mut grads, CLIP_NORM);
            if !norm.is_finite() {
                return Err(Error::Diverged { epoch, batch: b });
            }
            adam.update(&mut net.params, &grads);
            total += loss;
            batches += 1;
        }
        train_loss.push(total / batches as f64);
        if let Some((vx, vy)) = &val {
            if vx.dim().0 > 0 {
                let pred = net.predict(vx.view())?;
                let l = loss_mse(&pred, &vy.to_owned())?;
                if !l.is_finite() {
                    return Err(Error::Diverged { epoch, batch: batches });
                }
                val_loss.push(l);
            }
        }
        log::debug!("epoch {epoch}: train {:.5}", train_loss[epoch]);
    }
    let param_digest = net.snapshot_id();
    Ok((
        net,
        TrainReport {
            train_loss,
            val_loss,
            seconds: start.elapsed().as_secs_f64(),
            param_digest,
        },
    ))
}

pub fn train(
    train: &WindowedDataset,
    val: Option<&WindowedDataset>,
    hp: &HyperParams,
    seed: u64,
) -> Result<(LstmNetwork, TrainReport)> {
    train_arrays(
        train.x.view(),
        train.y.view(),
        val.map(|v| (v.x.view(), v.y.view())),
        hp,
        seed,
    )
}
