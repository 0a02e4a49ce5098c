//! Stacked LSTM regressor with backpropagation through time.

pub mod activation;
pub mod adam;
pub mod cell;
pub mod model;
pub mod network;
pub mod train;

pub use adam::{clip_global_norm, AdamConfig, AdamState};
pub use model::SavedModel;
pub use network::{loss_mse, loss_mse_grad, ForwardCache, LstmNetwork, Mode, NetworkConfig};
pub use train::{train, train_arrays, HyperParams, TrainReport, CLIP_NORM};
