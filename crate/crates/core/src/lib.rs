//! Two-platform food-delivery demand laboratory.
//!
//! The crate covers the whole chain from synthetic demand to inventory
//! decisions:
//!
//! * [`sim`] generates a slot-level demand dataset with a seeded
//!   discrete-event simulation (five slots per day, two platforms).
//! * [`preprocess`] encodes, standardizes, windows and splits that dataset
//!   into supervised tensors for the two forecasting phases.
//! * [`lstm`] is a small stacked LSTM with full backpropagation through time
//!   and Adam.
//! * [`tuner`] runs the exhaustive hyperparameter grid.
//! * [`inventory`] turns historical statistics or forecasts into newsvendor
//!   order-up-to levels.
//! * [`analytics`] holds forecast metrics, exploratory statistics and the
//!   bullwhip ratios.
//! * [`experiment`] wires the stages together for one phase.

pub mod analytics;
pub mod error;
pub mod experiment;
pub mod inventory;
pub mod lstm;
pub mod preprocess;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod tuner;

pub use error::{Error, Result};
pub use experiment::{Phase, PhaseOutcome};
pub use lstm::{HyperParams, LstmNetwork, NetworkConfig, TrainReport};
pub use sim::{Dataset, DemandRecord, Platform, SimConfig, TimeSlot};
