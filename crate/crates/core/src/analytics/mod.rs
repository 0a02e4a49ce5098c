//! Forecast metrics, exploratory statistics and bullwhip ratios.

pub mod bullwhip;
pub mod eda;
pub mod metrics;

pub use bullwhip::{
    bullwhip, bullwhip_segment, BullwhipEntry, BullwhipReport, Scope, Segment,
};
pub use eda::{eda, eda_series, EdaReport, EdaSeries, Histogram};
pub use metrics::{mae, r2, rmse, MetricsReport};
