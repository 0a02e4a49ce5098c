//! From the slot-level dataset to standardized supervised windows.

mod encode;
mod features;
mod scaler;
mod split;
mod window;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

pub use encode::{one_hot_encode, ordinal_encode_event};
pub use features::{daily_average, FeatureSchema};
pub use scaler::{fit_scaler, fit_scaler_masked, Scaler};
pub use split::{chronological_split, SplitBounds, SplitSpec};
pub use window::{window_phase1, window_phase2, WindowedDataset, PHASE2_WINDOW};

use crate::sim::{Dataset, Platform, SLOTS_PER_DAY};
use crate::{Error, Result};

/// Forecasting granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    /// Slot-level: one day of slots predicts the next day's five slots.
    #[serde(rename = "1")]
    Intraday,
    /// Day-level: six daily averages predict the next.
    #[serde(rename = "2")]
    Daily,
}

impl Phase {
    pub const ALL: [Phase; 2] = [Phase::Intraday, Phase::Daily];

    pub fn number(self) -> u8 {
        match self {
            Phase::Intraday => 1,
            Phase::Daily => 2,
        }
    }

    pub fn outputs(self) -> usize {
        match self {
            Phase::Intraday => SLOTS_PER_DAY,
            Phase::Daily => 1,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(Phase::Intraday),
            "2" => Ok(Phase::Daily),
            other => Err(Error::UnknownCategory {
                field: "phase",
                value: other.to_string(),
            }),
        }
    }
}

/// Standardized windows for one platform and phase, plus what is needed to
/// map predictions back to orders.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub phase: Phase,
    pub platform: Platform,
    pub schema: FeatureSchema,
    pub bounds: SplitBounds,
    pub x_scaler: Scaler,
    pub y_scaler: Scaler,
    pub train: WindowedDataset,
    pub validation: WindowedDataset,
    pub test: WindowedDataset,
}

impl PreparedData {
    /// Standardized outputs back in orders.
    pub fn unscale_targets(&self, y: &Array2<f64>) -> Array2<f64> {
        y.mapv(|v| self.y_scaler.inverse_value(0, v))
    }
}

/// Encodes, splits by day, fits the scalers on the training days only and
/// windows each segment separately so no window crosses a boundary.
pub fn prepare(
    dataset: &Dataset,
    platform: Platform,
    phase: Phase,
    phase1_days: usize,
    split: &SplitSpec,
) -> Result<PreparedData> {
    let schema = match phase {
        Phase::Intraday => FeatureSchema::from_dataset(platform, dataset),
        Phase::Daily => FeatureSchema::compact(platform),
    };
    let names = schema.column_names();
    let (rows, per_day) = match phase {
        Phase::Intraday => (schema.slot_matrix(dataset)?, SLOTS_PER_DAY),
        Phase::Daily => (schema.daily_matrix(dataset)?, 1),
    };
    let targets: Vec<f64> = rows.column(0).to_vec();
    let bounds = chronological_split(dataset.num_days(), split)?;

    let train_rows = rows.slice(ndarray::s![..bounds.train.end * per_day, ..]);
    let x_scaler = fit_scaler_masked(train_rows, &names, &schema.scaled_mask(), "train")?;
    let train_targets = Array2::from_shape_vec(
        (bounds.train.end * per_day, 1),
        targets[..bounds.train.end * per_day].to_vec(),
    )
    .expect("column shape");
    let y_scaler = fit_scaler(train_targets.view(), &[schema.target.clone()], "train")?;

    let scaled_rows = x_scaler.transform(rows.view())?;
    let scaled_targets: Vec<f64> = targets
        .iter()
        .map(|t| y_scaler.transform_value(0, *t))
        .collect();

    let mut segments = Vec::with_capacity(3);
    for (label, range) in bounds.segments() {
        let (a, b) = (range.start * per_day, range.end * per_day);
        let seg_rows = scaled_rows.slice(ndarray::s![a..b, ..]);
        let seg_targets = &scaled_targets[a..b];
        let w = match phase {
            Phase::Intraday => window_phase1(seg_rows, seg_targets, &names, phase1_days)?,
            Phase::Daily => window_phase2(seg_rows, seg_targets, &names)?,
        };
        if w.is_empty() {
            return Err(Error::InsufficientData {
                what: format!("phase-{phase} windows in the {label} segment"),
                needed: 1,
                available: 0,
            });
        }
        segments.push(w.offset_days(range.start));
    }
    let test = segments.pop().unwrap();
    let validation = segments.pop().unwrap();
    let train = segments.pop().unwrap();
    Ok(PreparedData {
        phase,
        platform,
        schema,
        bounds,
        x_scaler,
        y_scaler,
        train,
        validation,
        test,
    })
}

/// Actual demand (orders) of the samples in `w`, read from the dataset.
pub fn raw_targets(dataset: &Dataset, platform: Platform, w: &WindowedDataset) -> Array2<f64> {
    let mut y = Array2::zeros(w.y.raw_dim());
    for (i, &d) in w.target_days.iter().enumerate() {
        let day = dataset.day(d);
        if w.outputs() == 1 {
            y[[i, 0]] = day.iter().map(|r| r.demand(platform)).sum::<f64>() / SLOTS_PER_DAY as f64;
        } else {
            for (j, r) in day.iter().enumerate() {
                y[[i, j]] = r.demand(platform);
            }
        }
    }
    y
}

/// Mean over samples of each feature, used by tests and diagnostics.
pub fn feature_means(w: &WindowedDataset) -> Vec<f64> {
    w.x.mean_axis(Axis(0))
        .and_then(|m| m.mean_axis(Axis(0)))
        .map(|m| m.to_vec())
        .unwrap_or_default()
}
