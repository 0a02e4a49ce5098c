use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn check(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::shape("metric inputs", actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(Error::InvalidInput("metric of an empty series".into()));
    }
    Ok(())
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check(actual, predicted)?;
    let sse: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok((sse / actual.len() as f64).sqrt())
}

pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check(actual, predicted)?;
    let sae: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).abs()).sum();
    Ok(sae / actual.len() as f64)
}

pub fn r2(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check(actual, predicted)?;
    let m = crate::stats::mean(actual);
    let ss_tot: f64 = actual.iter().map(|a| (a - m) * (a - m)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Degenerate("r2 target".into()));
    }
    let ss_res: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub platform: String,
    pub phase: u8,
    pub n: usize,
    pub rmse: f64,
    pub mae: f64,
    pub r2: f64,
}

impl MetricsReport {
    pub fn compute(platform: &str, phase: u8, actual: &[f64], predicted: &[f64]) -> Result<Self> {
        Ok(MetricsReport {
            platform: platform.to_string(),
            phase,
            n: actual.len(),
            rmse: rmse(actual, predicted)?,
            mae: mae(actual, predicted)?,
            r2: r2(actual, predicted)?,
        })
    }
}
