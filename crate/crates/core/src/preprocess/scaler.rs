use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-column standardization `(x - mean) / sd` with population sd.
/// Columns listed as passthrough are left untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Which columns are standardized; the rest keep mean 0, sd 1.
    pub scaled: Vec<bool>,
    /// Label of the segment the statistics were fitted on.
    pub segment: String,
}

/// Fits on every column.
pub fn fit_scaler(matrix: ArrayView2<f64>, names: &[String], segment: &str) -> Result<Scaler> {
    fit_scaler_masked(matrix, names, &vec![true; names.len()], segment)
}

/// Fits on the columns where `scaled` is true.
pub fn fit_scaler_masked(
    matrix: ArrayView2<f64>,
    names: &[String],
    scaled: &[bool],
    segment: &str,
) -> Result<Scaler> {
    let cols = matrix.ncols();
    if names.len() != cols || scaled.len() != cols {
        return Err(Error::shape("fit_scaler", cols, names.len().min(scaled.len())));
    }
    if matrix.nrows() == 0 {
        return Err(Error::InsufficientData {
            what: format!("scaler fit on {segment}"),
            needed: 1,
            available: 0,
        });
    }
    let mut mean = vec![0.0; cols];
    let mut sd = vec![1.0; cols];
    for (j, col) in matrix.axis_iter(Axis(1)).enumerate() {
        if !scaled[j] {
            continue;
        }
        let xs: Vec<f64> = col.iter().copied().collect();
        let m = crate::stats::mean(&xs);
        let s = crate::stats::std_dev(&xs);
        if !(s > 1e-12 * m.abs().max(1.0)) {
            return Err(Error::ZeroVariance(names[j].clone()));
        }
        mean[j] = m;
        sd[j] = s;
    }
    Ok(Scaler {
        names: names.to_vec(),
        mean,
        sd,
        scaled: scaled.to_vec(),
        segment: segment.to_string(),
    })
}

impl Scaler {
    fn check(&self, cols: usize) -> Result<()> {
        if cols != self.mean.len() {
            return Err(Error::shape("scaler", self.mean.len(), cols));
        }
        Ok(())
    }

    pub fn transform(&self, matrix: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(matrix.ncols())?;
        let mut out = matrix.to_owned();
        for mut row in out.rows_mut() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (*x - self.mean[j]) / self.sd[j];
            }
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, matrix: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(matrix.ncols())?;
        let mut out = matrix.to_owned();
        for mut row in out.rows_mut() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = *x * self.sd[j] + self.mean[j];
            }
        }
        Ok(out)
    }

    pub fn transform_value(&self, col: usize, x: f64) -> f64 {
        (x - self.mean[col]) / self.sd[col]
    }

    pub fn inverse_value(&self, col: usize, z: f64) -> f64 {
        z * self.sd[col] + self.mean[col]
    }
}
