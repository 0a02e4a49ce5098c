use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.70,
            validation_fraction: 0.15,
            test_fraction: 0.15,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let f = [self.train_fraction, self.validation_fraction, self.test_fraction];
        if f.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
            return Err(Error::config("split", "every fraction must lie in (0, 1)"));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("split", "fractions must sum to 1"));
        }
        Ok(())
    }
}

/// Day ranges of the three contiguous segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitBounds {
    pub train: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

impl SplitBounds {
    pub fn segments(&self) -> [(&'static str, Range<usize>); 3] {
        [
            ("train", self.train.clone()),
            ("validation", self.validation.clone()),
            ("test", self.test.clone()),
        ]
    }
}

/// Splits `num_days` into floor(train) / floor(validation) / remainder days.
pub fn chronological_split(num_days: usize, spec: &SplitSpec) -> Result<SplitBounds> {
    spec.validate()?;
    // The small epsilon keeps exact products such as 100 * 0.7 from
    // flooring to 69.
    let train = (num_days as f64 * spec.train_fraction + 1e-9).floor() as usize;
    let val = (num_days as f64 * spec.validation_fraction + 1e-9).floor() as usize;
    if train == 0 || val == 0 || train + val >= num_days {
        return Err(Error::InsufficientData {
            what: "chronological split".into(),
            needed: 3,
            available: num_days,
        });
    }
    Ok(SplitBounds {
        train: 0..train,
        validation: train..train + val,
        test: train + val..num_days,
    })
}
