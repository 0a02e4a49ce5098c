use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::sim::{Dataset, Platform, SLOTS_PER_DAY};
use crate::stats::{mean, normal_quantile, std_dev, variance};
use crate::{Error, Result};

pub const ROLLING_WINDOW: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins, `ceil(log2 n) + 1` of them.
    pub fn sturges(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("histogram of an empty series".into()));
        }
        let bins = (values.len() as f64).log2().ceil() as usize + 1;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi == lo {
            return Ok(Histogram {
                edges: vec![lo, hi],
                counts: vec![values.len()],
            });
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + width * i as f64 })
            .collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Ok(Histogram { edges, counts })
    }
}

/// Exploratory series for one demand scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaSeries {
    pub scope: String,
    /// Mean over the day's slots.
    pub daily_average: Vec<f64>,
    pub cumulative_mean: Vec<f64>,
    /// Population variance of the trailing 7 days; entry `k` covers days
    /// `k..k+7`.
    pub rolling_variance: Vec<f64>,
    pub histogram: Histogram,
    /// `(theoretical, sample)` quantile pairs against a normal with the
    /// sample mean and sd.
    pub qq: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaReport {
    pub dates: Vec<NaiveDate>,
    pub series: Vec<EdaSeries>,
}

pub fn eda_series(scope: &str, daily_average: Vec<f64>) -> Result<EdaSeries> {
    let n = daily_average.len();
    if n < ROLLING_WINDOW {
        return Err(Error::InsufficientData {
            what: "exploratory analysis days".into(),
            needed: ROLLING_WINDOW,
            available: n,
        });
    }
    let mut cumulative_mean = Vec::with_capacity(n);
    let mut sum = 0.0;
    for (i, v) in daily_average.iter().enumerate() {
        sum += v;
        cumulative_mean.push(sum / (i + 1) as f64);
    }
    let rolling_variance = daily_average.windows(ROLLING_WINDOW).map(variance).collect();
    let histogram = Histogram::sturges(&daily_average)?;
    let (m, sd) = (mean(&daily_average), std_dev(&daily_average));
    let mut sorted = daily_average.clone();
    sorted.sort_by(f64::total_cmp);
    let qq = sorted
        .iter()
        .enumerate()
        .map(|(i, &s)| (m + sd * normal_quantile((i as f64 + 0.5) / n as f64), s))
        .collect();
    Ok(EdaSeries {
        scope: scope.to_string(),
        daily_average,
        cumulative_mean,
        rolling_variance,
        histogram,
        qq,
    })
}

/// Per-platform and total daily-average demand analysis.
pub fn eda(dataset: &Dataset) -> Result<EdaReport> {
    let daily = |f: &dyn Fn(&crate::DemandRecord) -> f64| -> Vec<f64> {
        dataset
            .days()
            .map(|day| day.iter().map(f).sum::<f64>() / SLOTS_PER_DAY as f64)
            .collect()
    };
    let mut series = Vec::new();
    for &p in Platform::ALL {
        series.push(eda_series(p.label(), daily(&|r| r.demand(p)))?);
    }
    series.push(eda_series("Overall", daily(&|r| r.total_demand()))?);
    Ok(EdaReport {
        dates: dataset.dates(),
        series,
    })
}

impl EdaReport {
    /// `date,scope,daily_average,cumulative_mean,rolling_variance`; rolling
    /// variance is blank until a full window exists.
    pub fn write_series_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["date", "scope", "daily_average", "cumulative_mean", "rolling_variance"])?;
        for s in &self.series {
            for (i, date) in self.dates.iter().enumerate() {
                let rv = if i + 1 >= ROLLING_WINDOW {
                    s.rolling_variance[i + 1 - ROLLING_WINDOW].to_string()
                } else {
                    String::new()
                };
                out.write_record([
                    date.to_string(),
                    s.scope.clone(),
                    s.daily_average[i].to_string(),
                    s.cumulative_mean[i].to_string(),
                    rv,
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_histogram_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["scope", "lower", "upper", "count"])?;
        for s in &self.series {
            let h = &s.histogram;
            for (k, c) in h.counts.iter().enumerate() {
                out.write_record([
                    s.scope.clone(),
                    h.edges[k].to_string(),
                    h.edges[k + 1].to_string(),
                    c.to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_qq_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["scope", "theoretical", "sample"])?;
        for s in &self.series {
            for (t, v) in &s.qq {
                out.write_record([s.scope.clone(), t.to_string(), v.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_demand() {
        let s = eda_series("c", vec![4.0; 10]).unwrap();
        assert!(s.cumulative_mean.iter().all(|v| *v == 4.0));
        assert!(s.rolling_variance.iter().all(|v| *v == 0.0));
        assert_eq!(s.histogram.counts, vec![10]);
    }

    #[test]
    fn running_mean_and_window_arithmetic() {
        let s = eda_series("x", vec![1.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(&s.cumulative_mean[..3], &[1.0, 1.5, 2.0]);
        let s = eda_series("x", vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 7.0]).unwrap();
        assert_eq!(s.rolling_variance, vec![6.0]);
        assert!(eda_series("x", vec![1.0; 6]).is_err());
    }

    #[test]
    fn rolling_window_is_local() {
        let base: Vec<f64> = (0..20).map(|i| ((i * 7) % 11) as f64).collect();
        let mut bumped = base.clone();
        bumped[5] += 100.0;
        let a = eda_series("a", base).unwrap().rolling_variance;
        let b = eda_series("b", bumped).unwrap().rolling_variance;
        // Entry k covers days k..k+7, so day 5 only touches entries 0..=5.
        for k in 6..a.len() {
            assert_eq!(a[k], b[k]);
        }
        assert_ne!(a[5], b[5]);
    }

    #[test]
    fn histogram_counts_everything() {
        let v: Vec<f64> = (0..100).map(|i| (i as f64).sqrt()).collect();
        let h = Histogram::sturges(&v).unwrap();
        assert_eq!(h.counts.len(), 8);
        assert_eq!(h.edges.len(), 9);
        assert_eq!(h.counts.iter().sum::<usize>(), 100);
        assert_eq!(*h.edges.last().unwrap(), 99f64.sqrt());
    }

    #[test]
    fn qq_is_monotone() {
        let v: Vec<f64> = (0..30).map(|i| ((i * 13) % 17) as f64).collect();
        let s = eda_series("q", v).unwrap();
        assert!(s.qq.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
    }
}
