//! Newsvendor order-up-to levels for a restaurant selling on both platforms.
//!
//! Historical variants estimate demand mean and spread from a trailing
//! window of realized demand. Forecast variants centre on the LSTM forecast
//! and take the spread of recent forecast errors.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::sim::{Dataset, TimeSlot, SLOTS_PER_DAY};
use crate::stats;
use crate::{Error, Result};

/// Standard deviation of the sum of two correlated demands.
pub fn combined_sd(sigma_z: f64, sigma_s: f64, rho: f64) -> f64 {
    let v = sigma_z * sigma_z + sigma_s * sigma_s + 2.0 * rho * sigma_z * sigma_s;
    v.max(0.0).sqrt()
}

/// Order-up-to level `mu + z * sigma`, floored at zero.
pub fn q_star(mu: f64, sigma: f64, z: f64) -> f64 {
    (mu + z * sigma).max(0.0)
}

pub fn estimate_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape("estimate_correlation", a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData {
            what: "correlation".into(),
            needed: 2,
            available: a.len(),
        });
    }
    stats::pearson(a, b).ok_or_else(|| Error::Degenerate("correlation input series".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Slot,
    Daily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatsSource {
    Historical,
    Forecast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandStats {
    pub mean: f64,
    pub sd: f64,
    pub granularity: Granularity,
    pub source: StatsSource,
    pub window_days: usize,
}

/// Mean and spread of total demand over a window of paired observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats {
    pub mean: f64,
    pub sd: f64,
    pub sd_z: f64,
    pub sd_s: f64,
    /// Correlation used in the combination; 0 when either side is constant.
    pub rho: f64,
}

/// Total-demand statistics from paired platform observations. The spread
/// combines the two platform spreads through their window correlation.
pub fn pair_stats(z: &[f64], s: &[f64]) -> PairStats {
    let rho = stats::pearson(z, s).unwrap_or(0.0);
    pair_stats_with_rho(z, s, rho)
}

fn pair_stats_with_rho(z: &[f64], s: &[f64], rho: f64) -> PairStats {
    let (sd_z, sd_s) = (stats::std_dev(z), stats::std_dev(s));
    PairStats {
        mean: stats::mean(z) + stats::mean(s),
        sd: combined_sd(sd_z, sd_s, rho),
        sd_z,
        sd_s,
        rho,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewsvendorParams {
    pub z_score: f64,
    /// Fixed platform correlation; `None` estimates it in each window.
    pub correlation: Option<f64>,
    /// Trailing window in days for historical statistics.
    pub window_days: usize,
    /// Number of most recent forecast errors behind the forecast plan's
    /// sigma, whatever the granularity.
    pub error_window: usize,
}

impl Default for NewsvendorParams {
    fn default() -> Self {
        NewsvendorParams {
            z_score: 1.96,
            correlation: None,
            window_days: 7,
            error_window: 35,
        }
    }
}

impl NewsvendorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.z_score > 0.0) {
            return Err(Error::config("z_score", "must be > 0"));
        }
        if let Some(rho) = self.correlation {
            if !(-1.0..=1.0).contains(&rho) {
                return Err(Error::config("correlation", "must lie in [-1, 1]"));
            }
        }
        if self.window_days < 2 {
            return Err(Error::config("window_days", "must be >= 2"));
        }
        if self.error_window < 2 {
            return Err(Error::config("error_window", "must be >= 2"));
        }
        Ok(())
    }
}

/// Trailing statistics of total demand for `slot` over the `window_days`
/// days before `day`.
pub fn slot_stats(
    history: &Dataset,
    day: usize,
    slot: TimeSlot,
    window_days: usize,
    correlation: Option<f64>,
) -> Result<DemandStats> {
    if window_days < 2 {
        return Err(Error::config("window_days", "must be >= 2"));
    }
    if day < window_days || day > history.num_days() {
        return Err(Error::InsufficientData {
            what: format!("trailing window before day {day}"),
            needed: window_days,
            available: day.min(history.num_days()),
        });
    }
    let s = slot.index();
    let (z, w): (Vec<f64>, Vec<f64>) = (day - window_days..day)
        .map(|d| {
            let r = &history.day(d)[s];
            (r.demand_zomato, r.demand_swiggy)
        })
        .unzip();
    let ps = match correlation {
        Some(rho) => pair_stats_with_rho(&z, &w, rho),
        None => pair_stats(&z, &w),
    };
    Ok(DemandStats {
        mean: ps.mean,
        sd: ps.sd,
        granularity: Granularity::Slot,
        source: StatsSource::Historical,
        window_days,
    })
}

/// Daily statistics from the five slot statistics: the mean of the slot
/// means and the mean of the slot standard deviations.
pub fn daily_stats(slots: &[DemandStats]) -> Result<DemandStats> {
    if slots.len() != SLOTS_PER_DAY {
        return Err(Error::shape("daily_stats", SLOTS_PER_DAY, slots.len()));
    }
    let n = SLOTS_PER_DAY as f64;
    Ok(DemandStats {
        mean: slots.iter().map(|s| s.mean).sum::<f64>() / n,
        sd: slots.iter().map(|s| s.sd).sum::<f64>() / n,
        granularity: Granularity::Daily,
        source: slots[0].source,
        window_days: slots[0].window_days,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlanVariant {
    #[serde(rename = "5-time")]
    FiveTime,
    #[serde(rename = "daily")]
    Daily,
    #[serde(rename = "5-time-lstm")]
    FiveTimeLstm,
    #[serde(rename = "daily-lstm")]
    DailyLstm,
}

impl PlanVariant {
    pub fn label(self) -> &'static str {
        match self {
            PlanVariant::FiveTime => "5-time",
            PlanVariant::Daily => "daily",
            PlanVariant::FiveTimeLstm => "5-time-lstm",
            PlanVariant::DailyLstm => "daily-lstm",
        }
    }

    pub fn granularity(self) -> Granularity {
        match self {
            PlanVariant::FiveTime | PlanVariant::FiveTimeLstm => Granularity::Slot,
            PlanVariant::Daily | PlanVariant::DailyLstm => Granularity::Daily,
        }
    }
}

impl fmt::Display for PlanVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PlanVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            PlanVariant::FiveTime,
            PlanVariant::Daily,
            PlanVariant::FiveTimeLstm,
            PlanVariant::DailyLstm,
        ]
        .into_iter()
        .find(|v| v.label() == s)
        .ok_or_else(|| Error::UnknownCategory {
            field: "variant",
            value: s.to_string(),
        })
    }
}

/// One review point of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanPoint {
    /// Day index into the source dataset.
    pub day: usize,
    pub date: NaiveDate,
    /// `None` for daily plans.
    pub slot: Option<TimeSlot>,
    pub mu: f64,
    pub sigma: f64,
    pub q_star: f64,
}

impl PlanPoint {
    pub fn timestamp(&self) -> String {
        match self.slot {
            Some(slot) => format!("{} {}", self.date, slot),
            None => self.date.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventoryPlan {
    pub variant: PlanVariant,
    pub points: Vec<PlanPoint>,
}

impl InventoryPlan {
    pub fn q_series(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.q_star).collect()
    }

    /// Points whose day index lies in `days`.
    pub fn restrict(&self, days: std::ops::Range<usize>) -> InventoryPlan {
        InventoryPlan {
            variant: self.variant,
            points: self
                .points
                .iter()
                .filter(|p| days.contains(&p.day))
                .cloned()
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["timestamp", "variant", "mu", "sigma", "q_star"])?;
        for p in &self.points {
            w.write_record([
                p.timestamp(),
                self.variant.label().to_string(),
                crate::sim::round6(p.mu).to_string(),
                crate::sim::round6(p.sigma).to_string(),
                crate::sim::round6(p.q_star).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Historical plan over every day that has a full trailing window.
pub fn plan_from_history(
    dataset: &Dataset,
    variant: PlanVariant,
    params: &NewsvendorParams,
) -> Result<InventoryPlan> {
    params.validate()?;
    if !matches!(variant, PlanVariant::FiveTime | PlanVariant::Daily) {
        return Err(Error::InvalidInput(format!(
            "{variant} is a forecast variant; use plan_from_forecast"
        )));
    }
    let days = dataset.num_days();
    if days <= params.window_days {
        return Err(Error::InsufficientData {
            what: format!("{variant} plan history"),
            needed: params.window_days + 1,
            available: days,
        });
    }
    let z = params.z_score;
    let mut points = Vec::new();
    for day in params.window_days..days {
        let date = dataset.day(day)[0].date;
        let slot_stats: Vec<DemandStats> = TimeSlot::ALL
            .iter()
            .map(|s| slot_stats(dataset, day, *s, params.window_days, params.correlation))
            .collect::<Result<_>>()?;
        match variant {
            PlanVariant::FiveTime => {
                for (st, slot) in slot_stats.iter().zip(TimeSlot::ALL) {
                    points.push(PlanPoint {
                        day,
                        date,
                        slot: Some(*slot),
                        mu: st.mean,
                        sigma: st.sd,
                        q_star: q_star(st.mean, st.sd, z),
                    });
                }
            }
            _ => {
                let st = daily_stats(&slot_stats)?;
                points.push(PlanPoint {
                    day,
                    date,
                    slot: None,
                    mu: st.mean,
                    sigma: st.sd,
                    q_star: q_star(st.mean, st.sd, z),
                });
            }
        }
    }
    Ok(InventoryPlan { variant, points })
}

/// A forecast with the demand it later turned out to be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub day: usize,
    pub date: NaiveDate,
    pub slot: Option<TimeSlot>,
    pub forecast: f64,
    pub actual: f64,
}

/// Forecasts of total demand at slot or daily granularity, in time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSeries {
    pub granularity: Granularity,
    pub points: Vec<ForecastPoint>,
}

impl ForecastSeries {
    fn check_order(&self) -> Result<()> {
        let key = |p: &ForecastPoint| (p.day, p.slot.map_or(0, TimeSlot::index));
        for (i, w) in self.points.windows(2).enumerate() {
            if key(&w[1]) <= key(&w[0]) {
                return Err(Error::InvalidInput(format!(
                    "forecast index misaligned at point {}: {} does not follow {}",
                    i + 1,
                    w[1].date,
                    w[0].date
                )));
            }
        }
        let slot_ok = |p: &ForecastPoint| match self.granularity {
            Granularity::Slot => p.slot.is_some(),
            Granularity::Daily => p.slot.is_none(),
        };
        if let Some(p) = self.points.iter().find(|p| !slot_ok(p)) {
            return Err(Error::InvalidInput(format!(
                "forecast for {} does not match the series granularity",
                p.date
            )));
        }
        Ok(())
    }

    /// Daily series: each day's forecast and actual are the means of its
    /// five slot values.
    pub fn to_daily(&self) -> Result<ForecastSeries> {
        self.check_order()?;
        if self.granularity == Granularity::Daily {
            return Ok(self.clone());
        }
        let mut points = Vec::new();
        for chunk in self.points.chunk_by(|a, b| a.day == b.day) {
            if chunk.len() != SLOTS_PER_DAY {
                return Err(Error::InvalidInput(format!(
                    "forecast for {} covers {} of {SLOTS_PER_DAY} slots",
                    chunk[0].date,
                    chunk.len()
                )));
            }
            let n = SLOTS_PER_DAY as f64;
            points.push(ForecastPoint {
                day: chunk[0].day,
                date: chunk[0].date,
                slot: None,
                forecast: chunk.iter().map(|p| p.forecast).sum::<f64>() / n,
                actual: chunk.iter().map(|p| p.actual).sum::<f64>() / n,
            });
        }
        Ok(ForecastSeries {
            granularity: Granularity::Daily,
            points,
        })
    }
}

/// Forecast-driven plan: `Q* = forecast + z * sd(recent forecast errors)`.
///
/// Sigma is the sd of the `error_window` most recent errors, so slot and
/// daily plans estimate it from the same number of points. Points before two
/// errors are available are skipped.
pub fn plan_from_forecast(
    forecasts: &ForecastSeries,
    variant: PlanVariant,
    params: &NewsvendorParams,
) -> Result<InventoryPlan> {
    params.validate()?;
    forecasts.check_order()?;
    let series = match variant {
        PlanVariant::FiveTimeLstm => {
            if forecasts.granularity != Granularity::Slot {
                return Err(Error::InvalidInput(
                    "5-time-lstm needs slot-level forecasts".into(),
                ));
            }
            forecasts.clone()
        }
        PlanVariant::DailyLstm => forecasts.to_daily()?,
        other => {
            return Err(Error::InvalidInput(format!(
                "{other} is a historical variant; use plan_from_history"
            )))
        }
    };
    let window = params.error_window;
    let errors: Vec<f64> = series.points.iter().map(|p| p.actual - p.forecast).collect();
    let mut points = Vec::new();
    for (i, p) in series.points.iter().enumerate() {
        if i < 2 {
            continue;
        }
        let recent = &errors[i.saturating_sub(window)..i];
        let sigma = stats::std_dev(recent);
        points.push(PlanPoint {
            day: p.day,
            date: p.date,
            slot: p.slot,
            mu: p.forecast,
            sigma,
            q_star: q_star(p.forecast, sigma, params.z_score),
        });
    }
    Ok(InventoryPlan { variant, points })
}
