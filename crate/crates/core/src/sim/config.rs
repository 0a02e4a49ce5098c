use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::calendar::{default_holidays, CalendarEvent};
use super::types::{DemandPeriod, Platform, Season, TimeSlot};
use crate::{Error, Result};

pub const SLOTS_PER_DAY: usize = 5;

/// Inclusive `[lo, hi]` interval for a uniformly drawn factor.
pub type Interval = [f64; 2];

/// Every knob of the simulation. All fields have defaults, so a config file
/// only needs to list what it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub start_date: NaiveDate,
    /// Last simulated day (inclusive).
    pub end_date: NaiveDate,
    pub slots_per_day: usize,
    pub noise_mean: f64,
    pub noise_sd: f64,
    /// Orders lost per minute of own lead time.
    pub gamma: f64,
    /// Orders lost per minute of lead-time gap to the rival.
    pub delta: f64,
    /// Orders gained per currency unit the rival is more expensive.
    pub tau: f64,
    pub z_score: f64,
    /// Trailing window used for the `supplier_inventory` column.
    pub supplier_window_days: usize,
    pub zomato: PlatformParams,
    pub swiggy: PlatformParams,
    pub trend: TrendParams,
    pub cyclical: CyclicalParams,
    pub multipliers: MultiplierTable,
    pub calendar: EventCalendar,
    pub lead_time: LeadTimeModel,
    pub prices: PriceModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformParams {
    /// Baseline demand in orders.
    pub alpha: f64,
    /// Orders lost per currency unit of own price.
    pub beta: f64,
    /// Multiplier on the baseline for each weekday, Monday first.
    #[serde(default = "flat_week")]
    pub weekday_factors: [f64; 7],
}

fn flat_week() -> [f64; 7] {
    [1.0; 7]
}

/// Slow movement of the baseline demand: linear growth, an annual cycle and
/// a platform-specific random drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendParams {
    /// Relative growth of the baseline per 365 days.
    pub growth_per_year: f64,
    /// Relative amplitude of the annual cycle.
    pub annual_amplitude: f64,
    /// Day of year (1..=366) where the annual cycle peaks.
    pub annual_peak_day: u32,
    /// Stationary sd of each platform's log-scale baseline drift. The drift
    /// is an AR(1) process, independent between platforms.
    pub drift_sd: f64,
    /// Day-to-day autocorrelation of the drift.
    pub drift_persistence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CyclicalParams {
    pub amplitude: f64,
    /// Slots per half sine period.
    pub period: f64,
    /// Phase shift in radians.
    pub phase_shift: f64,
    pub baseline: f64,
    /// Slot that takes cycle index 0, where the sine argument is closest to
    /// its maximum.
    pub peak_slot: TimeSlot,
}

/// Uniform ranges of the external demand multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiplierTable {
    pub peak: Interval,
    pub off_peak: Interval,
    pub late_night: Interval,
    pub clear: Interval,
    pub mild: Interval,
    pub extreme: Interval,
    /// Event-day range; split into equal thirds for Low / Medium / High.
    pub holiday: Interval,
    pub regular: Interval,
    pub mismatched: Interval,
    pub general: Interval,
    pub loyal: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherProbs {
    pub clear: f64,
    pub mild: f64,
    pub extreme: f64,
}

impl WeatherProbs {
    pub fn as_array(&self) -> [f64; 3] {
        [self.clear, self.mild, self.extreme]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentProbs {
    pub mismatched: f64,
    pub general: f64,
    pub loyal: f64,
}

impl SegmentProbs {
    pub fn as_array(&self) -> [f64; 3] {
        [self.mismatched, self.general, self.loyal]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventCalendar {
    /// Explicit event list. When absent the built-in Indian holiday calendar
    /// for the simulated range is used.
    pub holidays: Option<Vec<CalendarEvent>>,
    pub winter: WeatherProbs,
    pub summer: WeatherProbs,
    pub monsoon: WeatherProbs,
    pub post_monsoon: WeatherProbs,
    /// Probability that a day keeps the previous day's weather instead of a
    /// fresh draw from its season's distribution.
    pub weather_persistence: f64,
    pub segments: SegmentProbs,
    /// Probability that a slot keeps the customer segment it had the day
    /// before.
    pub segment_persistence: f64,
}

impl EventCalendar {
    pub fn weather_probs(&self, season: Season) -> &WeatherProbs {
        match season {
            Season::Winter => &self.winter,
            Season::Summer => &self.summer,
            Season::Monsoon => &self.monsoon,
            Season::PostMonsoon => &self.post_monsoon,
        }
    }

    pub fn resolved_holidays(&self, start: NaiveDate, end: NaiveDate) -> Vec<CalendarEvent> {
        match &self.holidays {
            Some(list) => list.clone(),
            None => default_holidays(start, end),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeliveryBand {
    /// Inclusive lower edge of the band; the band ends at the next band's edge.
    pub from_km: f64,
    pub min_minutes: f64,
    pub max_minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeadTimeModel {
    pub prep_log_mu: f64,
    pub prep_log_sigma: f64,
    pub distance_min_km: f64,
    pub distance_max_km: f64,
    pub bands: Vec<DeliveryBand>,
    /// Orders per minute.
    pub arrival_peak: Interval,
    pub arrival_standard: Interval,
    pub arrival_late_night: Interval,
    /// Minutes of arrivals observed per slot to measure the realized rate.
    pub arrival_window_minutes: f64,
}

impl LeadTimeModel {
    pub fn arrival_range(&self, period: DemandPeriod) -> Interval {
        match period {
            DemandPeriod::Peak => self.arrival_peak,
            DemandPeriod::OffPeak => self.arrival_standard,
            DemandPeriod::LateNight => self.arrival_late_night,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformFees {
    pub platform_fee: f64,
    pub base_delivery_fee: f64,
    pub per_km_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceModel {
    pub base_prices: BTreeMap<String, f64>,
    /// Relative sampling weight per food category.
    pub category_weights: BTreeMap<String, f64>,
    pub gst_multiplier: f64,
    pub small_order_threshold: f64,
    pub small_order_fee: f64,
    pub zomato: PlatformFees,
    pub swiggy: PlatformFees,
}

impl PriceModel {
    pub fn fees(&self, platform: Platform) -> &PlatformFees {
        match platform {
            Platform::Zomato => &self.zomato,
            Platform::Swiggy => &self.swiggy,
        }
    }

    pub fn categories(&self) -> Vec<String> {
        self.base_prices.keys().cloned().collect()
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 2023,
            start_date: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
            end_date: NaiveDate::from_ymd_opt(2025, 1, 1).unwrap(),
            slots_per_day: SLOTS_PER_DAY,
            noise_mean: 0.0,
            noise_sd: 20.0,
            gamma: 0.5,
            delta: 0.5,
            tau: 0.5,
            z_score: 1.96,
            supplier_window_days: 7,
            zomato: PlatformParams {
                alpha: 10_000.0,
                beta: 1.5,
                weekday_factors: [0.85, 0.78, 0.92, 1.0, 1.15, 1.38, 1.3],
            },
            swiggy: PlatformParams {
                alpha: 12_000.0,
                beta: 1.5,
                weekday_factors: [1.0, 0.92, 1.22, 0.85, 1.0, 1.15, 1.45],
            },
            trend: TrendParams::default(),
            cyclical: CyclicalParams::default(),
            multipliers: MultiplierTable::default(),
            calendar: EventCalendar::default(),
            lead_time: LeadTimeModel::default(),
            prices: PriceModel::default(),
        }
    }
}

impl Default for TrendParams {
    fn default() -> Self {
        TrendParams {
            growth_per_year: 0.0,
            annual_amplitude: 0.35,
            annual_peak_day: 20,
            drift_sd: 0.0,
            drift_persistence: 0.0,
        }
    }
}

impl Default for CyclicalParams {
    fn default() -> Self {
        CyclicalParams {
            amplitude: 0.475,
            period: 5.0,
            phase_shift: 1.5,
            baseline: 0.525,
            peak_slot: TimeSlot::Evening,
        }
    }
}

impl Default for MultiplierTable {
    fn default() -> Self {
        MultiplierTable {
            peak: [1.2, 1.5],
            off_peak: [1.0, 1.2],
            late_night: [0.8, 1.0],
            clear: [1.0, 1.0],
            mild: [1.1, 1.3],
            extreme: [1.4, 1.6],
            holiday: [1.2, 1.5],
            regular: [1.0, 1.0],
            mismatched: [0.7, 0.9],
            general: [1.0, 1.0],
            loyal: [1.1, 1.2],
        }
    }
}

impl Default for EventCalendar {
    fn default() -> Self {
        EventCalendar {
            holidays: None,
            winter: WeatherProbs {
                clear: 0.55,
                mild: 0.35,
                extreme: 0.10,
            },
            summer: WeatherProbs {
                clear: 0.45,
                mild: 0.30,
                extreme: 0.25,
            },
            monsoon: WeatherProbs {
                clear: 0.20,
                mild: 0.40,
                extreme: 0.40,
            },
            post_monsoon: WeatherProbs {
                clear: 0.60,
                mild: 0.30,
                extreme: 0.10,
            },
            weather_persistence: 0.9,
            segments: SegmentProbs {
                mismatched: 0.2,
                general: 0.5,
                loyal: 0.3,
            },
            segment_persistence: 0.95,
        }
    }
}

impl Default for LeadTimeModel {
    fn default() -> Self {
        LeadTimeModel {
            prep_log_mu: 3.35,
            prep_log_sigma: 0.32,
            distance_min_km: 1.0,
            distance_max_km: 15.0,
            bands: vec![
                DeliveryBand {
                    from_km: 1.0,
                    min_minutes: 15.0,
                    max_minutes: 20.0,
                },
                DeliveryBand {
                    from_km: 5.0,
                    min_minutes: 30.0,
                    max_minutes: 35.0,
                },
                DeliveryBand {
                    from_km: 10.0,
                    min_minutes: 40.0,
                    max_minutes: 45.0,
                },
            ],
            arrival_peak: [3.0, 10.0],
            arrival_standard: [2.0, 6.0],
            arrival_late_night: [1.0, 3.0],
            arrival_window_minutes: 30.0,
        }
    }
}

impl Default for PriceModel {
    fn default() -> Self {
        let base: [(&str, f64); 8] = [
            ("Beverages", 80.0),
            ("Biryani", 250.0),
            ("Burger", 180.0),
            ("Chinese", 200.0),
            ("Desserts", 90.0),
            ("NorthIndian", 220.0),
            ("Pizza", 300.0),
            ("SouthIndian", 120.0),
        ];
        PriceModel {
            base_prices: base.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            category_weights: base.iter().map(|(k, _)| (k.to_string(), 1.0)).collect(),
            gst_multiplier: 1.05,
            small_order_threshold: 100.0,
            small_order_fee: 25.0,
            zomato: PlatformFees {
                platform_fee: 10.0,
                base_delivery_fee: 20.0,
                per_km_rate: 6.0,
            },
            swiggy: PlatformFees {
                platform_fee: 10.0,
                base_delivery_fee: 20.0,
                per_km_rate: 6.0,
            },
        }
    }
}

fn check(cond: bool, field: &str, message: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::config(field, message))
    }
}

fn check_interval(iv: Interval, field: &str) -> Result<()> {
    check(
        iv[0].is_finite() && iv[1].is_finite() && iv[0] <= iv[1],
        field,
        format!("interval [{}, {}] must be finite with lo <= hi", iv[0], iv[1]),
    )
}

fn check_probs(ps: &[f64], field: &str) -> Result<()> {
    check(
        ps.iter().all(|p| *p >= 0.0 && p.is_finite()),
        field,
        "probabilities must be non-negative",
    )?;
    let total: f64 = ps.iter().sum();
    check(
        (total - 1.0).abs() <= 1e-9,
        field,
        format!("probabilities sum to {total}, expected 1"),
    )
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn platform(&self, platform: Platform) -> &PlatformParams {
        match platform {
            Platform::Zomato => &self.zomato,
            Platform::Swiggy => &self.swiggy,
        }
    }

    /// Number of simulated days (both ends inclusive).
    pub fn num_days(&self) -> usize {
        (self.end_date - self.start_date).num_days().max(-1) as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        // A single-day run has start == end; the range is inclusive.
        check(
            self.start_date <= self.end_date,
            "end_date",
            format!("{} is before start_date {}", self.end_date, self.start_date),
        )?;
        check(
            self.slots_per_day == SLOTS_PER_DAY,
            "slots_per_day",
            "the simulator models exactly 5 slots per day",
        )?;
        check(self.noise_sd >= 0.0, "noise_sd", "must be >= 0")?;
        check(self.noise_mean.is_finite(), "noise_mean", "must be finite")?;
        check(self.z_score > 0.0, "z_score", "must be > 0")?;
        for (name, v) in [("gamma", self.gamma), ("delta", self.delta), ("tau", self.tau)] {
            check(v >= 0.0 && v.is_finite(), name, "sensitivity must be >= 0")?;
        }
        check(self.supplier_window_days >= 2, "supplier_window_days", "must be >= 2")?;
        for (name, p) in [("zomato", &self.zomato), ("swiggy", &self.swiggy)] {
            check(p.alpha > 0.0, &format!("{name}.alpha"), "must be > 0")?;
            check(p.beta >= 0.0, &format!("{name}.beta"), "must be >= 0")?;
            check(
                p.weekday_factors.iter().all(|w| *w > 0.0 && w.is_finite()),
                &format!("{name}.weekday_factors"),
                "must all be > 0",
            )?;
        }
        check(
            self.trend.growth_per_year > -1.0,
            "trend.growth_per_year",
            "must be > -1",
        )?;
        check(
            (0.0..1.0).contains(&self.trend.annual_amplitude),
            "trend.annual_amplitude",
            "must be in [0, 1)",
        )?;
        check(
            self.trend.drift_sd >= 0.0 && self.trend.drift_sd < 1.0,
            "trend.drift_sd",
            "must be in [0, 1)",
        )?;
        check(
            (0.0..1.0).contains(&self.trend.drift_persistence),
            "trend.drift_persistence",
            "must be in [0, 1)",
        )?;
        check(
            (1..=366).contains(&self.trend.annual_peak_day),
            "trend.annual_peak_day",
            "must be in 1..=366",
        )?;

        let c = &self.cyclical;
        check(c.period > 0.0, "cyclical.period", "must be > 0")?;
        check(c.amplitude >= 0.0, "cyclical.amplitude", "must be >= 0")?;
        check(
            c.baseline - c.amplitude >= 0.0,
            "cyclical.baseline",
            "baseline - amplitude must be >= 0 so the cycle never goes negative",
        )?;

        let m = &self.multipliers;
        for (name, iv) in [
            ("peak", m.peak),
            ("off_peak", m.off_peak),
            ("late_night", m.late_night),
            ("clear", m.clear),
            ("mild", m.mild),
            ("extreme", m.extreme),
            ("holiday", m.holiday),
            ("regular", m.regular),
            ("mismatched", m.mismatched),
            ("general", m.general),
            ("loyal", m.loyal),
        ] {
            let field = format!("multipliers.{name}");
            check_interval(iv, &field)?;
            check(iv[0] > 0.0, &field, "multipliers must be > 0")?;
        }

        let cal = &self.calendar;
        for season in Season::ALL {
            check_probs(
                &cal.weather_probs(*season).as_array(),
                &format!("calendar.{}", season.label().to_lowercase()),
            )?;
        }
        check_probs(&cal.segments.as_array(), "calendar.segments")?;
        for (name, v) in [
            ("calendar.weather_persistence", cal.weather_persistence),
            ("calendar.segment_persistence", cal.segment_persistence),
        ] {
            check((0.0..=1.0).contains(&v), name, "must be in [0, 1]")?;
        }
        if let Some(list) = &cal.holidays {
            for ev in list {
                check(
                    ev.date >= self.start_date && ev.date <= self.end_date,
                    "calendar.holidays",
                    format!("{} ({}) lies outside the simulated range", ev.date, ev.name),
                )?;
                check(
                    ev.importance != super::types::EventImportance::None,
                    "calendar.holidays",
                    format!("{} ({}) needs an importance label", ev.date, ev.name),
                )?;
            }
        }

        let lt = &self.lead_time;
        check(lt.prep_log_sigma > 0.0, "lead_time.prep_log_sigma", "must be > 0")?;
        check(lt.prep_log_mu.is_finite(), "lead_time.prep_log_mu", "must be finite")?;
        check(
            lt.distance_min_km >= 0.0 && lt.distance_min_km < lt.distance_max_km,
            "lead_time.distance_min_km",
            "need 0 <= distance_min_km < distance_max_km",
        )?;
        check(!lt.bands.is_empty(), "lead_time.bands", "at least one band")?;
        check(
            lt.bands[0].from_km == lt.distance_min_km,
            "lead_time.bands",
            "the first band must start at distance_min_km",
        )?;
        for (i, band) in lt.bands.iter().enumerate() {
            check(
                band.min_minutes > 0.0 && band.min_minutes <= band.max_minutes,
                "lead_time.bands",
                format!("band {i}: need 0 < min_minutes <= max_minutes"),
            )?;
            if let Some(next) = lt.bands.get(i + 1) {
                check(
                    next.from_km > band.from_km && next.from_km < lt.distance_max_km,
                    "lead_time.bands",
                    format!("band {}: edges must increase inside the distance range", i + 1),
                )?;
            }
        }
        for (name, iv) in [
            ("arrival_peak", lt.arrival_peak),
            ("arrival_standard", lt.arrival_standard),
            ("arrival_late_night", lt.arrival_late_night),
        ] {
            let field = format!("lead_time.{name}");
            check_interval(iv, &field)?;
            check(iv[0] > 0.0, &field, "arrival rates must be > 0")?;
        }
        check(
            lt.arrival_window_minutes > 0.0,
            "lead_time.arrival_window_minutes",
            "must be > 0",
        )?;

        let pm = &self.prices;
        check(!pm.base_prices.is_empty(), "prices.base_prices", "at least one category")?;
        check(pm.gst_multiplier >= 1.0, "prices.gst_multiplier", "must be >= 1")?;
        check(
            pm.small_order_threshold >= 0.0 && pm.small_order_fee >= 0.0,
            "prices.small_order_fee",
            "monetary values must be >= 0",
        )?;
        for (name, fees) in [("zomato", &pm.zomato), ("swiggy", &pm.swiggy)] {
            check(
                fees.platform_fee >= 0.0 && fees.base_delivery_fee >= 0.0 && fees.per_km_rate >= 0.0,
                &format!("prices.{name}"),
                "monetary values must be >= 0",
            )?;
        }
        for (cat, price) in &pm.base_prices {
            check(*price >= 0.0, "prices.base_prices", format!("{cat}: must be >= 0"))?;
        }
        check(
            pm.category_weights.keys().eq(pm.base_prices.keys()),
            "prices.category_weights",
            "must list exactly the categories of base_prices",
        )?;
        check(
            pm.category_weights.values().all(|w| *w >= 0.0)
                && pm.category_weights.values().sum::<f64>() > 0.0,
            "prices.category_weights",
            "weights must be non-negative with a positive total",
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.num_days(), 732);
    }

    #[test]
    fn toml_round_trip_and_partial_override() {
        let cfg = SimConfig::default();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(SimConfig::from_toml_str(&text).unwrap(), cfg);

        let partial = "seed = 9\nnoise_sd = 5.0\n[zomato]\nalpha = 9000.0\nbeta = 1.0\n";
        let over = SimConfig::from_toml_str(partial).unwrap();
        assert_eq!(over.seed, 9);
        assert_eq!(over.zomato.alpha, 9000.0);
        assert_eq!(over.swiggy, cfg.swiggy);
    }

    #[test]
    fn field_level_errors() {
        let mut cfg = SimConfig::default();
        cfg.end_date = NaiveDate::from_ymd_opt(2022, 1, 1).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "end_date"));

        let mut cfg = SimConfig::default();
        cfg.calendar.monsoon.clear = 0.5;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("calendar.monsoon"), "{err}");

        let mut cfg = SimConfig::default();
        cfg.cyclical.amplitude = 0.6;
        assert!(cfg.validate().is_err());

        let bad = "nonsense_key = 3\n";
        assert!(SimConfig::from_toml_str(bad).is_err());
    }
}
