//! Seeded discrete-event simulation of slot-level demand on two competing
//! food-delivery platforms.

mod calendar;
mod config;
mod dataset;
mod demand;
mod leadtime;
mod types;

use std::collections::HashMap;

use chrono::{Datelike, Duration};
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub use calendar::{default_holidays, CalendarEvent};
pub use config::{
    CyclicalParams, DeliveryBand, EventCalendar, Interval, LeadTimeModel, MultiplierTable,
    PlatformFees, PlatformParams, PriceModel, SegmentProbs, SimConfig, TrendParams, WeatherProbs,
    SLOTS_PER_DAY,
};
pub use dataset::{round6, Dataset, DemandRecord, COLUMNS};
pub use demand::{
    amplitude_from_volumes, baseline_demand, cycle_index, cyclical_factor, demand,
    demand_unclamped, multiplier_ranges, price, seasonal_multiplier, seasonal_multiplier_at,
    slot_cycle_factor, Quote,
};
pub use leadtime::{
    delivery_band, lead_time, lognormal_moments, lognormal_params_from_moments,
    mean_delivery_time, observed_arrival_rate, sample_delivery_time, sample_interarrival,
    sample_prep_time,
};
pub use types::{
    CustomerSegment, DemandPeriod, EventImportance, ExternalContext, Platform, Season, TimeSlot,
    Weather,
};

use crate::inventory;
use crate::rng::{self, StreamRng};
use crate::Result;

/// Index drawn from a discrete distribution given a uniform `u` in [0, 1).
fn pick(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w / total;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Output of a simulation run plus its diagnostics.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub dataset: Dataset,
    /// Platform-slots whose demand formula went negative and was clamped.
    pub clamp_events: usize,
}

struct Streams {
    weather: StreamRng,
    segments: StreamRng,
    categories: StreamRng,
    arrivals: StreamRng,
    distances: StreamRng,
    prep: StreamRng,
    delivery: StreamRng,
    noise: StreamRng,
    multipliers: StreamRng,
    drift: StreamRng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Streams {
            weather: rng::stream(seed, "sim.weather"),
            segments: rng::stream(seed, "sim.segments"),
            categories: rng::stream(seed, "sim.categories"),
            arrivals: rng::stream(seed, "sim.arrivals"),
            distances: rng::stream(seed, "sim.distances"),
            prep: rng::stream(seed, "sim.prep"),
            delivery: rng::stream(seed, "sim.delivery"),
            noise: rng::stream(seed, "sim.noise"),
            multipliers: rng::stream(seed, "sim.multipliers"),
            drift: rng::stream(seed, "sim.drift"),
        }
    }
}

pub fn run_simulation(cfg: &SimConfig) -> Result<Dataset> {
    simulate(cfg).map(|run| run.dataset)
}

/// Runs the simulation day by day, slot by slot.
pub fn simulate(cfg: &SimConfig) -> Result<SimRun> {
    cfg.validate()?;
    let mut st = Streams::new(cfg.seed);
    let events: HashMap<_, _> = cfg
        .calendar
        .resolved_holidays(cfg.start_date, cfg.end_date)
        .into_iter()
        .map(|e| (e.date, e))
        .collect();
    let categories = cfg.prices.categories();
    let category_weights: Vec<f64> = categories
        .iter()
        .map(|c| cfg.prices.category_weights[c])
        .collect();
    let noise = Normal::new(cfg.noise_mean, cfg.noise_sd).expect("validated noise_sd");
    let lt = &cfg.lead_time;

    let days = cfg.num_days();
    let mut records = Vec::with_capacity(days * SLOTS_PER_DAY);
    let mut history: [Vec<(f64, f64)>; SLOTS_PER_DAY] = Default::default();
    let mut clamp_events = 0;
    let mut weather = Weather::Clear;
    let mut segments = [CustomerSegment::General; SLOTS_PER_DAY];
    let mut drift = [0.0; 2];
    let (phi, drift_sd) = (cfg.trend.drift_persistence, cfg.trend.drift_sd);
    let innovation = Normal::new(0.0, drift_sd * (1.0 - phi * phi).sqrt()).expect("validated drift");

    for d in 0..days {
        let date = cfg.start_date + Duration::days(d as i64);
        let season = Season::of(date);
        let keep = d > 0 && st.weather.random_bool(cfg.calendar.weather_persistence);
        let u: f64 = st.weather.random();
        if !keep {
            weather = Weather::ALL[pick(&cfg.calendar.weather_probs(season).as_array(), u)];
        }
        let event = events.get(&date);
        let importance = event.map_or(EventImportance::None, |e| e.importance);
        let public_holiday = event.is_some_and(|e| e.public_holiday);
        for x in &mut drift {
            let shock: f64 = innovation.sample(&mut st.drift);
            *x = if d == 0 {
                shock / (1.0 - phi * phi).sqrt()
            } else {
                phi * *x + shock
            };
        }
        let alpha_z = baseline_demand(cfg, Platform::Zomato, date) * drift[0].exp();
        let alpha_s = baseline_demand(cfg, Platform::Swiggy, date) * drift[1].exp();

        for (s, &slot) in TimeSlot::ALL.iter().enumerate() {
            let keep = d > 0 && st.segments.random_bool(cfg.calendar.segment_persistence);
            let u: f64 = st.segments.random();
            if !keep {
                segments[s] = CustomerSegment::ALL[pick(&cfg.calendar.segments.as_array(), u)];
            }
            let segment = segments[s];
            let category = &categories[pick(&category_weights, st.categories.random())];
            let ctx = ExternalContext {
                time_slot: slot,
                weather,
                holiday: public_holiday,
                event_importance: importance,
                customer_segment: segment,
            };

            let [lo, hi] = lt.arrival_range(slot.period());
            let rate = lo + st.arrivals.random::<f64>() * (hi - lo);
            let observed_rate =
                observed_arrival_rate(rate, lt.arrival_window_minutes, &mut st.arrivals)?;

            let mut quote = |p: Platform| -> Result<(Quote, f64)> {
                let distance = lt.distance_min_km
                    + st.distances.random::<f64>() * (lt.distance_max_km - lt.distance_min_km);
                let prep = sample_prep_time(lt, &mut st.prep);
                let delivery = sample_delivery_time(distance, lt, &mut st.delivery)?;
                let q = Quote {
                    price: price(p, category, distance, &cfg.prices)?,
                    lead_time: lead_time(prep, delivery),
                };
                Ok((q, distance))
            };
            let (qz, dist_z) = quote(Platform::Zomato)?;
            let (qs, dist_s) = quote(Platform::Swiggy)?;

            let epsilon = noise.sample(&mut st.noise);
            let cycle = slot_cycle_factor(slot, &cfg.cyclical);
            let fz = cycle * seasonal_multiplier(&ctx, &cfg.multipliers, &mut st.multipliers);
            let fs = cycle * seasonal_multiplier(&ctx, &cfg.multipliers, &mut st.multipliers);
            let raw_z = demand_unclamped(cfg, alpha_z, Platform::Zomato, qz, qs, fz, epsilon);
            let raw_s = demand_unclamped(cfg, alpha_s, Platform::Swiggy, qs, qz, fs, epsilon);
            clamp_events += usize::from(raw_z < 0.0) + usize::from(raw_s < 0.0);
            let (dz, ds) = (raw_z.max(0.0), raw_s.max(0.0));

            let supplier_inventory = supplier_level(&history[s], (dz, ds), cfg);
            history[s].push((dz, ds));

            records.push(
                DemandRecord {
                    week_index: (d / 7) as u32 + 1,
                    date,
                    day_of_week: date.weekday().to_string(),
                    time_slot: slot,
                    food_category: category.clone(),
                    price_zomato: qz.price,
                    price_swiggy: qs.price,
                    demand_zomato: dz,
                    demand_swiggy: ds,
                    lead_time_zomato: qz.lead_time,
                    lead_time_swiggy: qs.lead_time,
                    distance_zomato: dist_z,
                    distance_swiggy: dist_s,
                    supplier_inventory,
                    public_holiday,
                    event_importance: importance,
                    weather_condition: weather,
                    customer_segment: segment,
                    order_arrival_rate: observed_rate,
                }
                .rounded(),
            );
        }
    }
    if clamp_events > 0 {
        log::info!("demand clamped at zero in {clamp_events} platform-slots");
    }
    Ok(SimRun {
        dataset: Dataset { records },
        clamp_events,
    })
}

/// Case-1 newsvendor level from the trailing same-slot history. The window
/// shrinks to what is available early in the run; with no history at all
/// the realized total is used.
fn supplier_level(history: &[(f64, f64)], current: (f64, f64), cfg: &SimConfig) -> f64 {
    if history.is_empty() {
        return current.0 + current.1;
    }
    let start = history.len().saturating_sub(cfg.supplier_window_days);
    let window = &history[start..];
    let z: Vec<f64> = window.iter().map(|p| p.0).collect();
    let s: Vec<f64> = window.iter().map(|p| p.1).collect();
    let stats = inventory::pair_stats(&z, &s);
    inventory::q_star(stats.mean, stats.sd, cfg.z_score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    #[test]
    fn pick_respects_weights() {
        assert_eq!(pick(&[0.2, 0.3, 0.5], 0.0), 0);
        assert_eq!(pick(&[0.2, 0.3, 0.5], 0.25), 1);
        assert_eq!(pick(&[0.2, 0.3, 0.5], 0.99), 2);
        assert_eq!(pick(&[0.0, 1.0, 0.0], 0.999_999_9), 1);
    }

    #[test]
    fn one_day_gives_five_ordered_rows() {
        let mut cfg = SimConfig::default();
        cfg.end_date = cfg.start_date;
        let ds = run_simulation(&cfg).unwrap();
        assert_eq!(ds.len(), 5);
        let slots: Vec<TimeSlot> = ds.records.iter().map(|r| r.time_slot).collect();
        assert_eq!(slots, TimeSlot::ALL);
    }

    #[test]
    fn records_respect_domains() {
        let mut cfg = SimConfig::default();
        cfg.end_date = NaiveDate::from_ymd_opt(2023, 3, 31).unwrap();
        let ds = run_simulation(&cfg).unwrap();
        assert_eq!(ds.len(), 90 * 5);
        for r in &ds.records {
            assert!(r.demand_zomato >= 0.0 && r.demand_swiggy >= 0.0);
            assert!(r.lead_time_zomato > 0.0 && r.lead_time_swiggy > 0.0);
            for d in [r.distance_zomato, r.distance_swiggy] {
                assert!((1.0..=15.0).contains(&d));
            }
            assert!(r.price_zomato > 0.0 && r.supplier_inventory >= 0.0);
            if r.event_importance != EventImportance::None || r.public_holiday {
                assert!(r.event_importance != EventImportance::None);
            }
        }
    }

    #[test]
    fn invalid_range_is_rejected() {
        let mut cfg = SimConfig::default();
        cfg.end_date = NaiveDate::from_ymd_opt(2022, 12, 31).unwrap();
        assert!(run_simulation(&cfg).is_err());
    }
}
