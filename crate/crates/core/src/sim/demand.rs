//! Demand-side formulas: the intra-day cycle, external multipliers, the
//! competitive demand function and platform pricing.

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate};
use rand::Rng;

use super::config::{CyclicalParams, Interval, MultiplierTable, PriceModel, SimConfig};
use super::types::{
    CustomerSegment, DemandPeriod, EventImportance, ExternalContext, Platform, TimeSlot, Weather,
};
use crate::{Error, Result};

/// Sinusoidal intra-day factor at cycle position `slot_index`.
pub fn cyclical_factor(slot_index: usize, params: &CyclicalParams) -> f64 {
    params.amplitude * (PI / params.period * slot_index as f64 + params.phase_shift).sin()
        + params.baseline
}

/// Cycle position of a slot: `peak_slot` is position 0 and positions then
/// advance in slot order, wrapping past midnight.
pub fn cycle_index(slot: TimeSlot, params: &CyclicalParams) -> usize {
    let n = TimeSlot::ALL.len();
    (slot.index() + n - params.peak_slot.index()) % n
}

pub fn slot_cycle_factor(slot: TimeSlot, params: &CyclicalParams) -> f64 {
    cyclical_factor(cycle_index(slot, params), params)
}

/// Amplitude and baseline of the intra-day cycle from peak and off-peak
/// order volumes, normalized so that peak = amplitude + baseline = 1.
///
/// Both values are rounded to three decimals, the precision the cycle
/// parameters are configured at.
pub fn amplitude_from_volumes(peak_orders: f64, offpeak_orders: f64) -> Result<(f64, f64)> {
    if !(peak_orders > 0.0) {
        return Err(Error::InvalidInput(format!(
            "peak volume must be positive, got {peak_orders}"
        )));
    }
    if !(offpeak_orders >= 0.0 && offpeak_orders <= peak_orders) {
        return Err(Error::InvalidInput(format!(
            "off-peak volume {offpeak_orders} must lie in [0, {peak_orders}]"
        )));
    }
    let amplitude = round3((peak_orders - offpeak_orders) / (2.0 * peak_orders));
    Ok((amplitude, round3(1.0 - amplitude)))
}

fn round3(x: f64) -> f64 {
    (x * 1e3).round() / 1e3
}

/// The four multiplier ranges that apply in `ctx`, in the order
/// time-of-day, weather, event, customer segment.
pub fn multiplier_ranges(ctx: &ExternalContext, table: &MultiplierTable) -> [Interval; 4] {
    let time = match ctx.time_slot.period() {
        DemandPeriod::Peak => table.peak,
        DemandPeriod::OffPeak => table.off_peak,
        DemandPeriod::LateNight => table.late_night,
    };
    let weather = match ctx.weather {
        Weather::Clear => table.clear,
        Weather::Mild => table.mild,
        Weather::Extreme => table.extreme,
    };
    let event = if ctx.is_event_day() {
        event_band(table.holiday, ctx.event_importance)
    } else {
        table.regular
    };
    let segment = match ctx.customer_segment {
        CustomerSegment::Mismatched => table.mismatched,
        CustomerSegment::General => table.general,
        CustomerSegment::Loyal => table.loyal,
    };
    [time, weather, event, segment]
}

fn event_band(holiday: Interval, importance: EventImportance) -> Interval {
    let third = (holiday[1] - holiday[0]) / 3.0;
    let k = match importance {
        EventImportance::None | EventImportance::Low => 0.0,
        EventImportance::Medium => 1.0,
        EventImportance::High => 2.0,
    };
    [holiday[0] + k * third, holiday[0] + (k + 1.0) * third]
}

/// Composite multiplier with each factor placed at quantile `u[k]` of its
/// range (`0` = lower edge, `1` = upper edge).
pub fn seasonal_multiplier_at(ctx: &ExternalContext, table: &MultiplierTable, u: [f64; 4]) -> f64 {
    multiplier_ranges(ctx, table)
        .iter()
        .zip(u)
        .map(|(iv, q)| iv[0] + q * (iv[1] - iv[0]))
        .product()
}

/// Composite multiplier `T * W * E * segment`, each factor drawn uniformly
/// from its range.
pub fn seasonal_multiplier<R: Rng + ?Sized>(
    ctx: &ExternalContext,
    table: &MultiplierTable,
    rng: &mut R,
) -> f64 {
    let u = [rng.random(), rng.random(), rng.random(), rng.random()];
    seasonal_multiplier_at(ctx, table, u)
}

/// Price the customer pays on `platform` for an order of `category`
/// delivered over `distance_km`.
pub fn price(platform: Platform, category: &str, distance_km: f64, model: &PriceModel) -> Result<f64> {
    let base = *model
        .base_prices
        .get(category)
        .ok_or_else(|| Error::UnknownCategory {
            field: "food_category",
            value: category.to_string(),
        })?;
    let fees = model.fees(platform);
    let small_order = if base <= model.small_order_threshold {
        model.small_order_fee
    } else {
        0.0
    };
    Ok(base * model.gst_multiplier
        + fees.platform_fee
        + fees.base_delivery_fee
        + fees.per_km_rate * distance_km
        + small_order)
}

/// Price and lead time a platform offers in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quote {
    pub price: f64,
    pub lead_time: f64,
}

/// Baseline demand of `platform` on `date`, including the slow trend and
/// annual cycle.
pub fn baseline_demand(cfg: &SimConfig, platform: Platform, date: NaiveDate) -> f64 {
    let alpha = cfg.platform(platform).alpha;
    let t = &cfg.trend;
    let years = (date - cfg.start_date).num_days() as f64 / 365.0;
    let doy = date.ordinal() as f64;
    let annual = 1.0
        + t.annual_amplitude * (2.0 * PI * (doy - t.annual_peak_day as f64) / 365.25).cos();
    let weekday = cfg.platform(platform).weekday_factors[date.weekday().num_days_from_monday() as usize];
    alpha * (1.0 + t.growth_per_year * years) * annual * weekday
}

/// Competitive demand before clamping. May be negative for extreme draws.
#[allow(clippy::too_many_arguments)]
pub fn demand_unclamped(
    cfg: &SimConfig,
    alpha: f64,
    platform: Platform,
    own: Quote,
    rival: Quote,
    multiplier: f64,
    epsilon: f64,
) -> f64 {
    let beta = cfg.platform(platform).beta;
    let bracket = alpha - beta * own.price - cfg.gamma * own.lead_time
        + cfg.tau * (rival.price - own.price)
        - cfg.delta * (own.lead_time - rival.lead_time)
        + epsilon;
    bracket * multiplier
}

/// Orders placed on `platform`, clamped at zero.
pub fn demand(
    cfg: &SimConfig,
    alpha: f64,
    platform: Platform,
    own: Quote,
    rival: Quote,
    multiplier: f64,
    epsilon: f64,
) -> f64 {
    demand_unclamped(cfg, alpha, platform, own, rival, multiplier, epsilon).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn cyclical_examples() {
        let flat = CyclicalParams {
            amplitude: 0.0,
            baseline: 1.0,
            ..CyclicalParams::default()
        };
        for i in 0..5 {
            assert_eq!(cyclical_factor(i, &flat), 1.0);
        }
        let p = CyclicalParams::default();
        let expected = 0.475 * 1.5f64.sin() + 0.525;
        assert!((cyclical_factor(0, &p) - expected).abs() < 1e-15);
        assert!((cyclical_factor(0, &p) - 0.9989).abs() < 1e-4);
        // Sine at its maximum gives baseline + amplitude.
        let at_max = CyclicalParams {
            phase_shift: PI / 2.0,
            ..p.clone()
        };
        assert!((cyclical_factor(0, &at_max) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cycle_stays_in_band_and_peaks_at_peak_slot() {
        let p = CyclicalParams::default();
        let values: Vec<f64> = TimeSlot::ALL.iter().map(|s| slot_cycle_factor(*s, &p)).collect();
        for v in &values {
            assert!(*v >= p.baseline - p.amplitude && *v <= p.baseline + p.amplitude);
        }
        let argmax = (0..5).max_by(|a, b| values[*a].total_cmp(&values[*b])).unwrap();
        assert_eq!(TimeSlot::ALL[argmax], p.peak_slot);
    }

    #[test]
    fn amplitude_from_published_volumes() {
        let (a, h) = amplitude_from_volumes(285_000.0, 14_280.0).unwrap();
        assert_eq!((a, h), (0.475, 0.525));
        let (a, h) = amplitude_from_volumes(127_680.0, 6_360.0).unwrap();
        assert_eq!((a, h), (0.475, 0.525));
        let (a, h) = amplitude_from_volumes(1000.0, 500.0).unwrap();
        assert_eq!((a, h), (0.25, 0.75));
        assert_eq!(amplitude_from_volumes(100.0, 100.0).unwrap(), (0.0, 1.0));
        assert!(amplitude_from_volumes(0.0, 0.0).is_err());
    }

    #[test]
    fn multiplier_examples() {
        let table = MultiplierTable::default();
        // Off-peak slot at its lower edge with all unit branches.
        let ctx = ExternalContext::regular(TimeSlot::Morning);
        assert_eq!(seasonal_multiplier_at(&ctx, &table, [0.0; 4]), 1.0);

        let ctx = ExternalContext {
            time_slot: TimeSlot::Evening,
            weather: Weather::Extreme,
            holiday: true,
            event_importance: EventImportance::High,
            customer_segment: CustomerSegment::Loyal,
        };
        let f = seasonal_multiplier_at(&ctx, &table, [1.0; 4]);
        assert!((f - 4.32).abs() < 1e-12, "{f}");
    }

    #[test]
    fn multiplier_bounds_over_random_contexts() {
        let table = MultiplierTable::default();
        let mut r = rng::stream(1, "test");
        for _ in 0..20_000 {
            let ctx = ExternalContext {
                time_slot: TimeSlot::ALL[r.random_range(0..5)],
                weather: Weather::ALL[r.random_range(0..3)],
                holiday: r.random_bool(0.3),
                event_importance: EventImportance::ALL[r.random_range(0..4)],
                customer_segment: CustomerSegment::ALL[r.random_range(0..3)],
            };
            let f = seasonal_multiplier(&ctx, &table, &mut r);
            assert!((0.56 - 1e-12..=4.32 + 1e-12).contains(&f), "{f}");
        }
    }

    #[test]
    fn price_examples() {
        let mut m = PriceModel::default();
        m.base_prices.insert("Thali".into(), 200.0);
        m.category_weights.insert("Thali".into(), 1.0);
        m.zomato.platform_fee = 5.0;
        m.zomato.base_delivery_fee = 20.0;
        m.zomato.per_km_rate = 6.0;
        let p = price(Platform::Zomato, "Thali", 4.0, &m).unwrap();
        assert!((p - 259.0).abs() < 1e-9);

        let bare = PriceModel {
            gst_multiplier: 1.0,
            small_order_threshold: 100.0,
            small_order_fee: 25.0,
            zomato: super::super::config::PlatformFees {
                platform_fee: 0.0,
                base_delivery_fee: 0.0,
                per_km_rate: 0.0,
            },
            ..m.clone()
        };
        let mut small = bare.clone();
        small.base_prices.insert("Chai".into(), 80.0);
        assert_eq!(price(Platform::Zomato, "Chai", 7.0, &small).unwrap(), 105.0);
        let identity = PriceModel {
            small_order_fee: 0.0,
            ..bare
        };
        assert_eq!(price(Platform::Zomato, "Thali", 9.0, &identity).unwrap(), 200.0);
        assert!(price(Platform::Zomato, "Sushi", 1.0, &m).is_err());
    }

    #[test]
    fn price_non_decreasing_in_distance() {
        let m = PriceModel::default();
        let mut last = 0.0;
        for i in 0..=140 {
            let d = 1.0 + i as f64 * 0.1;
            let p = price(Platform::Swiggy, "Pizza", d, &m).unwrap();
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn demand_reduces_to_baseline() {
        let mut cfg = SimConfig::default();
        cfg.zomato.beta = 0.0;
        cfg.swiggy.beta = 0.0;
        cfg.gamma = 0.0;
        cfg.tau = 0.0;
        cfg.delta = 0.0;
        let q = Quote {
            price: 321.0,
            lead_time: 47.0,
        };
        let r = Quote {
            price: 150.0,
            lead_time: 20.0,
        };
        assert_eq!(demand(&cfg, 10_000.0, Platform::Zomato, q, r, 1.0, 0.0), 10_000.0);
        assert_eq!(demand(&cfg, 12_000.0, Platform::Swiggy, q, r, 1.0, 0.0), 12_000.0);
    }

    #[test]
    fn demand_hand_evaluation() {
        let mut cfg = SimConfig::default();
        cfg.zomato.beta = 1.0;
        let own = Quote {
            price: 300.0,
            lead_time: 40.0,
        };
        let d = demand(&cfg, 10_000.0, Platform::Zomato, own, own, 1.2, 0.0);
        assert!((d - 11_616.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn demand_symmetry_and_clamp() {
        let cfg = SimConfig::default();
        let a = Quote {
            price: 280.0,
            lead_time: 52.0,
        };
        let b = Quote {
            price: 190.0,
            lead_time: 33.0,
        };
        let (f, eps) = (1.3, 12.5);
        let dz = demand(&cfg, 10_000.0, Platform::Zomato, a, b, f, eps);
        let ds = demand(&cfg, 12_000.0, Platform::Swiggy, b, a, f, eps);
        // Swap the quotes and the platform parameters: the demands swap.
        let mut swapped = cfg.clone();
        std::mem::swap(&mut swapped.zomato, &mut swapped.swiggy);
        let dz2 = demand(&swapped, 12_000.0, Platform::Zomato, b, a, f, eps);
        let ds2 = demand(&swapped, 10_000.0, Platform::Swiggy, a, b, f, eps);
        assert!((dz - ds2).abs() < 1e-9 && (ds - dz2).abs() < 1e-9);

        assert!(demand_unclamped(&cfg, 10.0, Platform::Zomato, a, b, 1.0, -500.0) < 0.0);
        assert_eq!(demand(&cfg, 10.0, Platform::Zomato, a, b, 1.0, -500.0), 0.0);
    }
}
