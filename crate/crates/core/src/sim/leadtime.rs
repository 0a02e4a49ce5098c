//! Order fulfilment as an M/G/inf system: exponential inter-arrivals,
//! lognormal preparation and distance-banded uniform delivery. With
//! unlimited couriers no order ever queues, so lead time is simply
//! preparation plus delivery.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use super::config::{DeliveryBand, LeadTimeModel};
use crate::{Error, Result};

/// Log-space location and scale of a lognormal with the given mean and
/// standard deviation.
pub fn lognormal_params_from_moments(mean: f64, sd: f64) -> Result<(f64, f64)> {
    if !(mean > 0.0) || !(sd > 0.0) {
        return Err(Error::InvalidInput(format!(
            "lognormal moments must be positive, got mean {mean}, sd {sd}"
        )));
    }
    let log_mu = (mean * mean / (sd * sd + mean * mean).sqrt()).ln();
    let log_sigma = (1.0 + sd * sd / (mean * mean)).ln().sqrt();
    Ok((log_mu, log_sigma))
}

/// Mean and standard deviation of `Lognormal(log_mu, log_sigma)`.
pub fn lognormal_moments(log_mu: f64, log_sigma: f64) -> (f64, f64) {
    let s2 = log_sigma * log_sigma;
    let mean = (log_mu + s2 / 2.0).exp();
    let sd = ((s2.exp() - 1.0) * (2.0 * log_mu + s2).exp()).sqrt();
    (mean, sd)
}

pub fn sample_prep_time<R: Rng + ?Sized>(model: &LeadTimeModel, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (model.prep_log_mu + model.prep_log_sigma * z).exp()
}

/// Band whose distance interval contains `distance_km`.
pub fn delivery_band(distance_km: f64, model: &LeadTimeModel) -> Result<&DeliveryBand> {
    if !(distance_km >= model.distance_min_km && distance_km <= model.distance_max_km) {
        return Err(Error::config(
            "lead_time.bands",
            format!(
                "distance {distance_km} km is outside [{}, {}]",
                model.distance_min_km, model.distance_max_km
            ),
        ));
    }
    model
        .bands
        .iter()
        .rev()
        .find(|b| distance_km >= b.from_km)
        .ok_or_else(|| Error::config("lead_time.bands", format!("no band covers {distance_km} km")))
}

pub fn sample_delivery_time<R: Rng + ?Sized>(
    distance_km: f64,
    model: &LeadTimeModel,
    rng: &mut R,
) -> Result<f64> {
    let band = delivery_band(distance_km, model)?;
    let u: f64 = rng.random();
    Ok(band.min_minutes + u * (band.max_minutes - band.min_minutes))
}

pub fn sample_interarrival<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<f64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "arrival rate must be positive and finite, got {rate}"
        )));
    }
    let exp = Exp::new(rate).expect("validated rate");
    Ok(exp.sample(rng))
}

pub fn lead_time(prep: f64, delivery: f64) -> f64 {
    prep + delivery
}

/// Expected delivery time when distance is uniform over the model's range.
pub fn mean_delivery_time(model: &LeadTimeModel) -> f64 {
    let span = model.distance_max_km - model.distance_min_km;
    model
        .bands
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let upper = model
                .bands
                .get(i + 1)
                .map_or(model.distance_max_km, |n| n.from_km);
            (upper - b.from_km) / span * (b.min_minutes + b.max_minutes) / 2.0
        })
        .sum()
}

/// Realized arrival rate over an observation window: the number of
/// exponential inter-arrivals that fit in `window` minutes, per minute.
pub fn observed_arrival_rate<R: Rng + ?Sized>(rate: f64, window: f64, rng: &mut R) -> Result<f64> {
    let mut clock = sample_interarrival(rate, rng)?;
    let mut count = 0u64;
    while clock <= window {
        count += 1;
        clock += sample_interarrival(rate, rng)?;
    }
    Ok(count as f64 / window)
}
