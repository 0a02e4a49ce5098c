//! Shared fixtures for the benchmarks.

use foodcast_core::{Dataset, SimConfig};
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default simulation truncated to `days` days.
pub fn dataset(days: i64) -> Dataset {
    let mut cfg = SimConfig::default();
    cfg.end_date = cfg.start_date + chrono::Duration::days(days - 1);
    foodcast_core::sim::run_simulation(&cfg).expect("default config is valid")
}

/// Random batch `[batch × steps × features]` with matching targets.
pub fn batch(batch: usize, steps: usize, features: usize, outputs: usize) -> (Array3<f64>, Array2<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = Array3::from_shape_simple_fn((batch, steps, features), || rng.random_range(-1.0..1.0));
    let y = Array2::from_shape_simple_fn((batch, outputs), || rng.random_range(-1.0..1.0));
    (x, y)
}
