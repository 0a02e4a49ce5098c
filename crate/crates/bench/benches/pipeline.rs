use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use foodcast_bench::{batch, dataset};
use foodcast_core::inventory::{plan_from_history, NewsvendorParams, PlanVariant};
use foodcast_core::lstm::{loss_mse_grad, train_arrays, LstmNetwork, Mode, NetworkConfig};
use foodcast_core::preprocess::{prepare, SplitSpec};
use foodcast_core::{HyperParams, Phase, Platform, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn simulate(c: &mut Criterion) {
    let cfg = SimConfig::default();
    c.bench_function("simulate_default_two_years", |b| {
        b.iter(|| foodcast_core::sim::run_simulation(black_box(&cfg)).unwrap())
    });
}

fn preprocess(c: &mut Criterion) {
    let ds = dataset(732);
    let split = SplitSpec::default();
    let mut g = c.benchmark_group("prepare");
    for phase in Phase::ALL {
        g.bench_function(format!("phase{}", phase.number()), |b| {
            b.iter(|| prepare(&ds, Platform::Zomato, phase, 1, &split).unwrap())
        });
    }
    g.finish();
}

fn lstm(c: &mut Criterion) {
    let (x, y) = batch(32, 6, 26, 1);
    let mut g = c.benchmark_group("lstm_batch32_steps6");
    for (units, layers) in [(32, 1), (64, 1), (64, 2)] {
        let cfg = NetworkConfig {
            input_dim: 26,
            layer_sizes: vec![units; layers],
            output_dim: 1,
            dropout: 0.0,
        };
        let net = LstmNetwork::new(cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        g.bench_function(format!("forward_u{units}_l{layers}"), |b| {
            b.iter(|| net.forward(black_box(x.view()), Mode::Infer).unwrap())
        });
        g.bench_function(format!("forward_backward_u{units}_l{layers}"), |b| {
            b.iter_batched(
                || (),
                |_| {
                    let (pred, cache) = net.forward(x.view(), Mode::Infer).unwrap();
                    net.backward(&cache, &loss_mse_grad(&pred, &y))
                },
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

fn training(c: &mut Criterion) {
    let (x, y) = batch(256, 6, 26, 1);
    let hp = HyperParams {
        epochs: 1,
        units: 32,
        batch_size: 32,
        dropout: 0.1,
        learning_rate: 0.005,
        layers: 1,
    };
    c.bench_function("train_one_epoch_256_windows", |b| {
        b.iter(|| train_arrays(x.view(), y.view(), None, &hp, 3).unwrap())
    });
}

fn inventory(c: &mut Criterion) {
    let ds = dataset(732);
    let params = NewsvendorParams::default();
    let mut g = c.benchmark_group("historical_plan");
    for v in [PlanVariant::FiveTime, PlanVariant::Daily] {
        g.bench_function(v.label(), |b| b.iter(|| plan_from_history(&ds, v, &params).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, simulate, preprocess, lstm, training, inventory);
criterion_main!(benches);
