//! One forecasting phase end to end: prepare, tune, fit, forecast, plan,
//! score.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::analytics::{bullwhip_segment, BullwhipEntry, MetricsReport, Segment};
use crate::inventory::{
    plan_from_forecast, plan_from_history, ForecastPoint, ForecastSeries, Granularity,
    InventoryPlan, NewsvendorParams, PlanVariant,
};
use crate::lstm::{train, HyperParams, LstmNetwork, SavedModel, TrainReport};
pub use crate::preprocess::Phase;
use crate::preprocess::{prepare, raw_targets, PreparedData, SplitBounds, SplitSpec, WindowedDataset};
use crate::rng::derive_seed;
use crate::sim::{Dataset, Platform, TimeSlot};
use crate::tuner::{grid_search, HyperGrid, SearchOutcome};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub split: SplitSpec,
    /// Days of slot history per Phase-1 input window.
    pub phase1_days: usize,
    pub grid: HyperGrid,
    pub newsvendor: NewsvendorParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 2023,
            split: SplitSpec::default(),
            phase1_days: 1,
            grid: HyperGrid::coarse(),
            newsvendor: NewsvendorParams::default(),
        }
    }
}

impl Phase {
    pub fn historical_variant(self) -> PlanVariant {
        match self {
            Phase::Intraday => PlanVariant::FiveTime,
            Phase::Daily => PlanVariant::Daily,
        }
    }

    pub fn forecast_variant(self) -> PlanVariant {
        match self {
            Phase::Intraday => PlanVariant::FiveTimeLstm,
            Phase::Daily => PlanVariant::DailyLstm,
        }
    }
}

pub fn stage_seed(master: u64, stage: &str, phase: Phase, platform: Platform) -> u64 {
    derive_seed(master, &format!("{stage}.phase{}.{}", phase.number(), platform.label()))
}

/// Unscaled, non-negative predictions for `w`.
pub fn forecast_orders(net: &LstmNetwork, prepared: &PreparedData, w: &WindowedDataset) -> Result<Array2<f64>> {
    let scaled = net.predict(w.x.view())?;
    Ok(prepared.unscale_targets(&scaled).mapv(|v| v.max(0.0)))
}

#[derive(Debug, Clone)]
pub struct PlatformOutcome {
    pub platform: Platform,
    pub prepared: PreparedData,
    /// Present when the model came out of a grid search in this run.
    pub search: Option<SearchOutcome>,
    /// Present when the model was trained in this run.
    pub report: Option<TrainReport>,
    pub model: SavedModel,
    pub metrics: MetricsReport,
    pub validation_actual: Array2<f64>,
    pub validation_predicted: Array2<f64>,
    pub test_actual: Array2<f64>,
    pub test_predicted: Array2<f64>,
}

/// Forecasts the validation and test windows with `model` and scores the
/// test part in orders.
pub fn evaluate_platform(dataset: &Dataset, prepared: PreparedData, model: SavedModel) -> Result<PlatformOutcome> {
    let net = &model.network;
    let platform = prepared.platform;
    if net.config.input_dim != prepared.test.features() || net.config.output_dim != prepared.test.outputs() {
        return Err(crate::Error::shape(
            "model vs prepared windows",
            format!("{}→{}", prepared.test.features(), prepared.test.outputs()),
            format!("{}→{}", net.config.input_dim, net.config.output_dim),
        ));
    }
    let test_actual = raw_targets(dataset, platform, &prepared.test);
    let test_predicted = forecast_orders(net, &prepared, &prepared.test)?;
    let validation_actual = raw_targets(dataset, platform, &prepared.validation);
    let validation_predicted = forecast_orders(net, &prepared, &prepared.validation)?;
    let metrics = MetricsReport::compute(
        platform.label(),
        prepared.phase.number(),
        test_actual.as_slice().unwrap(),
        test_predicted.as_slice().unwrap(),
    )?;
    Ok(PlatformOutcome {
        platform,
        prepared,
        search: None,
        report: None,
        model,
        metrics,
        validation_actual,
        validation_predicted,
        test_actual,
        test_predicted,
    })
}

/// Trains the final model with fixed hyperparameters and scores it.
pub fn fit_platform(dataset: &Dataset, prepared: PreparedData, hp: &HyperParams, seed: u64) -> Result<PlatformOutcome> {
    let (network, report) = train(&prepared.train, Some(&prepared.validation), hp, seed)?;
    let model = SavedModel {
        network,
        hyperparams: Some(hp.clone()),
        seed: Some(seed),
        x_scaler: Some(prepared.x_scaler.clone()),
        y_scaler: Some(prepared.y_scaler.clone()),
    };
    let mut out = evaluate_platform(dataset, prepared, model)?;
    out.report = Some(report);
    Ok(out)
}

/// Grid search, then a final fit with the winning configuration and seed.
pub fn tune_and_fit(
    dataset: &Dataset,
    platform: Platform,
    phase: Phase,
    cfg: &ExperimentConfig,
) -> Result<PlatformOutcome> {
    let prepared = prepare(dataset, platform, phase, cfg.phase1_days, &cfg.split)?;
    let base = stage_seed(cfg.seed, "tune", phase, platform);
    let search = grid_search(&prepared.train, &prepared.validation, &cfg.grid, base)?;
    log::info!(
        "phase {phase} {platform}: best trial {} (val loss {:.5})",
        search.best.index,
        search.best.val_loss
    );
    let hp = search.best.hyperparams.clone();
    let seed = search.best.seed;
    let mut out = fit_platform(dataset, prepared, &hp, seed)?;
    out.search = Some(search);
    Ok(out)
}

/// Sums platform forecasts into a total-demand series over the given
/// windows. All outcomes must share the same windows.
pub fn total_forecasts(
    dataset: &Dataset,
    phase: Phase,
    target_days: &[usize],
    predicted: &[&Array2<f64>],
) -> ForecastSeries {
    let total_pred: Array2<f64> = predicted.iter().fold(Array2::zeros(predicted[0].raw_dim()), |acc, p| acc + *p);
    let mut points = Vec::new();
    for (i, &d) in target_days.iter().enumerate() {
        let day = dataset.day(d);
        match phase {
            Phase::Intraday => {
                for (j, r) in day.iter().enumerate() {
                    points.push(ForecastPoint {
                        day: d,
                        date: r.date,
                        slot: Some(TimeSlot::ALL[j]),
                        forecast: total_pred[[i, j]],
                        actual: r.total_demand(),
                    });
                }
            }
            Phase::Daily => points.push(ForecastPoint {
                day: d,
                date: day[0].date,
                slot: None,
                forecast: total_pred[[i, 0]],
                actual: day.iter().map(|r| r.total_demand()).sum::<f64>() / day.len() as f64,
            }),
        }
    }
    ForecastSeries {
        granularity: match phase {
            Phase::Intraday => Granularity::Slot,
            Phase::Daily => Granularity::Daily,
        },
        points,
    }
}

#[derive(Debug, Clone)]
pub struct InventoryOutcome {
    /// Historical plan over the whole dataset.
    pub historical: InventoryPlan,
    /// Forecast plan over the test segment.
    pub forecast: InventoryPlan,
    pub bullwhip: Vec<BullwhipEntry>,
}

/// Historical and forecast plans plus the nine bullwhip ratios of a phase.
/// `forecasts` may start before the test segment; earlier points only warm
/// up the error window.
pub fn plan_and_score(
    dataset: &Dataset,
    phase: Phase,
    bounds: &SplitBounds,
    forecasts: &ForecastSeries,
    params: &NewsvendorParams,
) -> Result<InventoryOutcome> {
    let historical = plan_from_history(dataset, phase.historical_variant(), params)?;
    let forecast = plan_from_forecast(forecasts, phase.forecast_variant(), params)?.restrict(bounds.test.clone());
    let n = phase.number();
    let w = params.window_days;
    let mut bullwhip = Vec::with_capacity(9);
    bullwhip.extend(bullwhip_segment(dataset, &historical.restrict(bounds.train.clone()), n, Segment::Training, w)?);
    bullwhip.extend(bullwhip_segment(dataset, &historical.restrict(bounds.test.clone()), n, Segment::Testing, w)?);
    bullwhip.extend(bullwhip_segment(dataset, &forecast, n, Segment::Predicted, w)?);
    Ok(InventoryOutcome {
        historical,
        forecast,
        bullwhip,
    })
}

#[derive(Debug, Clone)]
pub struct PhaseOutcome {
    pub phase: Phase,
    pub platforms: Vec<PlatformOutcome>,
    /// Validation and test forecasts of total demand.
    pub forecasts: ForecastSeries,
    pub inventory: InventoryOutcome,
}

impl PhaseOutcome {
    pub fn platform(&self, p: Platform) -> Option<&PlatformOutcome> {
        self.platforms.iter().find(|o| o.platform == p)
    }
}

/// Forecast series over validation and test windows from fitted platforms.
pub fn combined_forecasts(dataset: &Dataset, phase: Phase, platforms: &[PlatformOutcome]) -> Result<ForecastSeries> {
    let first = &platforms[0].prepared;
    for o in platforms {
        if o.prepared.validation.target_days != first.validation.target_days
            || o.prepared.test.target_days != first.test.target_days
        {
            return Err(crate::Error::InvalidInput("platform windows are misaligned".into()));
        }
    }
    let days: Vec<usize> = first
        .validation
        .target_days
        .iter()
        .chain(&first.test.target_days)
        .copied()
        .collect();
    let stacked: Vec<Array2<f64>> = platforms
        .iter()
        .map(|o| ndarray::concatenate(Axis(0), &[o.validation_predicted.view(), o.test_predicted.view()]).expect("same width"))
        .collect();
    let refs: Vec<&Array2<f64>> = stacked.iter().collect();
    Ok(total_forecasts(dataset, phase, &days, &refs))
}

pub fn run_phase(dataset: &Dataset, phase: Phase, cfg: &ExperimentConfig) -> Result<PhaseOutcome> {
    let mut platforms = Vec::with_capacity(2);
    for &p in Platform::ALL {
        platforms.push(tune_and_fit(dataset, p, phase, cfg)?);
    }
    let forecasts = combined_forecasts(dataset, phase, &platforms)?;
    let bounds = platforms[0].prepared.bounds.clone();
    let inventory = plan_and_score(dataset, phase, &bounds, &forecasts, &cfg.newsvendor)?;
    Ok(PhaseOutcome {
        phase,
        platforms,
        forecasts,
        inventory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::Scope;
    use crate::sim::SimConfig;

    fn small_dataset() -> Dataset {
        let mut cfg = SimConfig::default();
        cfg.end_date = cfg.start_date + chrono::Duration::days(99);
        crate::sim::run_simulation(&cfg).unwrap()
    }

    fn quick() -> ExperimentConfig {
        let hp = HyperParams {
            epochs: 3,
            units: 4,
            batch_size: 16,
            dropout: 0.1,
            learning_rate: 0.01,
            layers: 1,
        };
        ExperimentConfig {
            grid: HyperGrid::single(&hp),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn both_phases_produce_nine_ratios() {
        let ds = small_dataset();
        for phase in Phase::ALL {
            let out = run_phase(&ds, phase, &quick()).unwrap();
            assert_eq!(out.platforms.len(), 2);
            assert_eq!(out.inventory.bullwhip.len(), 9);
            for seg in Segment::ALL {
                for sc in Scope::ALL {
                    assert!(out.inventory.bullwhip.iter().any(|e| e.segment == seg && e.scope == sc));
                }
            }
            let test = &out.platforms[0].prepared.bounds.test;
            assert!(out.inventory.forecast.points.iter().all(|p| test.contains(&p.day)));
            let per_day = if phase == Phase::Intraday { 5 } else { 1 };
            assert_eq!(out.forecasts.points.len() % per_day, 0);
        }
    }

    #[test]
    fn rerun_is_identical() {
        let ds = small_dataset();
        let a = run_phase(&ds, Phase::Daily, &quick()).unwrap();
        let b = run_phase(&ds, Phase::Daily, &quick()).unwrap();
        assert_eq!(a.forecasts, b.forecasts);
        assert_eq!(a.inventory.bullwhip, b.inventory.bullwhip);
        assert_eq!(a.platforms[1].model, b.platforms[1].model);
    }
}
