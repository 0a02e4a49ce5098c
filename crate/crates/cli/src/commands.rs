use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use foodcast_core::analytics::{eda, BullwhipReport, EdaReport, MetricsReport};
use foodcast_core::experiment::{
    combined_forecasts, evaluate_platform, fit_platform, plan_and_score, stage_seed, InventoryOutcome,
    PlatformOutcome,
};
use foodcast_core::lstm::SavedModel;
use foodcast_core::preprocess::{prepare, PreparedData};
use foodcast_core::sim::run_simulation;
use foodcast_core::tuner::{grid_search, write_curves_csv, write_trials_log, BestConfig, SearchOutcome};
use foodcast_core::{Dataset, Phase, Platform, TimeSlot};

use crate::config::PipelineConfig;
use crate::manifest::RunManifest;

fn stem(phase: Phase, platform: Platform) -> String {
    format!("phase{}_{}", phase.number(), platform.label().to_lowercase())
}

pub fn best_path(cfg: &PipelineConfig, phase: Phase, platform: Platform) -> PathBuf {
    cfg.paths.trials().join(format!("best_{}.json", stem(phase, platform)))
}

pub fn model_path(cfg: &PipelineConfig, phase: Phase, platform: Platform) -> PathBuf {
    cfg.paths.models().join(format!("{}.json", stem(phase, platform)))
}

pub fn load_dataset(path: &Path) -> anyhow::Result<Dataset> {
    Dataset::load(path).with_context(|| format!("loading dataset {}", path.display()))
}

fn prepared(cfg: &PipelineConfig, ds: &Dataset, phase: Phase, platform: Platform) -> anyhow::Result<PreparedData> {
    prepare(ds, platform, phase, cfg.phase1_days, &cfg.split)
        .with_context(|| format!("preparing phase {phase} {platform} windows"))
}

pub fn simulate(cfg: &PipelineConfig, m: &mut RunManifest) -> anyhow::Result<Dataset> {
    let ds = run_simulation(&cfg.effective_sim())?;
    m.write(&cfg.paths.dataset(), &ds.to_csv_bytes()?)?;
    log::info!("simulated {} rows over {} days", ds.len(), ds.num_days());
    Ok(ds)
}

pub fn eda_report(cfg: &PipelineConfig, ds: &Dataset, m: &mut RunManifest) -> anyhow::Result<EdaReport> {
    let report = eda(ds)?;
    let dir = cfg.paths.reports();
    let mut buf = Vec::new();
    report.write_series_csv(&mut buf)?;
    m.write(&dir.join("eda_series.csv"), &buf)?;
    buf.clear();
    report.write_histogram_csv(&mut buf)?;
    m.write(&dir.join("eda_histogram.csv"), &buf)?;
    buf.clear();
    report.write_qq_csv(&mut buf)?;
    m.write(&dir.join("eda_qq.csv"), &buf)?;

    let mut text = String::new();
    writeln!(text, "days {}", ds.num_days())?;
    for s in &report.series {
        let n = s.daily_average.len() as f64;
        let mean = s.daily_average.iter().sum::<f64>() / n;
        writeln!(
            text,
            "{:<8} mean {:>10.2} final cumulative mean {:>10.2} mean rolling variance {:>14.2}",
            s.scope,
            mean,
            s.cumulative_mean.last().unwrap(),
            s.rolling_variance.iter().sum::<f64>() / s.rolling_variance.len() as f64
        )?;
    }
    let rho = foodcast_core::inventory::estimate_correlation(
        &ds.demand_series(Platform::Zomato),
        &ds.demand_series(Platform::Swiggy),
    )?;
    writeln!(text, "platform demand correlation {rho:.4}")?;
    m.write(&dir.join("eda_summary.txt"), text.as_bytes())?;
    Ok(report)
}

pub fn tune(cfg: &PipelineConfig, ds: &Dataset, m: &mut RunManifest) -> anyhow::Result<Vec<(Phase, Platform, SearchOutcome)>> {
    let grid = cfg.hyper_grid();
    let mut out = Vec::new();
    for phase in cfg.phases.phases() {
        for &platform in &cfg.platforms {
            let prep = prepared(cfg, ds, phase, platform)?;
            let base = stage_seed(cfg.seed, "tune", phase, platform);
            log::info!("phase {phase} {platform}: {} trials", grid.len());
            let search = grid_search(&prep.train, &prep.validation, &grid, base)
                .with_context(|| format!("grid search for phase {phase} {platform}"))?;
            let dir = cfg.paths.trials();
            let mut buf = Vec::new();
            write_trials_log(&mut buf, &search.trials)?;
            m.write(&dir.join(format!("{}.jsonl", stem(phase, platform))), &buf)?;
            buf.clear();
            write_curves_csv(&mut buf, &search.trials)?;
            m.write(&dir.join(format!("curves_{}.csv", stem(phase, platform))), &buf)?;
            m.write(&best_path(cfg, phase, platform), &serde_json::to_vec_pretty(&search.best)?)?;
            out.push((phase, platform, search));
        }
    }
    Ok(out)
}

fn predictions_csv(o: &PlatformOutcome, ds: &Dataset) -> anyhow::Result<Vec<u8>> {
    let mut text = String::from("date,time_slot,actual,predicted\n");
    for (i, &d) in o.prepared.test.target_days.iter().enumerate() {
        let date = ds.day(d)[0].date;
        for j in 0..o.test_actual.ncols() {
            let slot = if o.test_actual.ncols() == 1 { "daily" } else { TimeSlot::ALL[j].label() };
            writeln!(text, "{date},{slot},{},{}", o.test_actual[[i, j]], o.test_predicted[[i, j]])?;
        }
    }
    Ok(text.into_bytes())
}

fn metrics_csv(metrics: &[MetricsReport]) -> String {
    let mut text = String::from("phase,platform,n,rmse,mae,r2\n");
    for r in metrics {
        let _ = writeln!(text, "{},{},{},{},{},{}", r.phase, r.platform, r.n, r.rmse, r.mae, r.r2);
    }
    text
}

/// Trains one final model per phase and platform from the saved best
/// configuration.
pub fn train_models(cfg: &PipelineConfig, ds: &Dataset, m: &mut RunManifest) -> anyhow::Result<Vec<PlatformOutcome>> {
    let mut out = Vec::new();
    for phase in cfg.phases.phases() {
        let mut metrics = Vec::new();
        for &platform in &cfg.platforms {
            let path = best_path(cfg, phase, platform);
            let text = std::fs::read(&path)
                .with_context(|| format!("no best configuration at {}; run `tune` first", path.display()))?;
            let best: BestConfig = serde_json::from_slice(&text).with_context(|| format!("parsing {}", path.display()))?;
            let prep = prepared(cfg, ds, phase, platform)?;
            let o = fit_platform(ds, prep, &best.hyperparams, best.seed)
                .with_context(|| format!("training phase {phase} {platform} (trial {})", best.index))?;
            let mut buf = Vec::new();
            o.model.write_json(&mut buf)?;
            m.write(&model_path(cfg, phase, platform), &buf)?;
            m.write(
                &cfg.paths.reports().join(format!("predictions_{}.csv", stem(phase, platform))),
                &predictions_csv(&o, ds)?,
            )?;
            log::info!(
                "phase {phase} {platform}: test r2 {:.3}, rmse {:.1}",
                o.metrics.r2,
                o.metrics.rmse
            );
            metrics.push(o.metrics.clone());
            out.push(o);
        }
        m.write(
            &cfg.paths.reports().join(format!("metrics_phase{}.csv", phase.number())),
            metrics_csv(&metrics).as_bytes(),
        )?;
    }
    Ok(out)
}

pub struct PhaseInventory {
    pub phase: Phase,
    pub platforms: Vec<PlatformOutcome>,
    pub inventory: InventoryOutcome,
}

/// Plans and bullwhip ratios from the saved models of both platforms.
pub fn bullwhip(cfg: &PipelineConfig, ds: &Dataset, m: &mut RunManifest) -> anyhow::Result<(BullwhipReport, Vec<PhaseInventory>)> {
    let mut report = BullwhipReport::default();
    let mut phases = Vec::new();
    for phase in cfg.phases.phases() {
        let mut platforms = Vec::new();
        for &platform in Platform::ALL {
            let path = model_path(cfg, phase, platform);
            let file = std::fs::File::open(&path)
                .with_context(|| format!("missing model {}; run `train` first", path.display()))?;
            let model = SavedModel::read_json(std::io::BufReader::new(file))
                .with_context(|| format!("reading model {}", path.display()))?;
            let prep = prepared(cfg, ds, phase, platform)?;
            if model.x_scaler.as_ref() != Some(&prep.x_scaler) || model.y_scaler.as_ref() != Some(&prep.y_scaler) {
                bail!("model {} was fitted on different data or settings", path.display());
            }
            platforms.push(evaluate_platform(ds, prep, model)?);
        }
        let forecasts = combined_forecasts(ds, phase, &platforms)?;
        let bounds = platforms[0].prepared.bounds.clone();
        let inventory = plan_and_score(ds, phase, &bounds, &forecasts, &cfg.newsvendor)?;
        let dir = cfg.paths.reports();
        for plan in [&inventory.historical, &inventory.forecast] {
            let mut buf = Vec::new();
            plan.write_csv(&mut buf)?;
            m.write(&dir.join(format!("inventory_phase{}_{}.csv", phase.number(), plan.variant)), &buf)?;
        }
        let phase_report = BullwhipReport {
            entries: inventory.bullwhip.clone(),
        };
        let mut buf = Vec::new();
        phase_report.write_csv(&mut buf)?;
        m.write(&dir.join(format!("bullwhip_phase{}.csv", phase.number())), &buf)?;
        if phase_report.is_degenerate() {
            log::warn!("phase {phase}: bullwhip report is degenerate (constant demand)");
        }
        report.entries.extend(inventory.bullwhip.clone());
        phases.push(PhaseInventory {
            phase,
            platforms,
            inventory,
        });
    }
    Ok((report, phases))
}

fn phase_text(p: &PhaseInventory, report: &BullwhipReport, best: &[(Phase, Platform, SearchOutcome)]) -> anyhow::Result<String> {
    let mut t = String::new();
    writeln!(t, "phase {}", p.phase)?;
    writeln!(t)?;
    writeln!(t, "{:<8} {:>12} {:>12} {:>8} {:>6}", "platform", "rmse", "mae", "r2", "n")?;
    for o in &p.platforms {
        let r = &o.metrics;
        writeln!(t, "{:<8} {:>12.3} {:>12.3} {:>8.4} {:>6}", r.platform, r.rmse, r.mae, r.r2, r.n)?;
    }
    writeln!(t)?;
    for (ph, platform, s) in best.iter().filter(|(ph, _, _)| *ph == p.phase) {
        let hp = &s.best.hyperparams;
        writeln!(
            t,
            "best phase {ph} {platform}: trial {} of {} epochs={} units={} batch={} dropout={} lr={} layers={} val_loss={:.6}",
            s.best.index,
            s.trials.len(),
            hp.epochs,
            hp.units,
            hp.batch_size,
            hp.dropout,
            hp.learning_rate,
            hp.layers,
            s.best.val_loss
        )?;
    }
    writeln!(t)?;
    let phase_only = BullwhipReport {
        entries: report.entries.iter().filter(|e| e.phase == p.phase.number()).cloned().collect(),
    };
    t.push_str(&phase_only.summary());
    Ok(t)
}

pub struct PipelineOutcome {
    pub dataset: Dataset,
    pub searches: Vec<(Phase, Platform, SearchOutcome)>,
    pub trained: Vec<PlatformOutcome>,
    pub bullwhip: BullwhipReport,
    pub phases: Vec<PhaseInventory>,
    pub manifest: RunManifest,
}

/// Every stage in order; a failing stage aborts with its name.
pub fn pipeline(cfg: &PipelineConfig) -> anyhow::Result<PipelineOutcome> {
    if cfg.platforms.len() != Platform::ALL.len() {
        bail!("the pipeline needs both platforms for total-demand inventory");
    }
    let mut m = RunManifest::new("pipeline", cfg)?;
    let ds = m.time("simulate", |m| simulate(cfg, m))?;
    m.time("eda", |m| eda_report(cfg, &ds, m))?;
    let searches = m.time("tune", |m| tune(cfg, &ds, m))?;
    let trained = m.time("train", |m| train_models(cfg, &ds, m))?;
    let (report, phases) = m.time("bullwhip", |m| bullwhip(cfg, &ds, m))?;
    m.time("report", |m| {
        for p in &phases {
            let text = phase_text(p, &report, &searches)?;
            m.write(&cfg.paths.reports().join(format!("report_phase{}.txt", p.phase.number())), text.as_bytes())?;
        }
        Ok(())
    })?;
    m.save(&cfg.paths.out_dir)?;
    Ok(PipelineOutcome {
        dataset: ds,
        searches,
        trained,
        bullwhip: report,
        phases,
        manifest: m,
    })
}
