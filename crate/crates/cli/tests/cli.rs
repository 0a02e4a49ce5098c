use std::path::Path;
use std::process::Command;

use foodcast_cli::commands;
use foodcast_cli::manifest::sha256_hex;
use foodcast_cli::{PhaseSelection, PipelineConfig, RunManifest};
use foodcast_core::HyperParams;

fn small_config(dir: &Path, days: i64) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.paths.out_dir = dir.to_path_buf();
    cfg.sim.end_date = cfg.sim.start_date + chrono_days(days - 1);
    cfg.hyperparams = Some(HyperParams {
        epochs: 3,
        units: 4,
        batch_size: 16,
        dropout: 0.1,
        learning_rate: 0.01,
        layers: 1,
    });
    cfg
}

fn chrono_days(n: i64) -> chrono::Duration {
    chrono::Duration::days(n)
}

fn manifest(cfg: &PipelineConfig, name: &str) -> RunManifest {
    RunManifest::new(name, cfg).unwrap()
}

#[test]
fn one_day_simulation_has_five_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 1);
    let ds = commands::simulate(&cfg, &mut manifest(&cfg, "simulate")).unwrap();
    assert_eq!(ds.len(), 5);
    let text = std::fs::read_to_string(cfg.paths.dataset()).unwrap();
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn simulation_checksum_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 30);
    let mut a = manifest(&cfg, "simulate");
    commands::simulate(&cfg, &mut a).unwrap();
    let mut b = manifest(&cfg, "simulate");
    commands::simulate(&cfg, &mut b).unwrap();
    assert_eq!(a.artifacts, b.artifacts);
    let bytes = std::fs::read(cfg.paths.dataset()).unwrap();
    assert_eq!(a.artifacts[0].sha256, sha256_hex(&bytes));
}

#[test]
fn eda_on_a_week_has_one_rolling_variance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 7);
    let ds = commands::simulate(&cfg, &mut manifest(&cfg, "simulate")).unwrap();
    let report = commands::eda_report(&cfg, &ds, &mut manifest(&cfg, "eda")).unwrap();
    assert!(report.series.iter().all(|s| s.rolling_variance.len() == 1));
    assert!(cfg.paths.reports().join("eda_summary.txt").exists());
}

#[test]
fn eda_cumulative_mean_ends_at_overall_mean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 120);
    let ds = commands::simulate(&cfg, &mut manifest(&cfg, "simulate")).unwrap();
    let report = commands::eda_report(&cfg, &ds, &mut manifest(&cfg, "eda")).unwrap();
    for s in &report.series {
        let mean = s.daily_average.iter().sum::<f64>() / s.daily_average.len() as f64;
        assert!((s.cumulative_mean.last().unwrap() - mean).abs() < 1e-9 * mean.abs().max(1.0));
    }
}

#[test]
fn malformed_row_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 3);
    commands::simulate(&cfg, &mut manifest(&cfg, "simulate")).unwrap();
    let path = cfg.paths.dataset();
    let mut lines: Vec<String> = std::fs::read_to_string(&path).unwrap().lines().map(String::from).collect();
    lines[4] = lines[4].replacen(',', ",oops,", 1);
    std::fs::write(&path, lines.join("\n")).unwrap();
    let err = commands::load_dataset(&path).unwrap_err();
    assert!(format!("{err:#}").contains("line 4") || format!("{err:#}").contains("line 5"), "{err:#}");
}

#[test]
fn single_config_tuning_is_one_reproducible_trial() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path(), 80);
    cfg.phases = PhaseSelection::Two;
    let ds = commands::simulate(&cfg, &mut manifest(&cfg, "simulate")).unwrap();
    let mut a = manifest(&cfg, "tune");
    let out = commands::tune(&cfg, &ds, &mut a).unwrap();
    assert_eq!(out.len(), 2);
    assert!(out.iter().all(|(_, _, s)| s.trials.len() == 1 && s.best.index == 0));
    let mut b = manifest(&cfg, "tune");
    commands::tune(&cfg, &ds, &mut b).unwrap();
    assert_eq!(a.artifacts, b.artifacts);
}

#[test]
fn stages_require_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 80);
    let ds = commands::simulate(&cfg, &mut manifest(&cfg, "simulate")).unwrap();
    let err = commands::train_models(&cfg, &ds, &mut manifest(&cfg, "train")).unwrap_err();
    assert!(format!("{err:#}").contains("tune"));
    let err = commands::bullwhip(&cfg, &ds, &mut manifest(&cfg, "bullwhip")).err().unwrap();
    assert!(format!("{err:#}").contains("model"));
}

#[test]
fn pipeline_is_reproducible_and_respects_phase_selection() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 100);
    let out = commands::pipeline(&cfg).unwrap();
    assert!(out.bullwhip.is_complete(&[1, 2]));
    let reports = cfg.paths.reports();
    for f in ["report_phase1.txt", "report_phase2.txt", "bullwhip_phase1.csv", "metrics_phase2.csv"] {
        assert!(reports.join(f).exists(), "{f}");
    }
    let checksums = |m: &RunManifest| {
        m.artifacts
            .iter()
            .map(|a| (a.path.clone(), a.sha256.clone()))
            .collect::<Vec<_>>()
    };
    let again = commands::pipeline(&cfg).unwrap();
    assert_eq!(checksums(&out.manifest), checksums(&again.manifest));

    let dir1 = tempfile::tempdir().unwrap();
    let mut one = small_config(dir1.path(), 100);
    one.phases = PhaseSelection::One;
    commands::pipeline(&one).unwrap();
    let r = one.paths.reports();
    assert!(r.join("report_phase1.txt").exists());
    assert!(!r.join("report_phase2.txt").exists());
    assert!(!one.paths.models().join("phase2_zomato.json").exists());
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_foodcast"))
}

#[test]
fn binary_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, "[sim]\nend_date = \"2023-01-05\"\n").unwrap();
    let ok = bin()
        .args(["simulate", "--config"])
        .arg(&cfg_path)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("dataset.csv").exists());
    assert!(dir.path().join("manifest-simulate.json").exists());

    std::fs::write(&cfg_path, "[split]\ntrain_fraction = 2.0\n").unwrap();
    let bad = bin().args(["simulate", "--config"]).arg(&cfg_path).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("fraction"));

    let missing = bin()
        .arg("bullwhip")
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!missing.status.success());
}
