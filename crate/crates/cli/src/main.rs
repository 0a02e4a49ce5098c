use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use foodcast_cli::commands;
use foodcast_cli::{GridSpec, PhaseSelection, PipelineConfig, RunManifest};
use foodcast_core::Platform;

#[derive(Parser)]
#[command(name = "foodcast", version, about = "Food-delivery demand simulation, LSTM forecasting and inventory analysis")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML pipeline configuration; defaults apply to anything it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// 1, 2 or both.
    #[arg(long, global = true)]
    phase: Option<PhaseSelection>,
    /// Zomato or Swiggy; both when omitted.
    #[arg(long, global = true)]
    platform: Option<String>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// full, coarse, or a TOML grid file.
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Dataset CSV to read instead of the configured one.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Worker threads for the grid search (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the demand dataset.
    Simulate,
    /// Exploratory series, histogram and Q-Q data.
    Eda,
    /// Grid search per phase and platform.
    Tune,
    /// Train the best configuration and score it on the test split.
    Train,
    /// Inventory plans and bullwhip ratios from trained models.
    Bullwhip,
    /// Every stage end to end.
    Pipeline,
}

fn build_config(c: &Common) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &c.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(phase) = c.phase {
        cfg.phases = phase;
    }
    if let Some(p) = &c.platform {
        cfg.platforms = vec![p.parse::<Platform>()?];
    }
    if let Some(dir) = &c.out_dir {
        cfg.paths.out_dir = dir.clone();
    }
    if let Some(g) = &c.grid {
        cfg.grid = GridSpec::parse_arg(g)?;
        cfg.hyperparams = None;
    }
    if let Some(d) = &c.dataset {
        cfg.paths.dataset = std::path::absolute(d)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = build_config(&cli.common)?;
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    if let Command::Pipeline = cli.command {
        let out = commands::pipeline(&cfg)?;
        print!("{}", out.bullwhip.summary());
        return Ok(());
    }
    let name = match cli.command {
        Command::Simulate => "simulate",
        Command::Eda => "eda",
        Command::Tune => "tune",
        Command::Train => "train",
        Command::Bullwhip => "bullwhip",
        Command::Pipeline => unreachable!(),
    };
    let mut m = RunManifest::new(name, &cfg)?;
    match cli.command {
        Command::Simulate => {
            m.time(name, |m| commands::simulate(&cfg, m))?;
        }
        Command::Eda => {
            let ds = commands::load_dataset(&cfg.paths.dataset())?;
            m.time(name, |m| commands::eda_report(&cfg, &ds, m))?;
        }
        Command::Tune => {
            let ds = commands::load_dataset(&cfg.paths.dataset())?;
            for (phase, platform, s) in m.time(name, |m| commands::tune(&cfg, &ds, m))? {
                println!("phase {phase} {platform}: best trial {} val_loss {:.6}", s.best.index, s.best.val_loss);
            }
        }
        Command::Train => {
            let ds = commands::load_dataset(&cfg.paths.dataset())?;
            for o in m.time(name, |m| commands::train_models(&cfg, &ds, m))? {
                let r = &o.metrics;
                println!("phase {} {}: rmse {:.3} mae {:.3} r2 {:.4}", r.phase, r.platform, r.rmse, r.mae, r.r2);
            }
        }
        Command::Bullwhip => {
            let ds = commands::load_dataset(&cfg.paths.dataset())?;
            let (report, _) = m.time(name, |m| commands::bullwhip(&cfg, &ds, m))?;
            print!("{}", report.summary());
        }
        Command::Pipeline => unreachable!(),
    }
    m.save(&cfg.paths.out_dir)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
