use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use foodcast_core::experiment::ExperimentConfig;
use foodcast_core::inventory::NewsvendorParams;
use foodcast_core::preprocess::SplitSpec;
use foodcast_core::tuner::HyperGrid;
use foodcast_core::{HyperParams, Phase, Platform, SimConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseSelection {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "both")]
    Both,
}

impl PhaseSelection {
    pub fn phases(self) -> Vec<Phase> {
        match self {
            PhaseSelection::One => vec![Phase::Intraday],
            PhaseSelection::Two => vec![Phase::Daily],
            PhaseSelection::Both => Phase::ALL.to_vec(),
        }
    }
}

impl std::str::FromStr for PhaseSelection {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "1" => Ok(PhaseSelection::One),
            "2" => Ok(PhaseSelection::Two),
            "both" => Ok(PhaseSelection::Both),
            other => bail!("phase must be 1, 2 or both, got `{other}`"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridPreset {
    Full,
    Coarse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Preset(GridPreset),
    Custom(HyperGrid),
}

impl GridSpec {
    pub fn resolve(&self) -> HyperGrid {
        match self {
            GridSpec::Preset(GridPreset::Full) => HyperGrid::full(),
            GridSpec::Preset(GridPreset::Coarse) => HyperGrid::coarse(),
            GridSpec::Custom(g) => g.clone(),
        }
    }

    /// `full`, `coarse`, or a path to a TOML grid file.
    pub fn parse_arg(arg: &str) -> anyhow::Result<Self> {
        match arg {
            "full" => Ok(GridSpec::Preset(GridPreset::Full)),
            "coarse" => Ok(GridSpec::Preset(GridPreset::Coarse)),
            path => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading grid file {path}"))?;
                let grid: HyperGrid = toml::from_str(&text).with_context(|| format!("parsing grid file {path}"))?;
                Ok(GridSpec::Custom(grid))
            }
        }
    }
}

/// Output locations, relative to `out_dir` unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub out_dir: PathBuf,
    pub dataset: PathBuf,
    pub models: PathBuf,
    pub reports: PathBuf,
    pub trials: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            out_dir: PathBuf::from("out"),
            dataset: PathBuf::from("dataset.csv"),
            models: PathBuf::from("models"),
            reports: PathBuf::from("reports"),
            trials: PathBuf::from("trials"),
        }
    }
}

impl Paths {
    fn under(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }

    pub fn dataset(&self) -> PathBuf {
        self.under(&self.dataset)
    }

    pub fn models(&self) -> PathBuf {
        self.under(&self.models)
    }

    pub fn reports(&self) -> PathBuf {
        self.under(&self.reports)
    }

    pub fn trials(&self) -> PathBuf {
        self.under(&self.trials)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; overrides `sim.seed`.
    pub seed: u64,
    pub phases: PhaseSelection,
    pub platforms: Vec<Platform>,
    pub paths: Paths,
    pub phase1_days: usize,
    pub grid: GridSpec,
    /// Fixed hyperparameters; when present the grid search is skipped.
    pub hyperparams: Option<HyperParams>,
    pub split: SplitSpec,
    pub newsvendor: NewsvendorParams,
    pub sim: SimConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 2023,
            phases: PhaseSelection::Both,
            platforms: Platform::ALL.to_vec(),
            paths: Paths::default(),
            phase1_days: 1,
            grid: GridSpec::Preset(GridPreset::Coarse),
            hyperparams: None,
            split: SplitSpec::default(),
            newsvendor: NewsvendorParams::default(),
            sim: SimConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> anyhow::Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.effective_sim().validate()?;
        self.split.validate()?;
        self.newsvendor.validate()?;
        if self.platforms.is_empty() {
            bail!("platforms: select at least one platform");
        }
        if self.phase1_days == 0 {
            bail!("phase1_days: must be at least 1");
        }
        match &self.hyperparams {
            Some(hp) => hp.validate()?,
            None => self.grid.resolve().validate()?,
        }
        Ok(())
    }

    pub fn effective_sim(&self) -> SimConfig {
        SimConfig {
            seed: self.seed,
            ..self.sim.clone()
        }
    }

    pub fn hyper_grid(&self) -> HyperGrid {
        match &self.hyperparams {
            Some(hp) => HyperGrid::single(hp),
            None => self.grid.resolve(),
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            seed: self.seed,
            split: self.split.clone(),
            phase1_days: self.phase1_days,
            grid: self.hyper_grid(),
            newsvendor: self.newsvendor.clone(),
        }
    }

    /// Canonical text the config hash is computed over.
    pub fn canonical(&self) -> anyhow::Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_files_fill_defaults() {
        let cfg = PipelineConfig::from_toml_str("seed = 5\nphases = \"2\"\ngrid = \"full\"\n").unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.phases.phases(), vec![Phase::Daily]);
        assert_eq!(cfg.hyper_grid().len(), 729);
        assert_eq!(cfg.effective_sim().seed, 5);
        assert_eq!(cfg.paths.dataset(), PathBuf::from("out/dataset.csv"));
    }

    #[test]
    fn custom_grid_and_fixed_hyperparams() {
        let text = "[grid]\nepochs=[50]\nunits=[32]\nbatch_size=[16]\ndropout=[0.1]\nlearning_rate=[0.01]\nlayers=[1,2]\n";
        assert_eq!(PipelineConfig::from_toml_str(text).unwrap().hyper_grid().len(), 2);
        let text = "[hyperparams]\nepochs=10\nunits=8\nbatch_size=16\ndropout=0.1\nlearning_rate=0.01\nlayers=1\n";
        assert_eq!(PipelineConfig::from_toml_str(text).unwrap().hyper_grid().len(), 1);
    }

    #[test]
    fn field_level_errors() {
        assert!(PipelineConfig::from_toml_str("bogus = 1").is_err());
        let err = PipelineConfig::from_toml_str("[split]\ntrain_fraction = 0.9\n").unwrap_err();
        assert!(format!("{err:#}").contains("fraction"), "{err:#}");
        assert!(PipelineConfig::from_toml_str("platforms = []").is_err());
        assert!(PipelineConfig::from_toml_str("phases = \"3\"").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = PipelineConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(PipelineConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn readme_example_is_the_default() {
        let readme = include_str!("../../../README.md");
        let block = readme
            .split("```toml\n")
            .nth(1)
            .and_then(|rest| rest.split("```").next())
            .unwrap();
        assert_eq!(PipelineConfig::from_toml_str(block).unwrap(), PipelineConfig::default());
    }
}
