//! Exhaustive hyperparameter grid search.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lstm::{train, HyperParams, LstmNetwork};
use crate::preprocess::WindowedDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperGrid {
    pub epochs: Vec<usize>,
    pub units: Vec<usize>,
    pub batch_size: Vec<usize>,
    pub dropout: Vec<f64>,
    pub learning_rate: Vec<f64>,
    pub layers: Vec<usize>,
}

impl HyperGrid {
    /// Three points per axis, 729 combinations.
    pub fn full() -> Self {
        HyperGrid {
            epochs: vec![50, 100, 200],
            units: vec![32, 64, 128],
            batch_size: vec![16, 32, 64],
            dropout: vec![0.1, 0.3, 0.5],
            learning_rate: vec![0.001, 0.005, 0.01],
            layers: vec![1, 2, 3],
        }
    }

    /// Two points per axis, 64 combinations.
    pub fn coarse() -> Self {
        HyperGrid {
            epochs: vec![50, 100],
            units: vec![32, 64],
            batch_size: vec![32, 64],
            dropout: vec![0.1, 0.3],
            learning_rate: vec![0.005, 0.01],
            layers: vec![1, 2],
        }
    }

    pub fn single(hp: &HyperParams) -> Self {
        HyperGrid {
            epochs: vec![hp.epochs],
            units: vec![hp.units],
            batch_size: vec![hp.batch_size],
            dropout: vec![hp.dropout],
            learning_rate: vec![hp.learning_rate],
            layers: vec![hp.layers],
        }
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
            * self.units.len()
            * self.batch_size.len()
            * self.dropout.len()
            * self.learning_rate.len()
            * self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let axes = [
            ("epochs", self.epochs.len()),
            ("units", self.units.len()),
            ("batch_size", self.batch_size.len()),
            ("dropout", self.dropout.len()),
            ("learning_rate", self.learning_rate.len()),
            ("layers", self.layers.len()),
        ];
        for (name, n) in axes {
            if n == 0 {
                return Err(Error::config(format!("grid.{name}"), "axis is empty"));
            }
        }
        fn within<T: PartialOrd + Copy + std::fmt::Display>(name: &str, v: &[T], lo: T, hi: T) -> Result<()> {
            match v.iter().find(|x| !(**x >= lo && **x <= hi)) {
                Some(x) => Err(Error::config(format!("grid.{name}"), format!("{x} outside [{lo}, {hi}]"))),
                None => Ok(()),
            }
        }
        within("epochs", &self.epochs, 1, 200)?;
        within("units", &self.units, 1, 128)?;
        within("batch_size", &self.batch_size, 1, 64)?;
        within("dropout", &self.dropout, 0.0, 0.5)?;
        within("learning_rate", &self.learning_rate, 1e-6, 0.01)?;
        within("layers", &self.layers, 1, 3)?;
        Ok(())
    }
}

/// Cartesian product with `layers` varying fastest and `epochs` slowest.
pub fn enumerate_grid(grid: &HyperGrid) -> Result<Vec<HyperParams>> {
    grid.validate()?;
    let mut out = Vec::with_capacity(grid.len());
    for &epochs in &grid.epochs {
        for &units in &grid.units {
            for &batch_size in &grid.batch_size {
                for &dropout in &grid.dropout {
                    for &learning_rate in &grid.learning_rate {
                        for &layers in &grid.layers {
                            out.push(HyperParams {
                                epochs,
                                units,
                                batch_size,
                                dropout,
                                learning_rate,
                                layers,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: usize,
    pub hyperparams: HyperParams,
    pub seed: u64,
    /// Final validation loss, `None` when the trial diverged.
    pub val_loss: Option<f64>,
    pub val_curve: Vec<f64>,
    pub train_curve: Vec<f64>,
    pub diverged: bool,
    #[serde(skip)]
    pub seconds: f64,
}

impl TrialResult {
    fn rank_key(&self) -> (f64, usize, usize, usize) {
        (
            self.val_loss.unwrap_or(f64::INFINITY),
            self.hyperparams.layers,
            self.hyperparams.units,
            self.index,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestConfig {
    pub index: usize,
    pub hyperparams: HyperParams,
    pub seed: u64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: BestConfig,
    /// Every trial, sorted by index.
    pub trials: Vec<TrialResult>,
}

pub fn trial_seed(base_seed: u64, index: usize) -> u64 {
    base_seed ^ index as u64
}

fn run_trial(
    train_set: &WindowedDataset,
    val: &WindowedDataset,
    index: usize,
    hp: &HyperParams,
    base_seed: u64,
) -> Result<(TrialResult, Option<LstmNetwork>)> {
    let seed = trial_seed(base_seed, index);
    let mut result = TrialResult {
        index,
        hyperparams: hp.clone(),
        seed,
        val_loss: None,
        val_curve: Vec::new(),
        train_curve: Vec::new(),
        diverged: false,
        seconds: 0.0,
    };
    match train(train_set, Some(val), hp, seed) {
        Ok((net, report)) => {
            result.val_loss = report.final_val_loss();
            result.val_curve = report.val_loss;
            result.train_curve = report.train_loss;
            result.seconds = report.seconds;
            Ok((result, Some(net)))
        }
        Err(Error::Diverged { epoch, batch }) => {
            log::warn!("trial {index} diverged at epoch {epoch}, batch {batch}");
            result.diverged = true;
            Ok((result, None))
        }
        Err(e) => Err(e),
    }
}

fn select(trials: Vec<TrialResult>) -> Result<SearchOutcome> {
    let best = trials
        .iter()
        .filter(|t| t.val_loss.is_some())
        .min_by(|a, b| {
            let (ka, kb) = (a.rank_key(), b.rank_key());
            ka.0.total_cmp(&kb.0)
                .then(ka.1.cmp(&kb.1))
                .then(ka.2.cmp(&kb.2))
                .then(ka.3.cmp(&kb.3))
        })
        .ok_or(Error::AllTrialsDiverged(trials.len()))?;
    let best = BestConfig {
        index: best.index,
        hyperparams: best.hyperparams.clone(),
        seed: best.seed,
        val_loss: best.val_loss.unwrap(),
    };
    Ok(SearchOutcome { best, trials })
}

fn check_splits(train_set: &WindowedDataset, val: &WindowedDataset) -> Result<()> {
    for (name, d) in [("training", train_set), ("validation", val)] {
        if d.is_empty() {
            return Err(Error::InsufficientData {
                what: format!("{name} windows for grid search"),
                needed: 1,
                available: 0,
            });
        }
    }
    Ok(())
}

/// Trains one model per grid point in parallel and picks the lowest final
/// validation loss.
pub fn grid_search(
    train_set: &WindowedDataset,
    val: &WindowedDataset,
    grid: &HyperGrid,
    base_seed: u64,
) -> Result<SearchOutcome> {
    check_splits(train_set, val)?;
    let combos = enumerate_grid(grid)?;
    let trials = combos
        .par_iter()
        .enumerate()
        .map(|(i, hp)| run_trial(train_set, val, i, hp, base_seed).map(|(t, _)| t))
        .collect::<Result<Vec<_>>>()?;
    select(trials)
}

/// Sequential search that runs trials in `order` (a permutation of trial
/// indices). The outcome never depends on the order.
pub fn grid_search_in_order(
    train_set: &WindowedDataset,
    val: &WindowedDataset,
    grid: &HyperGrid,
    base_seed: u64,
    order: &[usize],
) -> Result<SearchOutcome> {
    check_splits(train_set, val)?;
    let combos = enumerate_grid(grid)?;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..combos.len()).collect::<Vec<_>>() {
        return Err(Error::InvalidInput("execution order is not a permutation of the grid".into()));
    }
    let mut trials = Vec::with_capacity(combos.len());
    for &i in order {
        trials.push(run_trial(train_set, val, i, &combos[i], base_seed)?.0);
    }
    trials.sort_by_key(|t| t.index);
    select(trials)
}

/// One JSON record per trial, in index order. Timings are left out so that
/// reruns produce identical logs.
pub fn write_trials_log<W: Write>(mut w: W, trials: &[TrialResult]) -> Result<()> {
    for t in trials {
        serde_json::to_writer(&mut w, t)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Long-format validation curves: `trial,epoch,val_loss`.
pub fn write_curves_csv<W: Write>(w: W, trials: &[TrialResult]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["trial", "epoch", "train_loss", "val_loss"])?;
    for t in trials {
        for (e, (tr, v)) in t.train_curve.iter().zip(&t.val_curve).enumerate() {
            out.write_record([t.index.to_string(), (e + 1).to_string(), tr.to_string(), v.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array2, Array3};

    fn toy(n: usize, offset: usize) -> WindowedDataset {
        let x = Array3::from_shape_fn((n, 3, 1), |(i, t, _)| ((i + offset + t) as f64 * 0.4).sin());
        let y = Array2::from_shape_fn((n, 1), |(i, _)| ((i + offset + 3) as f64 * 0.4).sin());
        WindowedDataset {
            phase: 2,
            x,
            y,
            feature_names: vec!["v".into()],
            target_days: (0..n).collect(),
        }
    }

    fn tiny_grid() -> HyperGrid {
        HyperGrid {
            epochs: vec![3, 6],
            units: vec![2, 4],
            batch_size: vec![8],
            dropout: vec![0.0],
            learning_rate: vec![0.005, 0.01],
            layers: vec![1],
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(enumerate_grid(&HyperGrid::full()).unwrap().len(), 729);
        assert_eq!(enumerate_grid(&HyperGrid::coarse()).unwrap().len(), 64);
        let one = HyperGrid::single(&HyperParams::default());
        assert_eq!(enumerate_grid(&one).unwrap(), vec![HyperParams::default()]);
        let empty = HyperGrid { layers: vec![], ..HyperGrid::coarse() };
        assert!(enumerate_grid(&empty).is_err());
        let out_of_range = HyperGrid { learning_rate: vec![0.5], ..HyperGrid::coarse() };
        assert!(enumerate_grid(&out_of_range).is_err());
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let combos = enumerate_grid(&tiny_grid()).unwrap();
        assert_eq!(combos.len(), 8);
        assert_eq!((combos[0].epochs, combos[0].units, combos[0].learning_rate), (3, 2, 0.005));
        assert_eq!((combos[1].epochs, combos[1].units, combos[1].learning_rate), (3, 2, 0.01));
        assert_eq!((combos[2].epochs, combos[2].units), (3, 4));
        assert_eq!(combos[4].epochs, 6);
    }

    #[test]
    fn single_trial_wins() {
        let (t, v) = (toy(30, 0), toy(10, 30));
        let hp = HyperParams { epochs: 2, units: 3, batch_size: 8, dropout: 0.0, learning_rate: 0.01, layers: 1 };
        let out = grid_search(&t, &v, &HyperGrid::single(&hp), 5).unwrap();
        assert_eq!(out.best.hyperparams, hp);
        assert_eq!(out.best.seed, 5);
        assert_eq!(out.trials.len(), 1);
    }

    #[test]
    fn parallel_matches_sequential() {
        let (t, v) = (toy(30, 0), toy(10, 30));
        let par = grid_search(&t, &v, &tiny_grid(), 9).unwrap();
        let seq = grid_search_in_order(&t, &v, &tiny_grid(), 9, &[7, 3, 0, 5, 1, 6, 2, 4]).unwrap();
        assert_eq!(par.best, seq.best);
        let untimed = |ts: &[TrialResult]| {
            ts.iter().map(|t| TrialResult { seconds: 0.0, ..t.clone() }).collect::<Vec<_>>()
        };
        assert_eq!(untimed(&par.trials), untimed(&seq.trials));
        assert!(par.trials.iter().all(|t| t.val_curve.len() == t.hyperparams.epochs));
    }

    #[test]
    fn lower_loss_wins_and_ties_prefer_small_models() {
        let hp = |units, layers| HyperParams { units, layers, ..HyperParams::default() };
        let trial = |index, loss: Option<f64>, units, layers| TrialResult {
            index,
            hyperparams: hp(units, layers),
            seed: index as u64,
            val_loss: loss,
            val_curve: vec![],
            train_curve: vec![],
            diverged: loss.is_none(),
            seconds: 0.0,
        };
        let out = select(vec![trial(0, Some(0.2), 32, 1), trial(1, Some(0.1), 64, 2)]).unwrap();
        assert_eq!(out.best.index, 1);
        let out = select(vec![
            trial(0, Some(0.1), 64, 2),
            trial(1, Some(0.1), 64, 1),
            trial(2, Some(0.1), 32, 1),
            trial(3, Some(0.1), 32, 1),
            trial(4, None, 16, 1),
        ])
        .unwrap();
        assert_eq!(out.best.index, 2);
        assert!(matches!(select(vec![trial(0, None, 32, 1)]), Err(Error::AllTrialsDiverged(1))));
    }

    #[test]
    fn log_is_reproducible() {
        let (t, v) = (toy(20, 0), toy(8, 20));
        let run = || {
            let out = grid_search(&t, &v, &tiny_grid(), 1).unwrap();
            let mut buf = Vec::new();
            write_trials_log(&mut buf, &out.trials).unwrap();
            buf
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.iter().filter(|b| **b == b'\n').count(), 8);
    }

    #[test]
    fn empty_split_is_an_error() {
        let v = toy(8, 0);
        let mut t = toy(1, 0);
        t.x = Array3::zeros((0, 3, 1));
        t.y = Array2::zeros((0, 1));
        t.target_days.clear();
        assert!(grid_search(&t, &v, &tiny_grid(), 0).is_err());
    }
}
