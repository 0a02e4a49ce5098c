use std::io::{Read, Write};

use ndarray::{s, Array2, Array3, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::sim::SLOTS_PER_DAY;
use crate::{Error, Result};

/// Days of history in one Phase-2 input window.
pub const PHASE2_WINDOW: usize = 6;

/// Supervised tensors from sliding windows.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub phase: u8,
    /// `[samples × timesteps × features]`
    pub x: Array3<f64>,
    /// `[samples × outputs]`
    pub y: Array2<f64>,
    pub feature_names: Vec<String>,
    /// Day index (in the source dataset) each sample predicts.
    pub target_days: Vec<usize>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.x.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn timesteps(&self) -> usize {
        self.x.dim().1
    }

    pub fn features(&self) -> usize {
        self.x.dim().2
    }

    pub fn outputs(&self) -> usize {
        self.y.ncols()
    }

    fn empty(phase: u8, timesteps: usize, outputs: usize, names: &[String]) -> Self {
        WindowedDataset {
            phase,
            x: Array3::zeros((0, timesteps, names.len())),
            y: Array2::zeros((0, outputs)),
            feature_names: names.to_vec(),
            target_days: Vec::new(),
        }
    }

    /// Shifts target day indices by `days`.
    pub fn offset_days(mut self, days: usize) -> Self {
        for d in &mut self.target_days {
            *d += days;
        }
        self
    }

    /// Flat binary container: a JSON header line followed by row-major
    /// little-endian f64 values of X then Y.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let header = BinaryHeader {
            format: "foodcast-windows/1".into(),
            phase: self.phase,
            samples: self.len(),
            timesteps: self.timesteps(),
            features: self.features(),
            outputs: self.outputs(),
            feature_names: self.feature_names.clone(),
            target_days: self.target_days.clone(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for v in self.x.iter().chain(self.y.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: R) -> Result<Self> {
        let mut r = std::io::BufReader::new(r);
        let mut line = String::new();
        std::io::BufRead::read_line(&mut r, &mut line)?;
        let h: BinaryHeader = serde_json::from_str(line.trim_end())?;
        if h.format != "foodcast-windows/1" {
            return Err(Error::InvalidInput(format!("unknown window format {}", h.format)));
        }
        if h.feature_names.len() != h.features || h.target_days.len() != h.samples {
            return Err(Error::InvalidInput("window header is inconsistent".into()));
        }
        let mut read = |n: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; n * 8];
            r.read_exact(&mut buf)?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let x = read(h.samples * h.timesteps * h.features)?;
        let y = read(h.samples * h.outputs)?;
        Ok(WindowedDataset {
            phase: h.phase,
            x: Array3::from_shape_vec((h.samples, h.timesteps, h.features), x)
                .map_err(|e| Error::InvalidInput(e.to_string()))?,
            y: Array2::from_shape_vec((h.samples, h.outputs), y)
                .map_err(|e| Error::InvalidInput(e.to_string()))?,
            feature_names: h.feature_names,
            target_days: h.target_days,
        })
    }

    /// One CSV row per sample: target day, flattened inputs, outputs.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header = vec!["target_day".to_string()];
        for t in 0..self.timesteps() {
            header.extend(self.feature_names.iter().map(|f| format!("t{t}:{f}")));
        }
        header.extend((0..self.outputs()).map(|j| format!("y{j}")));
        out.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![self.target_days[i].to_string()];
            rec.extend(self.x.slice(s![i, .., ..]).iter().map(|v| v.to_string()));
            rec.extend(self.y.row(i).iter().map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct BinaryHeader {
    format: String,
    phase: u8,
    samples: usize,
    timesteps: usize,
    features: usize,
    outputs: usize,
    feature_names: Vec<String>,
    target_days: Vec<usize>,
}

fn check_rows(rows: ArrayView2<f64>, targets: &[f64], names: &[String]) -> Result<()> {
    if rows.nrows() != targets.len() {
        return Err(Error::shape("window targets", rows.nrows(), targets.len()));
    }
    if rows.ncols() != names.len() {
        return Err(Error::shape("window feature names", rows.ncols(), names.len()));
    }
    Ok(())
}

/// Phase 1: `n` days of slot rows predict the next day's five slot targets.
/// `rows` and `targets` hold one entry per slot, five per day.
pub fn window_phase1(
    rows: ArrayView2<f64>,
    targets: &[f64],
    names: &[String],
    n: usize,
) -> Result<WindowedDataset> {
    check_rows(rows, targets, names)?;
    if n == 0 {
        return Err(Error::config("phase1_days", "window must cover at least one day"));
    }
    if rows.nrows() % SLOTS_PER_DAY != 0 {
        return Err(Error::InvalidInput("phase-1 rows must be whole days".into()));
    }
    let days = rows.nrows() / SLOTS_PER_DAY;
    let steps = n * SLOTS_PER_DAY;
    if days <= n {
        log::warn!("phase-1 window of {n} days needs {} days, have {days}", n + 1);
        return Ok(WindowedDataset::empty(1, steps, SLOTS_PER_DAY, names));
    }
    let samples = days - n;
    let mut x = Array3::zeros((samples, steps, rows.ncols()));
    let mut y = Array2::zeros((samples, SLOTS_PER_DAY));
    for d in 0..samples {
        let start = d * SLOTS_PER_DAY;
        x.slice_mut(s![d, .., ..]).assign(&rows.slice(s![start..start + steps, ..]));
        let t = (d + n) * SLOTS_PER_DAY;
        for j in 0..SLOTS_PER_DAY {
            y[[d, j]] = targets[t + j];
        }
    }
    Ok(WindowedDataset {
        phase: 1,
        x,
        y,
        feature_names: names.to_vec(),
        target_days: (n..days).collect(),
    })
}

/// Phase 2: six daily rows predict the next day's target.
pub fn window_phase2(
    rows: ArrayView2<f64>,
    targets: &[f64],
    names: &[String],
) -> Result<WindowedDataset> {
    check_rows(rows, targets, names)?;
    let days = rows.nrows();
    if days <= PHASE2_WINDOW {
        return Err(Error::InsufficientData {
            what: "phase-2 window".into(),
            needed: PHASE2_WINDOW + 1,
            available: days,
        });
    }
    let samples = days - PHASE2_WINDOW;
    let mut x = Array3::zeros((samples, PHASE2_WINDOW, rows.ncols()));
    let mut y = Array2::zeros((samples, 1));
    for d in 0..samples {
        x.slice_mut(s![d, .., ..])
            .assign(&rows.slice(s![d..d + PHASE2_WINDOW, ..]));
        y[[d, 0]] = targets[d + PHASE2_WINDOW];
    }
    Ok(WindowedDataset {
        phase: 2,
        x,
        y,
        feature_names: names.to_vec(),
        target_days: (PHASE2_WINDOW..days).collect(),
    })
}
