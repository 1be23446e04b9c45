//! Per-step loss recording and the `trace.csv` artifact.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Result;

pub const TRACE_FILE: &str = "trace.csv";

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub lr: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpochStats {
    pub mean_loss: f64,
    /// Validation metric for the epoch: reconstruction loss when
    /// pretraining, overall accuracy when fine-tuning.
    pub val_metric: f64,
    pub seconds: f64,
}

/// Snapshot handed to the per-epoch progress callback.
#[derive(Debug, Clone, Copy)]
pub struct EpochReport {
    /// 1-based epoch index.
    pub epoch: usize,
    pub total_epochs: usize,
    pub train_loss: f64,
    pub val_metric: f64,
    pub seconds: f64,
    /// Whether this epoch's checkpoint replaced the previous best.
    pub is_best: bool,
}

/// Running record of a training run: one row per optimizer step plus
/// per-epoch aggregates.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LossTrace {
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochStats>,
    epoch_start: usize,
}

impl LossTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_step(&mut self, lr: f64, loss: f64) {
        self.steps.push(StepRecord {
            step: self.steps.len() as u64,
            lr,
            loss,
        });
    }

    /// Closes the current epoch: records the mean training loss since
    /// the previous boundary alongside the epoch's validation metric.
    pub fn end_epoch(&mut self, val_metric: f64, seconds: f64) -> EpochStats {
        let span = &self.steps[self.epoch_start..];
        let mean_loss = if span.is_empty() {
            f64::NAN
        } else {
            span.iter().map(|s| s.loss).sum::<f64>() / span.len() as f64
        };
        self.epoch_start = self.steps.len();
        let stats = EpochStats {
            mean_loss,
            val_metric,
            seconds,
        };
        self.epochs.push(stats);
        stats
    }

    pub fn epoch_means(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_loss).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.steps.iter().all(|s| s.loss.is_finite())
    }

    /// Writes `step,lr,loss` rows; full float precision so traces can
    /// be compared across runs.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        writeln!(f, "step,lr,loss")?;
        for s in &self.steps {
            writeln!(f, "{},{:e},{:e}", s.step, s.lr, s.loss)?;
        }
        Ok(())
    }

    /// Parses a `trace.csv` back into step records.
    pub fn read_csv(path: &Path) -> Result<Vec<StepRecord>> {
        let text = fs::read_to_string(path)?;
        let mut out = Vec::new();
        for line in text.lines().skip(1) {
            let mut cols = line.split(',');
            let parse = |v: Option<&str>| {
                v.and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| crate::Error::config(format!("bad trace row: {line}")))
            };
            let step = parse(cols.next())? as u64;
            let lr = parse(cols.next())?;
            let loss = parse(cols.next())?;
            out.push(StepRecord { step, lr, loss });
        }
        Ok(out)
    }
}
