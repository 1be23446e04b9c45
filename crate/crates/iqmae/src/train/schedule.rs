//! Learning-rate schedule: linear warmup into cosine decay.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Linear ramp 0 → base over the warmup span, then cosine to 0.
    WarmupCosine,
    /// Flat base_lr at every step (ablation mode).
    Constant,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub base_lr: f64,
    pub warmup_frac: f64,
}

impl Schedule {
    pub fn warmup_cosine(base_lr: f64, warmup_frac: f64) -> Self {
        Self {
            kind: ScheduleKind::WarmupCosine,
            base_lr,
            warmup_frac,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::config("base_lr must be positive and finite"));
        }
        if !(self.warmup_frac > 0.0 && self.warmup_frac < 1.0) {
            return Err(Error::config("warmup_frac must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Learning rate for `step` of a `total_steps`-long run. The first step
/// past the warmup span lands on the cosine branch at progress 0, so
/// both sides of the junction evaluate to base_lr.
pub fn lr_at(step: u64, total_steps: u64, schedule: &Schedule) -> Result<f64> {
    if step >= total_steps {
        return Err(Error::config(format!(
            "schedule step {step} out of range (total {total_steps})"
        )));
    }
    if schedule.kind == ScheduleKind::Constant {
        return Ok(schedule.base_lr);
    }
    let warmup = schedule.warmup_frac * total_steps as f64;
    let s = step as f64;
    if s < warmup {
        Ok(schedule.base_lr * s / warmup)
    } else {
        let progress = (s - warmup) / (total_steps as f64 - warmup);
        Ok(schedule.base_lr * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos()))
    }
}
