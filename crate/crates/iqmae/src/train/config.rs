//! Training hyperparameters for both stages.

use serde::{Deserialize, Serialize};

use super::schedule::{Schedule, ScheduleKind};
use crate::nn::AdamWConfig;
use crate::Result;

/// One stage's knobs. The two constructors differ where the stages do:
/// pretraining decays weights and filters by SNR, fine-tuning does not
/// decay and draws a labeled fraction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub warmup_frac: f64,
    pub schedule: ScheduleKind,
    pub weight_decay: f64,
    /// Adam moment decay rates. Pretraining runs the short-horizon
    /// second moment (0.95): reconstruction gradients are weak until
    /// the attention pathways form, and a fast-adapting step size
    /// escapes that plateau in far fewer steps.
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    /// Pretraining keeps only frames at or above this SNR.
    pub pretrain_snr_min_db: f64,
    /// Share of ssl_train given labels for fine-tuning.
    pub label_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::pretrain_defaults()
    }
}

impl TrainConfig {
    pub fn pretrain_defaults() -> Self {
        Self {
            epochs: 20,
            batch_size: 16,
            base_lr: 3e-3,
            warmup_frac: 0.05,
            schedule: ScheduleKind::WarmupCosine,
            weight_decay: 0.05,
            adam_beta1: 0.9,
            adam_beta2: 0.95,
            pretrain_snr_min_db: 6.0,
            label_fraction: 1.0,
            seed: 0,
        }
    }

    pub fn finetune_defaults() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            base_lr: 1e-3,
            weight_decay: 0.0,
            adam_beta2: 0.999,
            label_fraction: 0.01,
            ..Self::pretrain_defaults()
        }
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            kind: self.schedule,
            base_lr: self.base_lr,
            warmup_frac: self.warmup_frac,
        }
    }

    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            weight_decay: self.weight_decay,
            ..AdamWConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(crate::Error::config("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(crate::Error::config("batch_size must be at least 1"));
        }
        if !(self.label_fraction > 0.0 && self.label_fraction <= 1.0) {
            return Err(crate::Error::config("label_fraction must lie in (0, 1]"));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(crate::Error::config("weight_decay must be non-negative"));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(crate::Error::config(format!("{name} must lie in [0, 1)")));
            }
        }
        if !self.pretrain_snr_min_db.is_finite() {
            return Err(crate::Error::config("pretrain_snr_min_db must be finite"));
        }
        self.schedule().validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_defaults_differ_where_the_stages_do() {
        let p = TrainConfig::pretrain_defaults();
        let f = TrainConfig::finetune_defaults();
        assert_eq!(p.weight_decay, 0.05);
        assert_eq!(f.weight_decay, 0.0);
        assert_eq!(f.label_fraction, 0.01);
        assert_eq!(p.adam_beta2, 0.95);
        assert_eq!(f.adam_beta2, 0.999);
        assert!(p.base_lr > f.base_lr);
    }

    #[test]
    fn partial_json_fills_remaining_defaults() {
        let cfg: TrainConfig = serde_json::from_str(r#"{"epochs": 3, "seed": 9}"#).unwrap();
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.batch_size, 64);
        cfg.validate().unwrap();
    }

    #[test]
    fn bad_values_fail_validation() {
        let mut cfg = TrainConfig::pretrain_defaults();
        cfg.epochs = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::pretrain_defaults();
        cfg.warmup_frac = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::finetune_defaults();
        cfg.label_fraction = 0.0;
        assert!(cfg.validate().is_err());
    }
}
