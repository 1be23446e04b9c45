//! Masked-reconstruction pretraining over SNR-filtered unlabeled frames.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::loss::{masked_mse, masked_mse_backward};
use super::schedule::lr_at;
use super::trace::{EpochReport, LossTrace, TRACE_FILE};
use super::{load_patches, BEST_CHECKPOINT_DIR};
use crate::model::checkpoint::save_mae;
use crate::model::{MaeModel, MaskPlan};
use crate::nn::{c, AdamW, Mat, Scalar};
use crate::siggen::{frame_seed, Dataset, SplitTag};
use crate::{Error, Result};

const VAL_MASK_SALT: u64 = 0x7661_6c6d_6173_6b73;

#[derive(Debug)]
pub struct PretrainOutcome {
    pub trace: LossTrace,
    /// Lowest held-out reconstruction loss seen, and the epoch it
    /// happened (1-based).
    pub best_val: f64,
    pub best_epoch: usize,
    pub checkpoint_dir: PathBuf,
}

/// Trains `model` to reconstruct masked patches and keeps the
/// checkpoint with the lowest ssl_val reconstruction loss under
/// `out_dir/best`. Each frame gets a fresh random mask every time it
/// is visited; validation masks are fixed per frame so epoch metrics
/// compare like with like.
pub fn pretrain<F: Scalar>(
    ds: &Dataset,
    model: &mut MaeModel<F>,
    cfg: &TrainConfig,
    out_dir: &Path,
    mut on_epoch: impl FnMut(&EpochReport),
) -> Result<PretrainOutcome> {
    cfg.validate()?;
    if model.cfg.frame_length != ds.manifest.frame_length {
        return Err(Error::config(format!(
            "model expects {}-sample frames, dataset has {}",
            model.cfg.frame_length, ds.manifest.frame_length
        )));
    }

    let floor = cfg.pretrain_snr_min_db;
    let train_idx = ds.select(SplitTag::SslTrain, Some(floor));
    if train_idx.is_empty() {
        return Err(Error::config(format!(
            "no ssl_train frames at or above {floor} dB"
        )));
    }
    let val_idx = ds.select(SplitTag::SslVal, Some(floor));

    let n = model.cfg.num_patches();
    let train_patches: Vec<Mat<F>> = load_patches(ds, &train_idx, model.cfg.patch_size)?;
    let val_patches: Vec<Mat<F>> = load_patches(ds, &val_idx, model.cfg.patch_size)?;
    let val_plans: Vec<MaskPlan> = val_idx
        .iter()
        .map(|&i| {
            let mut r = ChaCha8Rng::seed_from_u64(frame_seed(cfg.seed ^ VAL_MASK_SALT, i as u64));
            MaskPlan::sample(n, model.cfg.mask_ratio, &mut r)
        })
        .collect::<Result<_>>()?;

    let steps_per_epoch = train_idx.len().div_ceil(cfg.batch_size);
    let total_steps = (cfg.epochs * steps_per_epoch) as u64;
    let schedule = cfg.schedule();

    fs::create_dir_all(out_dir)?;
    let best_dir = out_dir.join(BEST_CHECKPOINT_DIR);
    let mut opt = AdamW::new(cfg.adamw(), &model.param_refs());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_patches.len()).collect();
    let mut trace = LossTrace::new();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut step: u64 = 0;

    for epoch in 1..=cfg.epochs {
        let t0 = Instant::now();
        order.shuffle(&mut rng);
        let mut epoch_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let lr = lr_at(step, total_steps, &schedule)?;
            let mut grad = model.zeros_like();
            let inv = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &fi in batch {
                let plan = MaskPlan::sample(n, model.cfg.mask_ratio, &mut rng)?;
                let target = &train_patches[fi];
                let (pred, cache) = model.forward(target, &plan);
                let loss = masked_mse(&pred, target, &plan)?;
                batch_loss += loss.to_f64().unwrap_or(f64::NAN) * inv;
                let dpred = masked_mse_backward(&pred, target, &plan)? * c::<F>(inv);
                model.backward(&cache, &dpred, &mut grad);
            }
            if !batch_loss.is_finite() {
                return Err(Error::Numerical {
                    step: step as usize,
                    what: "pretraining batch loss".into(),
                });
            }
            opt.step(c::<F>(lr), &mut model.param_muts(), &grad.param_refs());
            trace.push_step(lr, batch_loss);
            epoch_sum += batch_loss;
            step += 1;
        }

        // Falls back to the epoch's train mean when the SNR floor left
        // no validation frames.
        let val_metric = if val_patches.is_empty() {
            epoch_sum / steps_per_epoch as f64
        } else {
            mean_reconstruction(model, &val_patches, &val_plans)?
        };
        if !val_metric.is_finite() {
            return Err(Error::Numerical {
                step: step as usize,
                what: "validation reconstruction loss".into(),
            });
        }
        let is_best = val_metric < best_val;
        if is_best {
            best_val = val_metric;
            best_epoch = epoch;
            save_mae(&best_dir, model, step, Some(val_metric), Some(&rng))?;
        }
        let stats = trace.end_epoch(val_metric, t0.elapsed().as_secs_f64());
        on_epoch(&EpochReport {
            epoch,
            total_epochs: cfg.epochs,
            train_loss: stats.mean_loss,
            val_metric,
            seconds: stats.seconds,
            is_best,
        });
    }

    trace.write_csv(&out_dir.join(TRACE_FILE))?;
    Ok(PretrainOutcome {
        trace,
        best_val,
        best_epoch,
        checkpoint_dir: best_dir,
    })
}

/// Mean masked reconstruction loss over a fixed (frame, mask) pairing.
pub fn mean_reconstruction<F: Scalar>(
    model: &MaeModel<F>,
    patches: &[Mat<F>],
    plans: &[MaskPlan],
) -> Result<f64> {
    let mut sum = 0.0;
    for (target, plan) in patches.iter().zip(plans) {
        let (pred, _) = model.forward(target, plan);
        sum += masked_mse(&pred, target, plan)?.to_f64().unwrap_or(f64::NAN);
    }
    Ok(sum / patches.len() as f64)
}
