//! Supervised fine-tuning on a labeled fraction, full SNR range.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::labels::select_finetune_labels;
use super::loss::{argmax, softmax_ce};
use super::schedule::lr_at;
use super::trace::{EpochReport, LossTrace, TRACE_FILE};
use super::{load_patches, BEST_CHECKPOINT_DIR};
use crate::model::checkpoint::save_classifier;
use crate::model::ClsModel;
use crate::nn::{c, AdamW, Mat, Scalar};
use crate::siggen::{Dataset, SplitTag};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct FinetuneOptions {
    /// Train only the classifier head, leaving the encoder untouched
    /// (linear probe). Default trains everything.
    pub freeze_encoder: bool,
}

#[derive(Debug)]
pub struct FinetuneOutcome {
    pub trace: LossTrace,
    /// Highest ft_val overall accuracy seen, and the epoch it happened
    /// (1-based).
    pub best_val_oa: f64,
    pub best_epoch: usize,
    pub checkpoint_dir: PathBuf,
    /// Frame indices that received labels.
    pub labeled: Vec<usize>,
}

/// Trains a classifier on a stratified labeled slice of ssl_train and
/// keeps the checkpoint with the highest ft_val accuracy under
/// `out_dir/best`. The caller chooses the starting point: a pretrained
/// encoder via `MaeModel::into_classifier`, or a fresh `ClsModel` for a
/// from-scratch baseline.
pub fn finetune<F: Scalar>(
    ds: &Dataset,
    model: &mut ClsModel<F>,
    cfg: &TrainConfig,
    opts: FinetuneOptions,
    out_dir: &Path,
    mut on_epoch: impl FnMut(&EpochReport),
) -> Result<FinetuneOutcome> {
    cfg.validate()?;
    if model.cfg.num_classes != ds.manifest.schemes.len() {
        return Err(Error::config(format!(
            "classifier has {} classes, dataset has {} schemes",
            model.cfg.num_classes,
            ds.manifest.schemes.len()
        )));
    }
    if model.cfg.frame_length != ds.manifest.frame_length {
        return Err(Error::config(format!(
            "model expects {}-sample frames, dataset has {}",
            model.cfg.frame_length, ds.manifest.frame_length
        )));
    }

    let labeled = select_finetune_labels(ds, cfg.label_fraction, cfg.seed)?;
    let val_idx = ds.select(SplitTag::FtVal, None);
    if val_idx.is_empty() {
        return Err(Error::config(
            "dataset has no ft_val frames for checkpoint selection",
        ));
    }

    let train_patches: Vec<Mat<F>> = load_patches(ds, &labeled, model.cfg.patch_size)?;
    let train_labels: Vec<usize> = labeled.iter().map(|&i| ds.labels[i] as usize).collect();
    let val_patches: Vec<Mat<F>> = load_patches(ds, &val_idx, model.cfg.patch_size)?;
    let val_labels: Vec<usize> = val_idx.iter().map(|&i| ds.labels[i] as usize).collect();

    let steps_per_epoch = labeled.len().div_ceil(cfg.batch_size);
    let total_steps = (cfg.epochs * steps_per_epoch) as u64;
    let schedule = cfg.schedule();

    fs::create_dir_all(out_dir)?;
    let best_dir = out_dir.join(BEST_CHECKPOINT_DIR);
    // Frozen mode registers only the head, so the optimizer cannot
    // touch encoder state even with weight decay on.
    let mut opt = if opts.freeze_encoder {
        AdamW::new(cfg.adamw(), &model.head_param_refs())
    } else {
        AdamW::new(cfg.adamw(), &model.param_refs())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_patches.len()).collect();
    let mut trace = LossTrace::new();
    let mut best_val_oa = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut step: u64 = 0;

    for epoch in 1..=cfg.epochs {
        let t0 = Instant::now();
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let lr = lr_at(step, total_steps, &schedule)?;
            let mut grad = model.zeros_like();
            let inv = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &fi in batch {
                let (logits, cache) = model.forward(&train_patches[fi]);
                let (loss, mut dlogits) = softmax_ce(&logits, train_labels[fi])?;
                batch_loss += loss.to_f64().unwrap_or(f64::NAN) * inv;
                dlogits *= c::<F>(inv);
                model.backward(&cache, &dlogits, &mut grad);
            }
            if !batch_loss.is_finite() {
                return Err(Error::Numerical {
                    step: step as usize,
                    what: "fine-tuning batch loss".into(),
                });
            }
            if opts.freeze_encoder {
                opt.step(c::<F>(lr), &mut model.head_param_muts(), &grad.head_param_refs());
            } else {
                opt.step(c::<F>(lr), &mut model.param_muts(), &grad.param_refs());
            }
            trace.push_step(lr, batch_loss);
            step += 1;
        }

        let val_oa = accuracy(model, &val_patches, &val_labels);
        let is_best = val_oa > best_val_oa;
        if is_best {
            best_val_oa = val_oa;
            best_epoch = epoch;
            save_classifier(&best_dir, model, step, Some(val_oa), Some(&rng))?;
        }
        let stats = trace.end_epoch(val_oa, t0.elapsed().as_secs_f64());
        on_epoch(&EpochReport {
            epoch,
            total_epochs: cfg.epochs,
            train_loss: stats.mean_loss,
            val_metric: val_oa,
            seconds: stats.seconds,
            is_best,
        });
    }

    trace.write_csv(&out_dir.join(TRACE_FILE))?;
    Ok(FinetuneOutcome {
        trace,
        best_val_oa,
        best_epoch,
        checkpoint_dir: best_dir,
        labeled,
    })
}

/// Top-1 accuracy of the classifier over a patchified set.
pub fn accuracy<F: Scalar>(model: &ClsModel<F>, patches: &[Mat<F>], labels: &[usize]) -> f64 {
    let correct = patches
        .iter()
        .zip(labels)
        .filter(|(p, &l)| {
            let (logits, _) = model.forward(p);
            argmax(&logits) == l
        })
        .count();
    correct as f64 / patches.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MaeModel, ModelConfig};
    use crate::siggen::DatasetManifest;

    fn tiny_dataset(dir: &Path) -> Dataset {
        let mut m = DatasetManifest::new(12, 6);
        m.frame_length = 64;
        m.schemes = vec!["BPSK".into(), "QPSK".into()];
        m.snr_grid_db = vec![0.0, 10.0];
        crate::siggen::generate_dataset(&m, dir, 1).unwrap();
        Dataset::load(dir).unwrap()
    }

    fn tiny_model_cfg() -> ModelConfig {
        ModelConfig {
            frame_length: 64,
            patch_size: 8,
            enc_dim: 16,
            enc_layers: 1,
            enc_heads: 2,
            dec_dim: 8,
            dec_layers: 1,
            dec_heads: 2,
            mlp_ratio: 2,
            mask_ratio: 0.75,
            num_classes: 2,
        }
    }

    fn tiny_train_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            batch_size: 4,
            base_lr: 1e-3,
            label_fraction: 0.5,
            seed: 3,
            ..TrainConfig::finetune_defaults()
        }
    }

    #[test]
    fn finetune_trains_and_checkpoints() {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(dir.path());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut model = ClsModel::<f32>::new(&tiny_model_cfg(), &mut rng);

        let outcome = finetune(
            &ds,
            &mut model,
            &tiny_train_cfg(),
            FinetuneOptions::default(),
            out.path(),
            |_| {},
        )
        .unwrap();
        // 28 ssl_train frames, fraction 0.5 -> 14 labeled -> 4 steps/epoch.
        assert_eq!(outcome.labeled.len(), 14);
        assert_eq!(outcome.trace.steps.len(), 8);
        assert!(outcome.best_val_oa >= 0.0 && outcome.best_val_oa <= 1.0);
        assert!(out.path().join(TRACE_FILE).is_file());
        let (_, meta) =
            crate::model::checkpoint::load_classifier::<f32>(&outcome.checkpoint_dir).unwrap();
        assert_eq!(meta.best_metric, Some(outcome.best_val_oa));
    }

    #[test]
    fn frozen_encoder_stays_bitwise_identical() {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(dir.path());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mae = MaeModel::<f64>::new(&tiny_model_cfg(), &mut rng);
        let mut model = mae.into_classifier(&mut rng);

        let frozen_before: Vec<Vec<f64>> = model
            .encoder
            .param_refs("enc")
            .iter()
            .map(|p| p.data.to_vec())
            .collect();
        let head_before: Vec<f64> = model.head_param_refs()[0].data.to_vec();

        finetune(
            &ds,
            &mut model,
            &tiny_train_cfg(),
            FinetuneOptions {
                freeze_encoder: true,
            },
            out.path(),
            |_| {},
        )
        .unwrap();

        for (p, old) in model.encoder.param_refs("enc").iter().zip(&frozen_before) {
            assert_eq!(p.data, &old[..], "{} moved under freeze", p.name);
        }
        assert_ne!(model.head_param_refs()[0].data, &head_before[..]);
    }

    #[test]
    fn class_count_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(dir.path());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = ModelConfig {
            num_classes: 5,
            ..tiny_model_cfg()
        };
        let mut model = ClsModel::<f32>::new(&cfg, &mut rng);
        let err = finetune(
            &ds,
            &mut model,
            &tiny_train_cfg(),
            FinetuneOptions::default(),
            out.path(),
            |_| {},
        )
        .unwrap_err();
        assert!(err.to_string().contains("5 classes"), "{err}");
    }

    #[test]
    fn labeled_pool_spans_the_full_snr_range() {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(dir.path());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut model = ClsModel::<f32>::new(&tiny_model_cfg(), &mut rng);
        let outcome = finetune(
            &ds,
            &mut model,
            &tiny_train_cfg(),
            FinetuneOptions::default(),
            out.path(),
            |_| {},
        )
        .unwrap();
        let snrs: std::collections::BTreeSet<i16> = outcome
            .labeled
            .iter()
            .map(|&i| ds.snrs[i].to_i16())
            .collect();
        assert_eq!(snrs.len(), 2, "both SNR cells represented: {snrs:?}");
    }
}
