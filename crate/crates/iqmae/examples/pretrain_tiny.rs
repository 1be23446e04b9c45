//! Pretrains a small masked autoencoder end to end on a freshly
//! generated dataset, printing the per-epoch reconstruction losses and
//! the saved best checkpoint.
//!
//! Run with: `cargo run --release --example pretrain_tiny`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use iqmae::model::{MaeModel, ModelConfig};
use iqmae::siggen::{generate_dataset, Dataset, DatasetManifest, SplitTag};
use iqmae::train::{pretrain, TrainConfig, BEST_CHECKPOINT_DIR};

fn main() -> iqmae::Result<()> {
    let tmp = tempfile::tempdir()?;
    let data_dir = tmp.path().join("data");
    let run_dir = tmp.path().join("run");

    let mut manifest = DatasetManifest::new(50, 21);
    manifest.frame_length = 256;
    manifest.schemes = vec!["BPSK".into(), "QPSK".into(), "16QAM".into(), "4FSK".into()];
    manifest.snr_grid_db = vec![0.0, 10.0, 20.0];
    generate_dataset(&manifest, &data_dir, 2)?;
    let ds = Dataset::load(&data_dir)?;
    println!(
        "dataset: {} frames, pretraining pool (ssl_train >= 6 dB): {}",
        ds.manifest.num_frames(),
        ds.select(SplitTag::SslTrain, Some(6.0)).len()
    );

    let cfg = ModelConfig {
        frame_length: 256,
        patch_size: 8,
        enc_dim: 32,
        enc_layers: 2,
        enc_heads: 2,
        dec_dim: 16,
        dec_layers: 1,
        dec_heads: 2,
        mlp_ratio: 2,
        mask_ratio: 0.75,
        num_classes: 4,
    };
    let mut train = TrainConfig::pretrain_defaults();
    train.epochs = 6;
    train.batch_size = 16;
    train.base_lr = 2e-3;
    train.seed = 5;

    let mut model = MaeModel::<f32>::new(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
    let outcome = pretrain(&ds, &mut model, &train, &run_dir, |r| {
        println!(
            "epoch {}/{}: train {:.4}, val {:.4}{}",
            r.epoch,
            r.total_epochs,
            r.train_loss,
            r.val_metric,
            if r.is_best { "  (new best)" } else { "" }
        );
    })?;

    println!(
        "\nbest val {:.4} at epoch {}, checkpoint in <run>/{BEST_CHECKPOINT_DIR}, {} trace rows",
        outcome.best_val,
        outcome.best_epoch,
        outcome.trace.steps.len()
    );
    let means = outcome.trace.epoch_means();
    println!(
        "epoch-mean loss fell {:.4} -> {:.4}",
        means.first().unwrap(),
        means.last().unwrap()
    );
    assert!(outcome.checkpoint_dir.join("meta.json").exists());
    Ok(())
}
