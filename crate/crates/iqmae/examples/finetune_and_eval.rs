//! The full two-stage recipe at toy scale: pretrain a masked
//! autoencoder, hand its encoder to a classifier, fine-tune on a small
//! labeled fraction, and evaluate on the held-out test split.
//!
//! Run with: `cargo run --release --example finetune_and_eval`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use iqmae::eval::evaluate;
use iqmae::model::checkpoint::load_classifier;
use iqmae::model::{MaeModel, ModelConfig};
use iqmae::siggen::{generate_dataset, Dataset, DatasetManifest, SplitTag};
use iqmae::train::{finetune, pretrain, FinetuneOptions, TrainConfig, BEST_CHECKPOINT_DIR};

fn main() -> iqmae::Result<()> {
    let tmp = tempfile::tempdir()?;
    let data_dir = tmp.path().join("data");

    let mut manifest = DatasetManifest::new(60, 33);
    manifest.frame_length = 256;
    manifest.schemes = vec!["BPSK".into(), "4FSK".into()];
    manifest.snr_grid_db = vec![0.0, 10.0, 20.0];
    generate_dataset(&manifest, &data_dir, 2)?;
    let ds = Dataset::load(&data_dir)?;

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
        num_classes: 2,
    };

    // Stage 1: masked reconstruction on unlabeled high-SNR frames.
    let mut pre_cfg = TrainConfig::pretrain_defaults();
    pre_cfg.epochs = 5;
    pre_cfg.batch_size = 16;
    pre_cfg.base_lr = 2e-3;
    pre_cfg.seed = 5;
    let mut mae = MaeModel::<f32>::new(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
    let pre = pretrain(&ds, &mut mae, &pre_cfg, &tmp.path().join("pretrain"), |r| {
        println!("[pretrain] epoch {}/{}: val {:.4}", r.epoch, r.total_epochs, r.val_metric);
    })?;
    println!("pretraining done, best val {:.4}\n", pre.best_val);

    // Stage 2: classifier from the pretrained encoder, 20% of ssl_train
    // labeled, validated on ft_val every epoch.
    let mut ft_cfg = TrainConfig::finetune_defaults();
    ft_cfg.epochs = 8;
    ft_cfg.batch_size = 8;
    ft_cfg.base_lr = 1e-3;
    ft_cfg.label_fraction = 0.2;
    ft_cfg.seed = 5;
    let mut cls = mae.into_classifier(&mut ChaCha8Rng::seed_from_u64(1));
    let ft_dir = tmp.path().join("finetune");
    let ft = finetune(&ds, &mut cls, &ft_cfg, FinetuneOptions::default(), &ft_dir, |r| {
        println!(
            "[finetune] epoch {}/{}: train CE {:.4}, val OA {:.3}",
            r.epoch, r.total_epochs, r.train_loss, r.val_metric
        );
    })?;
    println!(
        "\nfine-tuned on {} labeled frames, best val OA {:.3} at epoch {}",
        ft.labeled.len(),
        ft.best_val_oa,
        ft.best_epoch
    );

    // Evaluate the best checkpoint on the untouched test split.
    let (best, _) = load_classifier::<f32>(&ft_dir.join(BEST_CHECKPOINT_DIR))?;
    let report = evaluate(&best, &ds, &ds.select(SplitTag::FtTest, None))?;
    println!("\ntest OA {:.3}, kappa {:.3}", report.oa, report.kappa);
    for p in &report.per_snr {
        println!("  {:>3} dB: OA {:.3} over {} frames", p.snr_db, p.oa, p.count);
    }
    println!("confusion (rows = truth {:?}):", report.classes);
    for row in report.matrix.counts() {
        println!("  {row:?}");
    }
    Ok(())
}
