//! Sweeps the mask ratio and reports how hard each setting makes the
//! reconstruction task (held-out loss after a short pretraining run).
//!
//! Run with: `cargo run --release --example sweep_mask_ratio`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use iqmae::model::{MaeModel, ModelConfig};
use iqmae::siggen::{generate_dataset, Dataset, DatasetManifest};
use iqmae::train::{pretrain, TrainConfig};

fn main() -> iqmae::Result<()> {
    let tmp = tempfile::tempdir()?;
    let data_dir = tmp.path().join("data");

    let mut manifest = DatasetManifest::new(40, 11);
    manifest.frame_length = 256;
    manifest.schemes = vec!["BPSK".into(), "QPSK".into()];
    manifest.snr_grid_db = vec![10.0, 20.0];
    generate_dataset(&manifest, &data_dir, 2)?;
    let ds = Dataset::load(&data_dir)?;

    let mut train = TrainConfig::pretrain_defaults();
    train.epochs = 4;
    train.batch_size = 16;
    train.base_lr = 2e-3;
    train.seed = 5;

    println!("value,best_val");
    for ratio in [0.5, 0.75, 0.9] {
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
            mask_ratio: ratio,
            num_classes: 2,
        };
        let mut model = MaeModel::<f32>::new(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
        let out = pretrain(
            &ds,
            &mut model,
            &train,
            &tmp.path().join(format!("ratio_{ratio}")),
            |_| {},
        )?;
        println!("{ratio},{:.4}", out.best_val);
    }
    Ok(())
}
