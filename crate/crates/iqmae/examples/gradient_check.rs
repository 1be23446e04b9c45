//! Checks the hand-written backward passes against central finite
//! differences, in f64 where truncation error is far below tolerance.
//!
//! Run with: `cargo run --release --example gradient_check`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iqmae::model::{MaeModel, MaskPlan, ModelConfig};
use iqmae::nn::{fd, Mat};
use iqmae::train::{masked_mse, masked_mse_backward};

fn main() -> iqmae::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = ModelConfig {
        frame_length: 32,
        patch_size: 8,
        enc_dim: 16,
        enc_layers: 2,
        enc_heads: 2,
        dec_dim: 8,
        dec_layers: 1,
        dec_heads: 2,
        mlp_ratio: 2,
        mask_ratio: 0.75,
        num_classes: 4,
    };
    let mut model = MaeModel::<f64>::new(&cfg, &mut rng);
    let patches = Mat::from_shape_fn((cfg.num_patches(), cfg.patch_dim()), |_| {
        rng.gen_range(-1.0..1.0)
    });
    let plan = MaskPlan::sample(cfg.num_patches(), cfg.mask_ratio, &mut rng)?;

    // Analytic gradient of the masked reconstruction loss.
    let (pred, cache) = model.forward(&patches, &plan);
    let loss = masked_mse(&pred, &patches, &plan)?;
    let dpred = masked_mse_backward(&pred, &patches, &plan)?;
    let mut grad = model.zeros_like();
    model.backward(&cache, &dpred, &mut grad);
    let analytic = fd::flatten(&grad.param_refs());

    println!(
        "tiny MAE: {} parameters, masked loss {loss:.6}",
        analytic.len()
    );
    println!("running central differences over every parameter...");

    let numeric = fd::central_diff(analytic.len(), 1e-5, |i, d| {
        fd::nudge(&mut model.param_muts(), i, d);
        let v = masked_mse(&model.forward(&patches, &plan).0, &patches, &plan).unwrap();
        fd::nudge(&mut model.param_muts(), i, -d);
        v
    });

    let worst = fd::max_rel_err(&analytic, &numeric, 1e-8);
    println!("worst relative error: {worst:.3e} (tolerance 1e-3)");
    assert!(worst < 1e-3);
    Ok(())
}
