//! Shows the masking pipeline on one frame: patchify, sample a random
//! mask, encode only the kept patches, and restore the full sequence
//! with mask tokens at the hidden positions.
//!
//! Run with: `cargo run --release --example mask_and_restore`

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use iqmae::model::{frame_to_scalar, patchify, MaeModel, MaskPlan, ModelConfig};
use iqmae::siggen::{generate_frame, FrameParams, Modulation, Snr};
use iqmae::train::masked_mse;

fn main() -> iqmae::Result<()> {
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
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let params = FrameParams {
        frame_length: cfg.frame_length,
        sps: 8,
        rolloff: 0.35,
        cfo_max_cycles: 0.01,
        taps: vec![Complex64::new(1.0, 0.0)],
        snr: Snr::Db(10.0),
        seed: 99,
    };
    let frame = generate_frame(Modulation::Qpsk, &params, 0, None)?;
    let patches = patchify(&frame_to_scalar::<f32>(&frame.samples), cfg.patch_size)?;
    println!(
        "frame: {} samples -> {} patches of {} values each ([I window, Q window])",
        cfg.frame_length,
        patches.nrows(),
        patches.ncols()
    );

    let plan = MaskPlan::sample(cfg.num_patches(), cfg.mask_ratio, &mut rng)?;
    println!(
        "mask ratio {}: encoder sees {} patches, decoder must reconstruct {}",
        cfg.mask_ratio,
        plan.kept().len(),
        plan.masked().len()
    );
    let strip: String = (0..cfg.num_patches())
        .map(|i| if plan.is_masked(i) { '.' } else { '#' })
        .collect();
    println!("visible map (# = kept, . = masked):\n  {strip}");

    let model = MaeModel::<f32>::new(&cfg, &mut rng);
    let (pred, _cache) = model.forward(&patches, &plan);
    println!(
        "\nencoder input: {} rows (class token + kept patches), width {}",
        plan.kept().len() + 1,
        cfg.enc_dim
    );
    println!(
        "decoder prediction: {} rows x {} values (every patch position)",
        pred.nrows(),
        pred.ncols()
    );
    println!(
        "untrained masked reconstruction loss: {:.3}",
        masked_mse(&pred, &patches, &plan)?
    );
    Ok(())
}
