//! Generates a small labeled IQ dataset and inspects its on-disk layout.
//!
//! The dataset is five flat files: `manifest.json` (the complete recipe),
//! `frames.f32` (2xT samples per frame), `labels.u16`, `snr.i16`, and
//! `splits.u8`. Bytes depend only on the manifest, never on worker count.
//!
//! Run with: `cargo run --release --example generate_dataset`

use std::fs;
use std::path::Path;

use iqmae::siggen::{generate_dataset, Dataset, DatasetManifest, SplitTag};

fn main() -> iqmae::Result<()> {
    let dir = Path::new("target/examples/dataset");

    let mut manifest = DatasetManifest::new(40, 7);
    manifest.frame_length = 256;
    manifest.schemes = vec!["BPSK".into(), "QPSK".into(), "16QAM".into(), "4FSK".into()];
    manifest.snr_grid_db = vec![-10.0, 0.0, 10.0, 20.0];

    println!(
        "generating {} frames ({} schemes x {} SNRs x {} per cell)...",
        manifest.num_frames(),
        manifest.schemes.len(),
        manifest.snr_grid_db.len(),
        manifest.frames_per_cell
    );
    generate_dataset(&manifest, dir, 2)?;

    for name in ["manifest.json", "frames.f32", "labels.u16", "snr.i16", "splits.u8"] {
        let bytes = fs::metadata(dir.join(name))?.len();
        println!("  {name:<14} {bytes:>9} bytes");
    }

    let ds = Dataset::load(dir)?;
    println!("\nsplit sizes:");
    for tag in SplitTag::ALL {
        println!("  {:<10} {:>5} frames", tag.name(), ds.select(tag, None).len());
    }
    println!(
        "ssl_train at >= 6 dB (the usual pretraining pool): {} frames",
        ds.select(SplitTag::SslTrain, Some(6.0)).len()
    );

    // Every frame is normalized to unit average power on the way out.
    let frame = ds.read_frames(&[0])?.remove(0);
    let power: f32 = frame.iter().map(|v| v * v).sum::<f32>() / frame.ncols() as f32;
    println!(
        "\nframe 0: scheme {}, {} samples, mean power {power:.6}",
        ds.manifest.schemes[ds.labels[0] as usize],
        frame.ncols()
    );
    Ok(())
}
