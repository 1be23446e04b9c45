//! Walks one frame through the synthesis chain and verifies the noise
//! calibration by measuring SNR as the clean-to-residual power ratio.
//!
//! Run with: `cargo run --release --example signal_chain`

use num_complex::Complex64;

use iqmae::siggen::{frame::synthesize_received, generate_frame, FrameParams, Modulation, Snr};

fn main() -> iqmae::Result<()> {
    let schemes = [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16, Modulation::Fsk4];

    println!("measured SNR over 20 frames per scheme (target vs measured):");
    for target_db in [0.0, 10.0] {
        for scheme in schemes {
            let mut signal = 0.0;
            let mut noise = 0.0;
            for seed in 0..20 {
                let params = FrameParams {
                    frame_length: 1024,
                    sps: 8,
                    rolloff: 0.35,
                    cfo_max_cycles: 0.01,
                    taps: vec![Complex64::new(1.0, 0.0)],
                    snr: Snr::Db(target_db),
                    seed,
                };
                let (clean, received) = synthesize_received(scheme, &params)?;
                signal += clean.iter().map(|v| v.norm_sqr()).sum::<f64>();
                noise += clean.iter().zip(&received).map(|(c, r)| (r - c).norm_sqr()).sum::<f64>();
            }
            println!(
                "  {:<6} {:>5.1} dB -> {:>6.2} dB",
                scheme.name(),
                target_db,
                10.0 * (signal / noise).log10()
            );
        }
    }

    // The packed frame is normalized to unit average power.
    let params = FrameParams {
        frame_length: 1024,
        sps: 8,
        rolloff: 0.35,
        cfo_max_cycles: 0.01,
        taps: vec![Complex64::new(1.0, 0.0)],
        snr: Snr::Db(10.0),
        seed: 42,
    };
    let frame = generate_frame(Modulation::Qpsk, &params, 0, Some(1))?;
    println!(
        "\npacked QPSK frame: {} samples, average power {:.6}, first IQ pair ({:+.4}, {:+.4})",
        frame.frame_length(),
        frame.average_power(),
        frame.samples[[0, 0]],
        frame.samples[[1, 0]]
    );
    Ok(())
}
