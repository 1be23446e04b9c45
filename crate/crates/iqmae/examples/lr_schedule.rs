//! Plots the warmup+cosine learning-rate schedule used for both
//! training stages.
//!
//! Run with: `cargo run --release --example lr_schedule`

use iqmae::train::{lr_at, Schedule};

fn main() -> iqmae::Result<()> {
    let schedule = Schedule::warmup_cosine(1e-3, 0.05);
    let total = 2000u64;

    println!("base lr 1e-3, warmup 5% of {total} steps, cosine decay to 0\n");
    let rows = 20;
    let cols = 64;
    let lrs: Vec<f64> = (0..cols)
        .map(|c| lr_at((c * (total as usize - 1) / (cols - 1)) as u64, total, &schedule))
        .collect::<iqmae::Result<_>>()?;
    let peak = lrs.iter().cloned().fold(0.0, f64::max);
    for r in (0..rows).rev() {
        let threshold = peak * (r as f64 + 0.5) / rows as f64;
        let line: String = lrs.iter().map(|&v| if v >= threshold { '#' } else { ' ' }).collect();
        println!("{}", line);
    }
    println!("{}", "-".repeat(cols));
    println!("step 0{:>width$}", total, width = cols - 5);

    println!("\nsampled values:");
    for step in [0, 50, 100, 500, 1000, 1500, 1999] {
        println!("  step {step:>4}: lr {:.6e}", lr_at(step, total, &schedule)?);
    }
    Ok(())
}
