//! Impairment chain: CFO/phase rotation, FIR channel, calibrated AWGN.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Signal-to-noise setting. The noise-free case is a distinct variant
/// rather than an infinity float so it survives serialization exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Snr {
    Db(f64),
    NoiseFree,
}

/// Stored form in `snr.i16`: dB rounded to integer, +∞ sentinel 32767.
pub const SNR_NOISE_FREE_SENTINEL: i16 = 32767;

impl Snr {
    pub fn to_i16(self) -> i16 {
        match self {
            Snr::Db(db) => db.round() as i16,
            Snr::NoiseFree => SNR_NOISE_FREE_SENTINEL,
        }
    }

    pub fn from_i16(raw: i16) -> Self {
        if raw == SNR_NOISE_FREE_SENTINEL {
            Snr::NoiseFree
        } else {
            Snr::Db(raw as f64)
        }
    }

    /// dB value for threshold comparisons; noise-free counts as +∞.
    pub fn db_or_inf(self) -> f64 {
        match self {
            Snr::Db(db) => db,
            Snr::NoiseFree => f64::INFINITY,
        }
    }
}

/// One frame's channel draw: carrier frequency offset (cycles/sample),
/// phase offset, FIR taps, noise level, and the seed of the noise
/// stream.
#[derive(Debug, Clone)]
pub struct ChannelConfig {
    pub cfo_cycles_per_sample: f64,
    pub phase_rad: f64,
    pub taps: Vec<Complex64>,
    pub snr: Snr,
    pub seed: u64,
}

/// `y[t] = x[t] · exp(j(2πΔf·t + φ))`; magnitudes preserved exactly.
pub fn apply_cfo_phase(x: &[Complex64], cfo_cycles_per_sample: f64, phase_rad: f64) -> Vec<Complex64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    x.iter()
        .enumerate()
        .map(|(t, &v)| v * Complex64::from_polar(1.0, two_pi * cfo_cycles_per_sample * t as f64 + phase_rad))
        .collect()
}

/// Causal same-length FIR convolution: `y[n] = Σ_k h[k]·x[n−k]`.
fn fir_same(x: &[Complex64], taps: &[Complex64]) -> Vec<Complex64> {
    assert!(!taps.is_empty(), "channel taps must be non-empty");
    (0..x.len())
        .map(|n| {
            taps.iter()
                .enumerate()
                .take(n + 1)
                .map(|(k, &h)| h * x[n - k])
                .sum()
        })
        .collect()
}

/// Circular complex Gaussian noise calibrated against the measured
/// power of `signal`: per-sample noise variance `σ² = P/10^(snr/10)`,
/// split evenly between I and Q.
fn noise_for(signal: &[Complex64], snr_db: f64, rng: &mut impl Rng) -> Vec<Complex64> {
    let power: f64 = signal.iter().map(|v| v.norm_sqr()).sum::<f64>() / signal.len() as f64;
    let sigma2 = power / 10.0_f64.powf(snr_db / 10.0);
    let per_axis = (sigma2 / 2.0).sqrt();
    (0..signal.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * per_axis, im * per_axis)
        })
        .collect()
}

/// `r = (h ∗ x) + n`. The clean convolved signal is returned alongside
/// the received one so calibration can be measured directly.
pub fn apply_channel_parts(x: &[Complex64], cfg: &ChannelConfig) -> (Vec<Complex64>, Vec<Complex64>) {
    let clean = fir_same(x, &cfg.taps);
    let received = match cfg.snr {
        Snr::NoiseFree => clean.clone(),
        Snr::Db(db) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let noise = noise_for(&clean, db, &mut rng);
            clean.iter().zip(&noise).map(|(s, n)| s + n).collect()
        }
    };
    (clean, received)
}

pub fn apply_channel(x: &[Complex64], cfg: &ChannelConfig) -> Vec<Complex64> {
    apply_channel_parts(x, cfg).1
}

/// Fixed three-tap fading preset with a dominant first path, unit total
/// energy. A stand-in for frequency-selective channels; not a fidelity
/// model of any named fading process.
pub fn preset_rayleigh3() -> Vec<Complex64> {
    let raw = [
        Complex64::from_polar(1.0, 0.0),
        Complex64::from_polar(0.45, 1.2),
        Complex64::from_polar(0.22, -2.4),
    ];
    let energy: f64 = raw.iter().map(|t| t.norm_sqr()).sum();
    let scale = energy.sqrt().recip();
    raw.iter().map(|t| t * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|t| Complex64::from_polar(1.0, 0.02 * t as f64))
            .collect()
    }

    #[test]
    fn zero_offsets_are_identity() {
        let x = tone(64);
        assert_eq!(apply_cfo_phase(&x, 0.0, 0.0), x);
    }

    #[test]
    fn pi_phase_negates() {
        let x = tone(64);
        let y = apply_cfo_phase(&x, 0.0, std::f64::consts::PI);
        for (a, b) in x.iter().zip(&y) {
            assert!((a + b).norm() < 1e-12);
        }
    }

    #[test]
    fn cfo_rotates_linearly_in_time() {
        let n = 256;
        let x = vec![Complex64::new(1.0, 0.0); n];
        let y = apply_cfo_phase(&x, 1.0 / n as f64, 0.0);
        let expect_last = 2.0 * std::f64::consts::PI * (n as f64 - 1.0) / n as f64;
        let got = y[n - 1].im.atan2(y[n - 1].re).rem_euclid(2.0 * std::f64::consts::PI);
        assert!((got - expect_last).abs() < 1e-10);
        for (t, v) in y.iter().enumerate() {
            assert!((v.norm() - 1.0).abs() < 1e-12, "magnitude drift at {t}");
        }
    }

    #[test]
    fn unit_tap_noise_free_is_identity() {
        let x = tone(128);
        let cfg = ChannelConfig {
            cfo_cycles_per_sample: 0.0,
            phase_rad: 0.0,
            taps: vec![Complex64::new(1.0, 0.0)],
            snr: Snr::NoiseFree,
            seed: 1,
        };
        assert_eq!(apply_channel(&x, &cfg), x);
    }

    #[test]
    fn scalar_tap_scales() {
        let x = tone(128);
        let cfg = ChannelConfig {
            cfo_cycles_per_sample: 0.0,
            phase_rad: 0.0,
            taps: vec![Complex64::new(0.5, 0.0)],
            snr: Snr::NoiseFree,
            seed: 1,
        };
        let y = apply_channel(&x, &cfg);
        for (a, b) in x.iter().zip(&y) {
            assert!((a * 0.5 - b).norm() < 1e-15);
        }
    }

    #[test]
    fn measured_snr_matches_nominal() {
        let n = 100_000;
        let x = tone(n);
        let cfg = ChannelConfig {
            cfo_cycles_per_sample: 0.0,
            phase_rad: 0.0,
            taps: vec![Complex64::new(1.0, 0.0)],
            snr: Snr::Db(10.0),
            seed: 42,
        };
        let (clean, received) = apply_channel_parts(&x, &cfg);
        let p_sig: f64 = clean.iter().map(|v| v.norm_sqr()).sum();
        let p_noise: f64 = received
            .iter()
            .zip(&clean)
            .map(|(r, s)| (r - s).norm_sqr())
            .sum();
        let measured_db = 10.0 * (p_sig / p_noise).log10();
        assert!((measured_db - 10.0).abs() < 0.3, "measured {measured_db}");
    }

    #[test]
    fn snr_sentinel_round_trips() {
        assert_eq!(Snr::from_i16(Snr::NoiseFree.to_i16()), Snr::NoiseFree);
        assert_eq!(Snr::from_i16(Snr::Db(-20.0).to_i16()), Snr::Db(-20.0));
        assert!(Snr::NoiseFree.db_or_inf().is_infinite());
    }

    #[test]
    fn fading_preset_has_unit_energy() {
        let taps = preset_rayleigh3();
        let energy: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
        assert!((energy - 1.0).abs() < 1e-12);
    }
}
