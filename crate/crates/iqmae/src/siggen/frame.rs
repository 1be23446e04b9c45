//! Single-frame synthesis: bits through the full impairment chain.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::channel::{apply_channel_parts, apply_cfo_phase, ChannelConfig, Snr};
use super::scheme::{group_bits, Modulation};
use super::shaping::{rrc_taps, upsample_and_shape};
use crate::{Error, Result};

/// Everything one frame draw depends on. Two calls with equal params
/// produce bit-identical frames.
#[derive(Debug, Clone)]
pub struct FrameParams {
    pub frame_length: usize,
    pub sps: usize,
    pub rolloff: f64,
    /// CFO drawn uniformly from ±this many cycles/sample.
    pub cfo_max_cycles: f64,
    pub taps: Vec<Complex64>,
    pub snr: Snr,
    pub seed: u64,
}

/// One stored frame: 2×T real samples (row 0 = I, row 1 = Q).
#[derive(Debug, Clone, PartialEq)]
pub struct IQFrame {
    pub samples: Array2<f32>,
    pub snr: Snr,
    pub label: Option<u16>,
    pub frame_id: u64,
}

impl IQFrame {
    pub fn frame_length(&self) -> usize {
        self.samples.ncols()
    }

    /// Mean per-sample power `mean(I² + Q²)`.
    pub fn average_power(&self) -> f64 {
        let t = self.samples.ncols() as f64;
        self.samples.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>() / t
    }
}

/// Phase-continuous FSK: the phase advances by the active tone's
/// frequency every sample, so the envelope is exactly constant.
fn synthesize_fsk(tone_per_symbol: &[f64], sps: usize) -> Vec<Complex64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut phase = 0.0;
    let mut out = Vec::with_capacity(tone_per_symbol.len() * sps);
    for &freq in tone_per_symbol {
        for _ in 0..sps {
            out.push(Complex64::from_polar(1.0, phase));
            phase += two_pi * freq;
        }
    }
    out
}

/// AM-DSB message: lowpassed Gaussian noise normalized to unit peak,
/// carried as `1 + 0.5·m̂` on the real axis.
fn synthesize_am(frame_length: usize, sps: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let lowpass = rrc_taps(sps.max(2), 0.35, 8);
    let raw: Vec<f64> = (0..frame_length).map(|_| StandardNormal.sample(rng)).collect();
    let mut message: Vec<f64> = (0..frame_length)
        .map(|n| {
            lowpass
                .iter()
                .enumerate()
                .take(n + 1)
                .map(|(k, &h)| h * raw[n - k])
                .sum()
        })
        .collect();
    let peak = message.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if peak > 0.0 {
        message.iter_mut().for_each(|v| *v /= peak);
    }
    message
        .into_iter()
        .map(|m| Complex64::new(1.0 + 0.5 * m, 0.0))
        .collect()
}

/// Modulated baseband at unit symbol scale, before any impairment.
fn synthesize_baseband(
    scheme: Modulation,
    params: &FrameParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Complex64>> {
    let t = params.frame_length;
    if t % params.sps != 0 {
        return Err(Error::config(format!(
            "frame length {t} not divisible by sps {}",
            params.sps
        )));
    }
    let n_sym = t / params.sps;
    let draw_bits = |rng: &mut ChaCha8Rng, count: usize| -> Vec<u8> {
        (0..count).map(|_| rng.gen_range(0..2u8)).collect()
    };
    match scheme {
        Modulation::Fsk4 => {
            let bits = draw_bits(rng, n_sym * scheme.bits_per_symbol());
            let tones = scheme.tone_table(params.sps).expect("FSK tone table");
            let tone_per_symbol: Vec<f64> = group_bits(&bits, scheme.bits_per_symbol())?
                .into_iter()
                .map(|g| tones[g])
                .collect();
            Ok(synthesize_fsk(&tone_per_symbol, params.sps))
        }
        Modulation::AmDsb => Ok(synthesize_am(t, params.sps, rng)),
        _ => {
            let bits = draw_bits(rng, n_sym * scheme.bits_per_symbol());
            let symbols = scheme.map_symbols(&bits)?;
            Ok(upsample_and_shape(&symbols, params.sps, params.rolloff))
        }
    }
}

/// Runs the full chain and returns the clean (post-channel, pre-noise)
/// and received waveforms, both unnormalized. Calibration tests measure
/// SNR as the power ratio of `clean` to `received − clean`.
pub fn synthesize_received(
    scheme: Modulation,
    params: &FrameParams,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let baseband = synthesize_baseband(scheme, params, &mut rng)?;
    let cfo = uniform(&mut rng, -params.cfo_max_cycles, params.cfo_max_cycles);
    let phase = uniform(&mut rng, 0.0, 2.0 * std::f64::consts::PI);
    let rotated = apply_cfo_phase(&baseband, cfo, phase);
    let cfg = ChannelConfig {
        cfo_cycles_per_sample: cfo,
        phase_rad: phase,
        taps: params.taps.clone(),
        snr: params.snr,
        seed: rng.gen(),
    };
    Ok(apply_channel_parts(&rotated, &cfg))
}

/// Uniform draw that tolerates a collapsed range (e.g. CFO disabled).
fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Synthesizes, normalizes to unit average power, and packs one frame.
pub fn generate_frame(
    scheme: Modulation,
    params: &FrameParams,
    frame_id: u64,
    label: Option<u16>,
) -> Result<IQFrame> {
    let (_, received) = synthesize_received(scheme, params)?;
    let t = received.len();
    let power: f64 = received.iter().map(|v| v.norm_sqr()).sum::<f64>() / t as f64;
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::Numerical {
            step: 0,
            what: format!("frame {frame_id} has degenerate power {power}"),
        });
    }
    let scale = power.sqrt().recip();
    let mut samples = Array2::<f32>::zeros((2, t));
    for (i, v) in received.iter().enumerate() {
        samples[[0, i]] = (v.re * scale) as f32;
        samples[[1, i]] = (v.im * scale) as f32;
    }
    Ok(IQFrame {
        samples,
        snr: params.snr,
        label,
        frame_id,
    })
}
