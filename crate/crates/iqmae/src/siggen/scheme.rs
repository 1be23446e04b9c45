//! Modulation schemes and Gray-coded symbol mapping.
//!
//! Eight schemes span the PSK/QAM/FSK/analog families:
//!
//! - linear (constellation lookup): BPSK, QPSK, 8PSK, 16QAM, 64QAM, OOK
//! - frequency modulation: 4FSK, phase-continuous, modulation index 0.5
//! - analog: AM-DSB with 0.5 modulation depth on a lowpassed noise message
//!
//! Every linear constellation is normalized to unit average power, so
//! SNR is calibrated identically across schemes.

use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Psk8,
    Qam16,
    Qam64,
    Fsk4,
    Ook,
    AmDsb,
}

/// All schemes, in canonical label order.
pub const ALL_SCHEMES: [Modulation; 8] = [
    Modulation::Bpsk,
    Modulation::Qpsk,
    Modulation::Psk8,
    Modulation::Qam16,
    Modulation::Qam64,
    Modulation::Fsk4,
    Modulation::Ook,
    Modulation::AmDsb,
];

/// Reflected binary code of `k`.
fn gray(k: usize) -> usize {
    k ^ (k >> 1)
}

/// Gray-coded amplitude ladder: bit pattern g selects level k with
/// gray(k) = g, so adjacent levels differ in exactly one bit.
fn gray_axis(levels: &[f64]) -> Vec<f64> {
    let mut table = vec![0.0; levels.len()];
    for (k, &level) in levels.iter().enumerate() {
        table[gray(k)] = level;
    }
    table
}

impl Modulation {
    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "BPSK",
            Modulation::Qpsk => "QPSK",
            Modulation::Psk8 => "8PSK",
            Modulation::Qam16 => "16QAM",
            Modulation::Qam64 => "64QAM",
            Modulation::Fsk4 => "4FSK",
            Modulation::Ook => "OOK",
            Modulation::AmDsb => "AM-DSB",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        ALL_SCHEMES
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::config(format!("unknown modulation scheme {name:?}")))
    }

    /// Bits consumed per symbol; 0 for the analog scheme.
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk | Modulation::Ook => 1,
            Modulation::Qpsk | Modulation::Fsk4 => 2,
            Modulation::Psk8 => 3,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
            Modulation::AmDsb => 0,
        }
    }

    /// Whether symbols come from a complex constellation lookup.
    pub fn is_linear(self) -> bool {
        !matches!(self, Modulation::Fsk4 | Modulation::AmDsb)
    }

    /// Unit-average-power constellation, indexed by the Gray-coded bit
    /// pattern of a symbol. `None` for 4FSK and AM-DSB.
    pub fn constellation(self) -> Option<Vec<Complex64>> {
        let re = |v: f64| Complex64::new(v, 0.0);
        match self {
            Modulation::Bpsk => Some(vec![re(1.0), re(-1.0)]),
            Modulation::Ook => Some(vec![re(0.0), re(2.0_f64.sqrt())]),
            Modulation::Qpsk => {
                // One bit per axis: Gray by construction.
                let a = 0.5_f64.sqrt();
                let axis = [a, -a];
                Some(
                    (0..4)
                        .map(|b| Complex64::new(axis[b >> 1], axis[b & 1]))
                        .collect(),
                )
            }
            Modulation::Psk8 => {
                let mut points = vec![Complex64::new(0.0, 0.0); 8];
                for k in 0..8 {
                    let angle = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
                    points[gray(k)] = Complex64::new(angle.cos(), angle.sin());
                }
                Some(points)
            }
            Modulation::Qam16 => Some(square_qam(&[-3.0, -1.0, 1.0, 3.0], 10.0)),
            Modulation::Qam64 => Some(square_qam(
                &[-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0],
                42.0,
            )),
            Modulation::Fsk4 | Modulation::AmDsb => None,
        }
    }

    /// 4FSK tone frequencies in cycles/sample for a given oversampling,
    /// indexed by the Gray-coded bit pattern. Tone spacing is
    /// `h/sps` with modulation index h = 0.5.
    pub fn tone_table(self, sps: usize) -> Option<Vec<f64>> {
        match self {
            Modulation::Fsk4 => {
                let spacing = 0.5 / sps as f64;
                let mut tones = vec![0.0; 4];
                for k in 0..4 {
                    tones[gray(k)] = (k as f64 - 1.5) * spacing;
                }
                Some(tones)
            }
            _ => None,
        }
    }

    /// Maps a bit stream onto constellation points, MSB first within
    /// each symbol group.
    pub fn map_symbols(self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let points = self.constellation().ok_or_else(|| {
            Error::config(format!(
                "{} has no symbol constellation; it is synthesized directly",
                self.name()
            ))
        })?;
        group_bits(bits, self.bits_per_symbol())
            .map(|groups| groups.into_iter().map(|g| points[g]).collect())
    }
}

/// Square QAM from a per-axis Gray ladder, scaled by `1/√power_norm`.
fn square_qam(levels: &[f64], power_norm: f64) -> Vec<Complex64> {
    let axis = gray_axis(levels);
    let n = axis.len();
    let scale = power_norm.sqrt().recip();
    let mut points = Vec::with_capacity(n * n);
    for hi in 0..n {
        for lo in 0..n {
            points.push(Complex64::new(axis[hi] * scale, axis[lo] * scale));
        }
    }
    points
}

/// Collects bits into per-symbol indices, MSB first.
pub fn group_bits(bits: &[u8], bits_per_symbol: usize) -> Result<Vec<usize>> {
    if bits_per_symbol == 0 || bits.len() % bits_per_symbol != 0 {
        return Err(Error::config(format!(
            "bit count {} not divisible by {bits_per_symbol} bits/symbol",
            bits.len()
        )));
    }
    Ok(bits
        .chunks_exact(bits_per_symbol)
        .map(|chunk| chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize))
        .collect())
}
