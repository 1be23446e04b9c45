//! Root-raised-cosine pulse shaping.

use num_complex::Complex64;

/// Unit-energy RRC impulse response spanning `span_symbols` symbol
/// periods at `sps` samples/symbol (odd length `span·sps + 1`).
///
/// The two removable singularities of the closed form (t = 0 and
/// |t| = T/(4β)) are evaluated by their limits.
pub fn rrc_taps(sps: usize, rolloff: f64, span_symbols: usize) -> Vec<f64> {
    assert!(sps >= 1, "sps must be positive");
    assert!((0.0..=1.0).contains(&rolloff), "rolloff outside [0, 1]");
    let len = span_symbols * sps + 1;
    let half = (len - 1) as f64 / 2.0;
    let beta = rolloff;
    let pi = std::f64::consts::PI;

    let mut taps: Vec<f64> = (0..len)
        .map(|n| {
            let u = (n as f64 - half) / sps as f64;
            if u == 0.0 {
                1.0 + beta * (4.0 / pi - 1.0)
            } else if beta > 0.0 && (u.abs() - 1.0 / (4.0 * beta)).abs() < 1e-12 {
                (beta / 2.0_f64.sqrt())
                    * ((1.0 + 2.0 / pi) * (pi / (4.0 * beta)).sin()
                        + (1.0 - 2.0 / pi) * (pi / (4.0 * beta)).cos())
            } else {
                let num = (pi * u * (1.0 - beta)).sin()
                    + 4.0 * beta * u * (pi * u * (1.0 + beta)).cos();
                let den = pi * u * (1.0 - (4.0 * beta * u).powi(2));
                num / den
            }
        })
        .collect();

    let energy: f64 = taps.iter().map(|t| t * t).sum();
    let scale = energy.sqrt().recip();
    taps.iter_mut().for_each(|t| *t *= scale);
    taps
}

/// Zero-stuffs symbols to `sps` samples each and applies the RRC filter.
///
/// Output length equals `symbols.len() · sps`; the filter transient is
/// trimmed so each symbol's pulse peaks at the center of its own
/// sps-sample slot. `sps = 1` is the identity configuration (single
/// unit tap).
pub fn upsample_and_shape(symbols: &[Complex64], sps: usize, rolloff: f64) -> Vec<Complex64> {
    assert!(sps >= 1, "sps must be positive");
    if sps == 1 {
        return symbols.to_vec();
    }
    let taps = rrc_taps(sps, rolloff, 8);
    let n_out = symbols.len() * sps;
    let full_len = n_out + taps.len() - 1;
    let mut full = vec![Complex64::new(0.0, 0.0); full_len];
    for (k, &s) in symbols.iter().enumerate() {
        if s == Complex64::new(0.0, 0.0) {
            continue;
        }
        let base = k * sps;
        for (j, &h) in taps.iter().enumerate() {
            full[base + j] += s * h;
        }
    }
    // Peak of symbol k sits at full index k·sps + (L−1)/2; shifting the
    // window start back by sps/2 centers it within slot k.
    let start = (taps.len() - 1) / 2 - sps / 2;
    full[start..start + n_out].to_vec()
}
