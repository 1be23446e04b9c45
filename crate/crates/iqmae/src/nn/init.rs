//! Weight initialization.

use rand::Rng;

use super::{c, Mat, Scalar, Vect};

/// One truncated-normal draw: resample until the value lands within
/// two standard deviations of the mean.
pub fn trunc_normal_draw<F: Scalar, R: Rng>(rng: &mut R, std: F) -> F {
    let bound = c::<F>(2.0) * std;
    loop {
        let v = F::std_normal(rng) * std;
        if v >= -bound && v <= bound {
            return v;
        }
    }
}

/// Matrix with truncated-normal entries (mean 0, given std, clipped at 2·std).
pub fn trunc_normal_mat<F: Scalar, R: Rng>(rng: &mut R, rows: usize, cols: usize, std: F) -> Mat<F> {
    Mat::from_shape_fn((rows, cols), |_| trunc_normal_draw(rng, std))
}

/// Vector with truncated-normal entries.
pub fn trunc_normal_vec<F: Scalar, R: Rng>(rng: &mut R, len: usize, std: F) -> Vect<F> {
    Vect::from_shape_fn(len, |_| trunc_normal_draw(rng, std))
}

/// Sinusoidal position table: row `p` interleaves
/// `sin(p / 10000^(2i/dim))` and `cos(p / 10000^(2i/dim))`.
///
/// Used as the starting value of the learnable positional tables. The
/// unit-scale rows give attention a usable positional signal from the
/// first step (tiny random positions leave early attention nearly
/// uniform, which stalls reconstruction on the trivial
/// predict-the-mean solution); training remains free to reshape the
/// table afterwards.
pub fn sincos_mat<F: Scalar>(rows: usize, dim: usize) -> Mat<F> {
    assert!(dim % 2 == 0, "sinusoidal table needs an even dim, got {dim}");
    Mat::from_shape_fn((rows, dim), |(p, j)| {
        let rate = 10000f64.powf(-(((j / 2) * 2) as f64) / dim as f64);
        let angle = p as f64 * rate;
        c(if j % 2 == 0 { angle.sin() } else { angle.cos() })
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn draws_stay_within_two_std() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let std = 0.02f64;
        for _ in 0..20_000 {
            let v = trunc_normal_draw(&mut rng, std);
            assert!(v.abs() <= 2.0 * std, "draw {v} outside 2 std");
        }
    }

    #[test]
    fn sincos_rows_have_unit_scale_and_zero_origin() {
        let m = sincos_mat::<f64>(128, 64);
        // Row 0: sin(0)=0, cos(0)=1 interleaved.
        for j in 0..64 {
            let want = if j % 2 == 0 { 0.0 } else { 1.0 };
            assert!((m[[0, j]] - want).abs() < 1e-12);
        }
        // Every row has squared norm dim/2 (sin^2 + cos^2 per pair).
        for r in 0..128 {
            let n2: f64 = m.row(r).iter().map(|v| v * v).sum();
            assert!((n2 - 32.0).abs() < 1e-9, "row {r} norm^2 {n2}");
        }
        // Neighbouring rows are distinct.
        for r in 0..127 {
            let d: f64 = (&m.row(r + 1) - &m.row(r)).iter().map(|v| v * v).sum();
            assert!(d > 1e-3, "rows {r},{} collide", r + 1);
        }
    }

    #[test]
    fn sample_moments_are_plausible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let std = 0.02f64;
        let m = trunc_normal_mat::<f64, _>(&mut rng, 200, 200, std);
        let mean = m.iter().sum::<f64>() / m.len() as f64;
        let var = m.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m.len() as f64;
        assert!(mean.abs() < 1e-3, "mean {mean}");
        // Truncation at 2 std shrinks the variance below std^2 by a known
        // factor (~0.774 for a 2-sigma cut); just require the right decade.
        assert!(var > 0.5 * std * std && var < 1.1 * std * std, "var {var}");
    }
}
