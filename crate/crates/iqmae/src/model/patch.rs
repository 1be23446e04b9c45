//! Frame ↔ patch-sequence conversion.

use ndarray::Array2;

use crate::nn::{Mat, Scalar};
use crate::{Error, Result};

/// Splits a 2×T frame into T/p patches of length 2p. Patch i holds the
/// I samples of its window followed by the Q samples:
/// `[I_{ip}..I_{(i+1)p-1}, Q_{ip}..Q_{(i+1)p-1}]`.
pub fn patchify<F: Scalar>(samples: &Array2<F>, patch_size: usize) -> Result<Mat<F>> {
    let (rows, t) = (samples.nrows(), samples.ncols());
    if rows != 2 {
        return Err(Error::shape(format!("frame has {rows} rows, expected 2")));
    }
    if patch_size == 0 || t % patch_size != 0 {
        return Err(Error::shape(format!(
            "frame length {t} not divisible by patch size {patch_size}"
        )));
    }
    let n = t / patch_size;
    let mut patches = Mat::zeros((n, 2 * patch_size));
    for i in 0..n {
        for j in 0..patch_size {
            patches[[i, j]] = samples[[0, i * patch_size + j]];
            patches[[i, patch_size + j]] = samples[[1, i * patch_size + j]];
        }
    }
    Ok(patches)
}

/// Inverse of [`patchify`]: reassembles the 2×T frame.
pub fn unpatchify<F: Scalar>(patches: &Mat<F>, patch_size: usize) -> Result<Array2<F>> {
    let (n, width) = (patches.nrows(), patches.ncols());
    if width != 2 * patch_size {
        return Err(Error::shape(format!(
            "patch width {width} inconsistent with patch size {patch_size}"
        )));
    }
    let mut samples = Array2::zeros((2, n * patch_size));
    for i in 0..n {
        for j in 0..patch_size {
            samples[[0, i * patch_size + j]] = patches[[i, j]];
            samples[[1, i * patch_size + j]] = patches[[i, patch_size + j]];
        }
    }
    Ok(samples)
}

/// Widens a stored f32 frame into the model's scalar type.
pub fn frame_to_scalar<F: Scalar>(samples: &Array2<f32>) -> Array2<F> {
    samples.mapv(|v| F::from(v).expect("f32 widens into scalar type"))
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn default_geometry_yields_128_by_16() {
        let frame = Array2::<f64>::zeros((2, 1024));
        let patches = patchify(&frame, 8).unwrap();
        assert_eq!(patches.shape(), &[128, 16]);
    }

    #[test]
    fn patchify_is_a_bijection() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let frame = Array2::<f64>::from_shape_fn((2, 64), |_| f64::std_normal(&mut rng));
        let back = unpatchify(&patchify(&frame, 8).unwrap(), 8).unwrap();
        assert_eq!(back, frame);
    }

    #[test]
    fn first_patch_holds_first_window_i_then_q() {
        let frame = Array2::<f64>::from_shape_fn((2, 16), |(r, c)| (r * 100 + c) as f64);
        let patches = patchify(&frame, 8).unwrap();
        assert_eq!(patches.nrows(), 2);
        let expect: Vec<f64> = (0..8)
            .map(|c| c as f64)
            .chain((0..8).map(|c| (100 + c) as f64))
            .collect();
        assert_eq!(patches.row(0).to_vec(), expect);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(patchify(&Array2::<f64>::zeros((3, 16)), 8).is_err());
        assert!(patchify(&Array2::<f64>::zeros((2, 17)), 8).is_err());
    }
}
