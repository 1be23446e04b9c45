//! Row-wise softmax and its backward rule.

use super::{Mat, Scalar};

/// Softmax of each row, with per-row max subtraction so magnitudes up to
/// a few hundred stay finite.
pub fn softmax_rows<F: Scalar>(x: &Mat<F>) -> Mat<F> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let mx = row.fold(F::neg_infinity(), |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - mx).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    out
}

/// Given `a = softmax_rows(s)` and upstream `da`, returns `ds`:
/// `ds = a ⊙ (da − rowsum(da ⊙ a))`.
pub fn softmax_backward<F: Scalar>(a: &Mat<F>, da: &Mat<F>) -> Mat<F> {
    let mut ds = da.clone();
    for (mut ds_row, a_row) in ds.rows_mut().into_iter().zip(a.rows()) {
        let inner = ds_row
            .iter()
            .zip(a_row.iter())
            .fold(F::zero(), |acc, (&d, &p)| acc + d * p);
        ds_row
            .iter_mut()
            .zip(a_row.iter())
            .for_each(|(d, &p)| *d = p * (*d - inner));
    }
    ds
}
