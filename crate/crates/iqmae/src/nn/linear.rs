//! Dense affine layer `y = xW + b`.

use ndarray::Axis;
use rand::Rng;

use super::{c, init, mat_mut, mat_ref, vec_mut, vec_ref, Mat, ParamMut, ParamRef, Scalar, Vect};

/// Weights are stored `[in, out]` so a `T×in` activation matrix
/// multiplies on the right; the input itself serves as the backward
/// cache.
#[derive(Debug, Clone)]
pub struct Linear<F> {
    pub w: Mat<F>,
    pub b: Vect<F>,
}

impl<F: Scalar> Linear<F> {
    /// Truncated-normal weights (std 0.02), zero bias.
    pub fn new<R: Rng>(rng: &mut R, d_in: usize, d_out: usize) -> Self {
        Self {
            w: init::trunc_normal_mat(rng, d_in, d_out, c(0.02)),
            b: Vect::zeros(d_out),
        }
    }

    pub fn zeros(d_in: usize, d_out: usize) -> Self {
        Self {
            w: Mat::zeros((d_in, d_out)),
            b: Vect::zeros(d_out),
        }
    }

    /// Zero-filled gradient holder of matching shape.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.w.nrows(), self.w.ncols())
    }

    pub fn d_in(&self) -> usize {
        self.w.nrows()
    }

    pub fn d_out(&self) -> usize {
        self.w.ncols()
    }

    /// `T×in → T×out`.
    pub fn forward(&self, x: &Mat<F>) -> Mat<F> {
        assert_eq!(x.ncols(), self.d_in(), "linear input width mismatch");
        x.dot(&self.w) + &self.b
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &Mat<F>, dy: &Mat<F>, grad: &mut Self) -> Mat<F> {
        grad.w += &x.t().dot(dy);
        grad.b += &dy.sum_axis(Axis(0));
        dy.dot(&self.w.t())
    }

    pub fn param_refs(&self, prefix: &str) -> Vec<ParamRef<'_, F>> {
        vec![
            mat_ref(format!("{prefix}.w"), &self.w),
            vec_ref(format!("{prefix}.b"), &self.b),
        ]
    }

    pub fn param_muts(&mut self, prefix: &str) -> Vec<ParamMut<'_, F>> {
        vec![
            mat_mut(format!("{prefix}.w"), &mut self.w),
            vec_mut(format!("{prefix}.b"), &mut self.b),
        ]
    }
}
