//! Per-row layer normalization with learnable affine.

use ndarray::Axis;

use super::{c, vec_mut, vec_ref, Mat, ParamMut, ParamRef, Scalar, Vect};

/// `y = γ ⊙ (x − μ)/√(σ² + ε) + β`, statistics taken per row.
///
/// Variance is the biased (1/D) estimator.
#[derive(Debug, Clone)]
pub struct LayerNorm<F> {
    pub g: Vect<F>,
    pub b: Vect<F>,
    pub eps: F,
}

/// Standardized activations and per-row inverse std, recorded forward.
pub struct LayerNormCache<F> {
    xhat: Mat<F>,
    rstd: Vect<F>,
}

impl<F: Scalar> LayerNorm<F> {
    /// Identity transform at init: γ = 1, β = 0.
    pub fn new(width: usize) -> Self {
        Self {
            g: Vect::ones(width),
            b: Vect::zeros(width),
            eps: c(1e-5),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            g: Vect::zeros(self.g.len()),
            b: Vect::zeros(self.b.len()),
            eps: self.eps,
        }
    }

    pub fn width(&self) -> usize {
        self.g.len()
    }

    pub fn forward(&self, x: &Mat<F>) -> (Mat<F>, LayerNormCache<F>) {
        assert_eq!(x.ncols(), self.width(), "layer_norm width mismatch");
        let d = c::<F>(x.ncols() as f64);
        let mut xhat = x.clone();
        let mut rstd = Vect::zeros(x.nrows());
        for (mut row, r) in xhat.rows_mut().into_iter().zip(rstd.iter_mut()) {
            let mu = row.sum() / d;
            let var = row.fold(F::zero(), |acc, &v| acc + (v - mu) * (v - mu)) / d;
            let inv = (var + self.eps).sqrt().recip();
            row.mapv_inplace(|v| (v - mu) * inv);
            *r = inv;
        }
        let y = &xhat * &self.g + &self.b;
        (y, LayerNormCache { xhat, rstd })
    }

    pub fn backward(&self, cache: &LayerNormCache<F>, dy: &Mat<F>, grad: &mut Self) -> Mat<F> {
        let d = c::<F>(self.width() as f64);
        grad.g += &(dy * &cache.xhat).sum_axis(Axis(0));
        grad.b += &dy.sum_axis(Axis(0));

        // dxhat = dy ⊙ γ; dx = rstd/D · (D·dxhat − Σdxhat − xhat·Σ(dxhat ⊙ xhat))
        let dxhat = dy * &self.g;
        let mut dx = Mat::zeros(dy.raw_dim());
        for ((mut dx_row, dxhat_row), (xhat_row, &inv)) in dx
            .rows_mut()
            .into_iter()
            .zip(dxhat.rows())
            .zip(cache.xhat.rows().into_iter().zip(cache.rstd.iter()))
        {
            let s1 = dxhat_row.sum();
            let s2 = dxhat_row
                .iter()
                .zip(xhat_row.iter())
                .fold(F::zero(), |acc, (&a, &b)| acc + a * b);
            for ((o, &dh), &xh) in dx_row.iter_mut().zip(dxhat_row.iter()).zip(xhat_row.iter()) {
                *o = inv / d * (d * dh - s1 - xh * s2);
            }
        }
        dx
    }

    pub fn param_refs(&self, prefix: &str) -> Vec<ParamRef<'_, F>> {
        vec![
            vec_ref(format!("{prefix}.g"), &self.g),
            vec_ref(format!("{prefix}.b"), &self.b),
        ]
    }

    pub fn param_muts(&mut self, prefix: &str) -> Vec<ParamMut<'_, F>> {
        vec![
            vec_mut(format!("{prefix}.g"), &mut self.g),
            vec_mut(format!("{prefix}.b"), &mut self.b),
        ]
    }
}
