//! Two-layer feed-forward block with exact GELU.

use rand::Rng;

use super::{c, linear::Linear, Mat, ParamMut, ParamRef, Scalar};

/// Exact Gaussian-CDF GELU: `x · Φ(x)`.
pub fn gelu<F: Scalar>(x: F) -> F {
    let half = c::<F>(0.5);
    let inv_sqrt2 = c::<F>(std::f64::consts::FRAC_1_SQRT_2);
    x * half * (F::one() + (x * inv_sqrt2).erf())
}

/// `gelu'(x) = Φ(x) + x·φ(x)`.
pub fn gelu_prime<F: Scalar>(x: F) -> F {
    let half = c::<F>(0.5);
    let inv_sqrt2 = c::<F>(std::f64::consts::FRAC_1_SQRT_2);
    let inv_sqrt_2pi = c::<F>(0.398_942_280_401_432_7);
    let phi_cdf = half * (F::one() + (x * inv_sqrt2).erf());
    let phi_pdf = inv_sqrt_2pi * (-half * x * x).exp();
    phi_cdf + x * phi_pdf
}

/// `y = GELU(xW₁ + b₁)W₂ + b₂`.
#[derive(Debug, Clone)]
pub struct Mlp<F> {
    pub fc1: Linear<F>,
    pub fc2: Linear<F>,
}

/// Input, pre-activation, and activated hidden state.
pub struct MlpCache<F> {
    x: Mat<F>,
    h: Mat<F>,
    a: Mat<F>,
}

impl<F: Scalar> Mlp<F> {
    pub fn new<R: Rng>(rng: &mut R, d: usize, hidden: usize) -> Self {
        Self {
            fc1: Linear::new(rng, d, hidden),
            fc2: Linear::new(rng, hidden, d),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            fc1: self.fc1.zeros_like(),
            fc2: self.fc2.zeros_like(),
        }
    }

    pub fn forward(&self, x: &Mat<F>) -> (Mat<F>, MlpCache<F>) {
        let h = self.fc1.forward(x);
        let a = h.mapv(gelu);
        let y = self.fc2.forward(&a);
        (
            y,
            MlpCache {
                x: x.clone(),
                h,
                a,
            },
        )
    }

    pub fn backward(&self, cache: &MlpCache<F>, dy: &Mat<F>, grad: &mut Self) -> Mat<F> {
        let da = self.fc2.backward(&cache.a, dy, &mut grad.fc2);
        let dh = da * cache.h.mapv(gelu_prime);
        self.fc1.backward(&cache.x, &dh, &mut grad.fc1)
    }

    pub fn param_refs(&self, prefix: &str) -> Vec<ParamRef<'_, F>> {
        let mut v = self.fc1.param_refs(&format!("{prefix}.fc1"));
        v.extend(self.fc2.param_refs(&format!("{prefix}.fc2")));
        v
    }

    pub fn param_muts(&mut self, prefix: &str) -> Vec<ParamMut<'_, F>> {
        let (fc1, fc2) = (&mut self.fc1, &mut self.fc2);
        let mut v = fc1.param_muts(&format!("{prefix}.fc1"));
        v.extend(fc2.param_muts(&format!("{prefix}.fc2")));
        v
    }
}
