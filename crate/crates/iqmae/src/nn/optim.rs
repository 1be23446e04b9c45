//! AdamW with decoupled weight decay.

use super::{c, ParamMut, ParamRef, Scalar};

#[derive(Debug, Clone, Copy)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// First/second-moment state stored flat in canonical parameter order.
/// The layout (name, length) is captured at construction and re-checked
/// every step, so optimizer state can never silently follow the wrong
/// tensor.
pub struct AdamW<F> {
    cfg: AdamWConfig,
    layout: Vec<(String, usize)>,
    lr_scale: Vec<F>,
    m: Vec<F>,
    v: Vec<F>,
    t: u64,
}

impl<F: Scalar> AdamW<F> {
    pub fn new(cfg: AdamWConfig, params: &[ParamRef<'_, F>]) -> Self {
        let layout: Vec<(String, usize)> = params
            .iter()
            .map(|p| (p.name.clone(), p.data.len()))
            .collect();
        let total = layout.iter().map(|(_, n)| n).sum();
        let ones = vec![F::one(); layout.len()];
        Self {
            cfg,
            layout,
            lr_scale: ones,
            m: vec![F::zero(); total],
            v: vec![F::zero(); total],
            t: 0,
        }
    }

    /// Per-tensor learning-rate multiplier, keyed on parameter name. The
    /// multiplier scales the whole update (gradient step and decay), the
    /// same contract as optimizer param groups elsewhere.
    pub fn set_lr_scale(&mut self, scale: impl Fn(&str) -> f64) {
        self.lr_scale = self.layout.iter().map(|(n, _)| c::<F>(scale(n))).collect();
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// One update over the full parameter list. `params` and `grads` must
    /// enumerate the same tensors in the same order as at construction.
    pub fn step(&mut self, lr: F, params: &mut [ParamMut<'_, F>], grads: &[ParamRef<'_, F>]) {
        assert_eq!(params.len(), self.layout.len(), "parameter list changed");
        assert_eq!(grads.len(), self.layout.len(), "gradient list changed");
        self.t += 1;

        let b1 = c::<F>(self.cfg.beta1);
        let b2 = c::<F>(self.cfg.beta2);
        let eps = c::<F>(self.cfg.eps);
        let wd = c::<F>(self.cfg.weight_decay);
        let corr1 = F::one() - c::<F>(self.cfg.beta1.powi(self.t as i32));
        let corr2 = F::one() - c::<F>(self.cfg.beta2.powi(self.t as i32));

        let mut off = 0;
        for (((p, g), (name, len)), scale) in
            params.iter_mut().zip(grads).zip(&self.layout).zip(&self.lr_scale)
        {
            assert_eq!(&p.name, name, "parameter order changed at {name}");
            assert_eq!(&g.name, name, "gradient order changed at {name}");
            assert_eq!(p.data.len(), *len, "parameter {name} resized");
            assert_eq!(g.data.len(), *len, "gradient {name} resized");

            let lr_p = lr * *scale;
            let m = &mut self.m[off..off + len];
            let v = &mut self.v[off..off + len];
            for i in 0..*len {
                let gi = g.data[i];
                m[i] = b1 * m[i] + (F::one() - b1) * gi;
                v[i] = b2 * v[i] + (F::one() - b2) * gi * gi;
                let m_hat = m[i] / corr1;
                let v_hat = v[i] / corr2;
                let theta = p.data[i];
                // Decay subtracted separately so the wd term stays an
                // additive, exactly-identifiable contribution.
                p.data[i] = theta - lr_p * (m_hat / (v_hat.sqrt() + eps)) - lr_p * wd * theta;
            }
            off += len;
        }
    }
}
