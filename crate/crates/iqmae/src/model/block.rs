//! Pre-norm transformer block.

use rand::Rng;

use crate::nn::{
    Attention, AttentionCache, LayerNorm, LayerNormCache, Mat, Mlp, ParamMut, ParamRef, Scalar,
};

/// `h = x + MHA(LN(x)); y = h + MLP(LN(h))`.
#[derive(Debug, Clone)]
pub struct TransformerBlock<F> {
    pub ln1: LayerNorm<F>,
    pub attn: Attention<F>,
    pub ln2: LayerNorm<F>,
    pub mlp: Mlp<F>,
}

pub struct BlockCache<F> {
    ln1: LayerNormCache<F>,
    attn: AttentionCache<F>,
    ln2: LayerNormCache<F>,
    mlp: crate::nn::mlp::MlpCache<F>,
}

impl<F: Scalar> TransformerBlock<F> {
    pub fn new<R: Rng>(rng: &mut R, width: usize, heads: usize, mlp_ratio: usize) -> Self {
        Self {
            ln1: LayerNorm::new(width),
            attn: Attention::new(rng, width, heads),
            ln2: LayerNorm::new(width),
            mlp: Mlp::new(rng, width, width * mlp_ratio),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            ln1: self.ln1.zeros_like(),
            attn: self.attn.zeros_like(),
            ln2: self.ln2.zeros_like(),
            mlp: self.mlp.zeros_like(),
        }
    }

    pub fn forward(&self, x: &Mat<F>) -> (Mat<F>, BlockCache<F>) {
        let (a_in, ln1) = self.ln1.forward(x);
        let (a_out, attn) = self.attn.forward(&a_in);
        let h = x + &a_out;
        let (m_in, ln2) = self.ln2.forward(&h);
        let (m_out, mlp) = self.mlp.forward(&m_in);
        let y = h + m_out;
        (y, BlockCache { ln1, attn, ln2, mlp })
    }

    pub fn backward(&self, cache: &BlockCache<F>, dy: &Mat<F>, grad: &mut Self) -> Mat<F> {
        // y = h + mlp(ln2(h)); both residual branches carry dy.
        let dm_in = self.mlp.backward(&cache.mlp, dy, &mut grad.mlp);
        let dh = dy + &self.ln2.backward(&cache.ln2, &dm_in, &mut grad.ln2);
        // h = x + attn(ln1(x)).
        let da_in = self.attn.backward(&cache.attn, &dh, &mut grad.attn);
        &dh + &self.ln1.backward(&cache.ln1, &da_in, &mut grad.ln1)
    }

    pub fn param_refs(&self, prefix: &str) -> Vec<ParamRef<'_, F>> {
        let mut v = self.ln1.param_refs(&format!("{prefix}.ln1"));
        v.extend(self.attn.param_refs(&format!("{prefix}.attn")));
        v.extend(self.ln2.param_refs(&format!("{prefix}.ln2")));
        v.extend(self.mlp.param_refs(&format!("{prefix}.mlp")));
        v
    }

    pub fn param_muts(&mut self, prefix: &str) -> Vec<ParamMut<'_, F>> {
        let Self {
            ln1,
            attn,
            ln2,
            mlp,
        } = self;
        let mut v = ln1.param_muts(&format!("{prefix}.ln1"));
        v.extend(attn.param_muts(&format!("{prefix}.attn")));
        v.extend(ln2.param_muts(&format!("{prefix}.ln2")));
        v.extend(mlp.param_muts(&format!("{prefix}.mlp")));
        v
    }
}
