//! Multi-head scaled-dot-product self-attention.

use ndarray::s;
use rand::Rng;

use super::{
    c,
    linear::Linear,
    ops::{softmax_backward, softmax_rows},
    Mat, ParamMut, ParamRef, Scalar,
};

/// Per head: `softmax(QKᵀ/√d_k)·V`; heads concatenated, then an output
/// projection mixes them. All four projections carry biases.
#[derive(Debug, Clone)]
pub struct Attention<F> {
    pub wq: Linear<F>,
    pub wk: Linear<F>,
    pub wv: Linear<F>,
    pub wo: Linear<F>,
    pub num_heads: usize,
}

/// Forward record: projected Q/K/V, per-head attention weights, and the
/// concatenated head outputs feeding the output projection.
pub struct AttentionCache<F> {
    x: Mat<F>,
    q: Mat<F>,
    k: Mat<F>,
    v: Mat<F>,
    attn: Vec<Mat<F>>,
    concat: Mat<F>,
}

impl<F: Scalar> AttentionCache<F> {
    /// Attention weight matrix of one head (rows sum to 1).
    pub fn weights(&self, head: usize) -> &Mat<F> {
        &self.attn[head]
    }

    /// Concatenated per-head outputs before the output projection.
    pub fn pre_projection(&self) -> &Mat<F> {
        &self.concat
    }
}

impl<F: Scalar> Attention<F> {
    pub fn new<R: Rng>(rng: &mut R, d: usize, num_heads: usize) -> Self {
        assert!(
            num_heads >= 1 && d % num_heads == 0,
            "model width {d} not divisible by {num_heads} heads"
        );
        Self {
            wq: Linear::new(rng, d, d),
            wk: Linear::new(rng, d, d),
            wv: Linear::new(rng, d, d),
            wo: Linear::new(rng, d, d),
            num_heads,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            wq: self.wq.zeros_like(),
            wk: self.wk.zeros_like(),
            wv: self.wv.zeros_like(),
            wo: self.wo.zeros_like(),
            num_heads: self.num_heads,
        }
    }

    pub fn width(&self) -> usize {
        self.wq.d_in()
    }

    pub fn forward(&self, x: &Mat<F>) -> (Mat<F>, AttentionCache<F>) {
        let (t, d) = (x.nrows(), self.width());
        assert!(t >= 1, "attention needs at least one row");
        let dk = d / self.num_heads;
        let scale = c::<F>(1.0 / (dk as f64).sqrt());

        let q = self.wq.forward(x);
        let k = self.wk.forward(x);
        let v = self.wv.forward(x);

        let mut concat = Mat::zeros((t, d));
        let mut attn = Vec::with_capacity(self.num_heads);
        for h in 0..self.num_heads {
            let cols = s![.., h * dk..(h + 1) * dk];
            let qh = q.slice(cols);
            let kh = k.slice(cols);
            let vh = v.slice(cols);
            let scores = qh.dot(&kh.t()).mapv_into(|s| s * scale);
            let a = softmax_rows(&scores);
            concat.slice_mut(cols).assign(&a.dot(&vh));
            attn.push(a);
        }

        let y = self.wo.forward(&concat);
        (
            y,
            AttentionCache {
                x: x.clone(),
                q,
                k,
                v,
                attn,
                concat,
            },
        )
    }

    pub fn backward(&self, cache: &AttentionCache<F>, dy: &Mat<F>, grad: &mut Self) -> Mat<F> {
        let (t, d) = (dy.nrows(), self.width());
        let dk = d / self.num_heads;
        let scale = c::<F>(1.0 / (dk as f64).sqrt());

        let dconcat = self.wo.backward(&cache.concat, dy, &mut grad.wo);

        let mut dq = Mat::zeros((t, d));
        let mut dkm = Mat::zeros((t, d));
        let mut dv = Mat::zeros((t, d));
        for h in 0..self.num_heads {
            let cols = s![.., h * dk..(h + 1) * dk];
            let qh = cache.q.slice(cols);
            let kh = cache.k.slice(cols);
            let vh = cache.v.slice(cols);
            let a = &cache.attn[h];

            let do_h = dconcat.slice(cols);
            let da = do_h.dot(&vh.t());
            dv.slice_mut(cols).assign(&a.t().dot(&do_h));

            let ds = softmax_backward(a, &da);
            dq.slice_mut(cols).assign(&ds.dot(&kh).mapv_into(|g| g * scale));
            dkm.slice_mut(cols)
                .assign(&ds.t().dot(&qh).mapv_into(|g| g * scale));
        }

        let dx_q = self.wq.backward(&cache.x, &dq, &mut grad.wq);
        let dx_k = self.wk.backward(&cache.x, &dkm, &mut grad.wk);
        let dx_v = self.wv.backward(&cache.x, &dv, &mut grad.wv);
        dx_q + dx_k + dx_v
    }

    pub fn param_refs(&self, prefix: &str) -> Vec<ParamRef<'_, F>> {
        let mut v = self.wq.param_refs(&format!("{prefix}.wq"));
        v.extend(self.wk.param_refs(&format!("{prefix}.wk")));
        v.extend(self.wv.param_refs(&format!("{prefix}.wv")));
        v.extend(self.wo.param_refs(&format!("{prefix}.wo")));
        v
    }

    pub fn param_muts(&mut self, prefix: &str) -> Vec<ParamMut<'_, F>> {
        let Self { wq, wk, wv, wo, .. } = self;
        let mut v = wq.param_muts(&format!("{prefix}.wq"));
        v.extend(wk.param_muts(&format!("{prefix}.wk")));
        v.extend(wv.param_muts(&format!("{prefix}.wv")));
        v.extend(wo.param_muts(&format!("{prefix}.wo")));
        v
    }
}

/// Brute-force single-head attention with explicit loops, including the
/// output projection. Kept as an independent oracle for the fused path.
pub fn single_head_reference<F: Scalar>(att: &Attention<F>, x: &Mat<F>) -> Mat<F> {
    assert_eq!(att.num_heads, 1, "reference covers the single-head case");
    let (t, d) = (x.nrows(), att.width());
    let affine = |l: &Linear<F>, x: &Mat<F>| {
        let mut out = Mat::zeros((t, d));
        for i in 0..t {
            for j in 0..d {
                let mut acc = l.b[j];
                for k in 0..d {
                    acc = acc + x[[i, k]] * l.w[[k, j]];
                }
                out[[i, j]] = acc;
            }
        }
        out
    };
    let q = affine(&att.wq, x);
    let k = affine(&att.wk, x);
    let v = affine(&att.wv, x);
    let scale = c::<F>(1.0 / (d as f64).sqrt());

    let mut ctx = Mat::zeros((t, d));
    for i in 0..t {
        let mut weights = vec![F::zero(); t];
        let mut mx = F::neg_infinity();
        for j in 0..t {
            let mut s = F::zero();
            for e in 0..d {
                s = s + q[[i, e]] * k[[j, e]];
            }
            weights[j] = s * scale;
            mx = mx.max(weights[j]);
        }
        let mut total = F::zero();
        for w in weights.iter_mut() {
            *w = (*w - mx).exp();
            total = total + *w;
        }
        for j in 0..t {
            let a = weights[j] / total;
            for e in 0..d {
                ctx[[i, e]] = ctx[[i, e]] + a * v[[j, e]];
            }
        }
    }
    affine(&att.wo, &ctx)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::super::fd;
    use super::*;

    fn random_attention(rng: &mut ChaCha8Rng, d: usize, heads: usize) -> Attention<f64> {
        let mut att = Attention::new(rng, d, heads);
        for l in [&mut att.wq, &mut att.wk, &mut att.wv, &mut att.wo] {
            l.w.mapv_inplace(|_| 0.3 * f64::std_normal(rng));
            l.b.mapv_inplace(|_| 0.1 * f64::std_normal(rng));
        }
        att
    }

    #[test]
    fn single_row_attends_to_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let att = random_attention(&mut rng, 6, 2);
        let x = Mat::from_shape_fn((1, 6), |_| f64::std_normal(&mut rng));
        let (y, cache) = att.forward(&x);
        for h in 0..2 {
            assert_eq!(cache.weights(h)[[0, 0]], 1.0);
        }
        // Context equals V itself, so y = wo(v).
        let v = att.wv.forward(&x);
        let expect = att.wo.forward(&v);
        assert!((y - expect).iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn identical_value_rows_collapse_to_that_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut att = random_attention(&mut rng, 4, 1);
        // Zero value weights: V rows all equal the value bias.
        att.wv.w.fill(0.0);
        let x = Mat::from_shape_fn((5, 4), |_| f64::std_normal(&mut rng));
        let (_, cache) = att.forward(&x);
        let vbias = att.wv.b.to_vec();
        for row in cache.pre_projection().rows() {
            for (got, want) in row.iter().zip(&vbias) {
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let att = random_attention(&mut rng, 8, 4);
        let x = Mat::from_shape_fn((7, 8), |_| 20.0 * f64::std_normal(&mut rng));
        let (_, cache) = att.forward(&x);
        for h in 0..4 {
            for row in cache.weights(h).rows() {
                assert!((row.sum() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn matches_triple_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let att = random_attention(&mut rng, 8, 1);
            let x = Mat::from_shape_fn((3, 8), |_| f64::std_normal(&mut rng));
            let (y, _) = att.forward(&x);
            let want = single_head_reference(&att, &x);
            for (a, b) in y.iter().zip(want.iter()) {
                let rel = (a - b).abs() / b.abs().max(1e-3);
                assert!(rel < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut att = random_attention(&mut rng, 8, 2);
        let x = Mat::from_shape_fn((5, 8), |_| f64::std_normal(&mut rng));
        let w = Mat::from_shape_fn((5, 8), |_| f64::std_normal(&mut rng));
        let loss = |a: &Attention<f64>, x: &Mat<f64>| (a.forward(x).0 * &w).sum();

        let (_, cache) = att.forward(&x);
        let mut grad = att.zeros_like();
        let dx = att.backward(&cache, &w, &mut grad);

        let n = fd::total_len(&att.param_refs("a"));
        let numeric = fd::central_diff(n, 1e-5, |i, d| {
            fd::nudge(&mut att.param_muts("a"), i, d);
            let v = loss(&att, &x);
            fd::nudge(&mut att.param_muts("a"), i, -d);
            v
        });
        let analytic = fd::flatten(&grad.param_refs("a"));
        assert!(fd::max_rel_err(&analytic, &numeric, 1e-9) < 1e-4);

        let mut xp = x.clone();
        let numeric_x = fd::central_diff(xp.len(), 1e-5, |i, d| {
            xp.as_slice_mut().unwrap()[i] += d;
            let v = loss(&att, &xp);
            xp.as_slice_mut().unwrap()[i] -= d;
            v
        });
        let analytic_x: Vec<f64> = dx.iter().copied().collect();
        assert!(fd::max_rel_err(&analytic_x, &numeric_x, 1e-9) < 1e-4);
    }
}
