//! Patch embedding and the masked encoder stack.

use rand::Rng;

use super::block::{BlockCache, TransformerBlock};
use super::config::ModelConfig;
use super::mask::MaskPlan;
use crate::nn::{c, init, mat_mut, mat_ref, vec_mut, vec_ref, Linear, Mat, ParamMut, ParamRef, Scalar, Vect};

/// Everything shared between the pretraining model and the classifier:
/// patch projection, positional table, class token, and encoder blocks.
#[derive(Debug, Clone)]
pub struct EncoderCore<F> {
    pub patch: Linear<F>,
    /// Learnable positional encoding, one row per patch. Starts at the
    /// sinusoidal table and trains from there.
    pub pos: Mat<F>,
    pub cls_token: Vect<F>,
    pub blocks: Vec<TransformerBlock<F>>,
}

/// Forward record for one encode pass.
pub struct EncodeCache<F> {
    /// Patch matrix the embedding consumed (before position add).
    patches: Mat<F>,
    blocks: Vec<BlockCache<F>>,
    num_kept: usize,
}

impl<F: Scalar> EncoderCore<F> {
    pub fn new<R: Rng>(cfg: &ModelConfig, rng: &mut R) -> Self {
        let std = c::<F>(0.02);
        Self {
            patch: Linear::new(rng, cfg.patch_dim(), cfg.enc_dim),
            pos: init::sincos_mat(cfg.num_patches(), cfg.enc_dim),
            cls_token: init::trunc_normal_vec(rng, cfg.enc_dim, std),
            blocks: (0..cfg.enc_layers)
                .map(|_| TransformerBlock::new(rng, cfg.enc_dim, cfg.enc_heads, cfg.mlp_ratio))
                .collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            patch: self.patch.zeros_like(),
            pos: Mat::zeros(self.pos.raw_dim()),
            cls_token: Vect::zeros(self.cls_token.len()),
            blocks: self.blocks.iter().map(|b| b.zeros_like()).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.patch.d_out()
    }

    /// `z_i = W_patch·x_i + b_patch + p_i` for every patch.
    pub fn embed(&self, patches: &Mat<F>) -> Mat<F> {
        assert_eq!(patches.nrows(), self.pos.nrows(), "patch count mismatch");
        self.patch.forward(patches) + &self.pos
    }

    /// Gathers kept rows, prepends the class token, and runs the block
    /// stack. Returns the `(|kept|+1) × d` encoder output; row 0 is the
    /// class token representation.
    ///
    /// Masked patches never enter this computation.
    pub fn encode(&self, patches: &Mat<F>, plan: &MaskPlan) -> (Mat<F>, EncodeCache<F>) {
        let embedded = self.embed(patches);
        let kept = plan.kept();
        let d = self.width();
        let mut z = Mat::zeros((kept.len() + 1, d));
        z.row_mut(0).assign(&self.cls_token);
        for (r, &i) in kept.iter().enumerate() {
            z.row_mut(r + 1).assign(&embedded.row(i));
        }
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (next, cache) = block.forward(&z);
            z = next;
            caches.push(cache);
        }
        (
            z,
            EncodeCache {
                patches: patches.clone(),
                blocks: caches,
                num_kept: kept.len(),
            },
        )
    }

    /// Backward through blocks, class token, positions, and patch
    /// projection. Returns `dL/dpatches` (zero rows at masked indices).
    pub fn encode_backward(
        &self,
        cache: &EncodeCache<F>,
        plan: &MaskPlan,
        dz: &Mat<F>,
        grad: &mut Self,
    ) -> Mat<F> {
        assert_eq!(dz.nrows(), cache.num_kept + 1, "encoder output rows");
        let mut dz = dz.clone();
        for ((block, bc), gb) in self
            .blocks
            .iter()
            .zip(&cache.blocks)
            .zip(grad.blocks.iter_mut())
            .rev()
        {
            dz = block.backward(bc, &dz, gb);
        }
        grad.cls_token += &dz.row(0);
        let mut dembedded = Mat::zeros(self.pos.raw_dim());
        for (r, &i) in plan.kept().iter().enumerate() {
            dembedded.row_mut(i).assign(&dz.row(r + 1));
        }
        grad.pos += &dembedded;
        self.patch.backward(&cache.patches, &dembedded, &mut grad.patch)
    }

    pub fn param_refs(&self, prefix: &str) -> Vec<ParamRef<'_, F>> {
        let mut v = self.patch.param_refs(&format!("{prefix}.patch"));
        v.push(mat_ref(format!("{prefix}.pos"), &self.pos));
        v.push(vec_ref(format!("{prefix}.cls"), &self.cls_token));
        for (i, b) in self.blocks.iter().enumerate() {
            v.extend(b.param_refs(&format!("{prefix}.block{i}")));
        }
        v
    }

    pub fn param_muts(&mut self, prefix: &str) -> Vec<ParamMut<'_, F>> {
        let Self {
            patch,
            pos,
            cls_token,
            blocks,
        } = self;
        let mut v = patch.param_muts(&format!("{prefix}.patch"));
        v.push(mat_mut(format!("{prefix}.pos"), pos));
        v.push(vec_mut(format!("{prefix}.cls"), cls_token));
        for (i, b) in blocks.iter_mut().enumerate() {
            v.extend(b.param_muts(&format!("{prefix}.block{i}")));
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::super::patch::patchify;
    use super::*;
    use ndarray::Array2;

    fn tiny_cfg() -> ModelConfig {
        ModelConfig {
            frame_length: 64,
            patch_size: 8,
            enc_dim: 12,
            enc_layers: 2,
            enc_heads: 2,
            dec_dim: 8,
            dec_layers: 1,
            dec_heads: 2,
            mlp_ratio: 2,
            mask_ratio: 0.75,
            num_classes: 4,
        }
    }

    #[test]
    fn zero_patch_embeds_to_position_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let cfg = tiny_cfg();
        let enc = EncoderCore::<f64>::new(&cfg, &mut rng);
        // Bias is zero-initialized, so a zero patch maps to its position.
        let patches = Mat::zeros((cfg.num_patches(), cfg.patch_dim()));
        let z = enc.embed(&patches);
        assert_eq!(z, enc.pos);
    }

    #[test]
    fn default_scale_shapes_hold_with_empty_stack() {
        // Full-width embedding at the published dimensions, zero blocks
        // so construction stays cheap.
        let mut cfg = ModelConfig::default();
        cfg.enc_layers = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let enc = EncoderCore::<f32>::new(&cfg, &mut rng);
        let patches = Mat::zeros((cfg.num_patches(), cfg.patch_dim()));
        let z = enc.embed(&patches);
        assert_eq!(z.shape(), &[128, 768]);

        let plan = MaskPlan::sample(128, 0.75, &mut rng).unwrap();
        let (out, _) = enc.encode(&patches, &plan);
        assert_eq!(out.shape(), &[33, 768]);
    }

    #[test]
    fn empty_stack_encode_prepends_cls_to_kept_rows() {
        let mut cfg = tiny_cfg();
        cfg.enc_layers = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let enc = EncoderCore::<f64>::new(&cfg, &mut rng);
        let patches = Mat::from_shape_fn((cfg.num_patches(), cfg.patch_dim()), |_| {
            f64::std_normal(&mut rng)
        });
        let plan = MaskPlan::from_masked_set(cfg.num_patches(), &[0, 3, 5]).unwrap();
        let (out, _) = enc.encode(&patches, &plan);
        let embedded = enc.embed(&patches);
        assert_eq!(out.row(0).to_vec(), enc.cls_token.to_vec());
        for (r, &i) in plan.kept().iter().enumerate() {
            assert_eq!(out.row(r + 1), embedded.row(i));
        }
    }

    #[test]
    fn localized_sample_change_moves_exactly_one_embedding_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let mut cfg = tiny_cfg();
        cfg.frame_length = 1024;
        let enc = EncoderCore::<f64>::new(&cfg, &mut rng);

        let frame_a = Array2::<f64>::from_shape_fn((2, 1024), |_| f64::std_normal(&mut rng));
        let mut frame_b = frame_a.clone();
        frame_b[[0, 500]] += 1.0;

        let za = enc.embed(&patchify(&frame_a, 8).unwrap());
        let zb = enc.embed(&patchify(&frame_b, 8).unwrap());
        for i in 0..cfg.num_patches() {
            let differs = za.row(i) != zb.row(i);
            assert_eq!(differs, i == 500 / 8, "row {i}");
        }
    }

    #[test]
    fn masked_patches_never_reach_the_encoder() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let cfg = tiny_cfg();
        let enc = EncoderCore::<f64>::new(&cfg, &mut rng);
        let patches = Mat::from_shape_fn((cfg.num_patches(), cfg.patch_dim()), |_| {
            f64::std_normal(&mut rng)
        });
        let plan = MaskPlan::sample(cfg.num_patches(), 0.5, &mut rng).unwrap();

        let mut scrambled = patches.clone();
        for &i in plan.masked() {
            scrambled.row_mut(i).mapv_inplace(|v| 10.0 * v + 3.0);
        }
        let (a, _) = enc.encode(&patches, &plan);
        let (b, _) = enc.encode(&scrambled, &plan);
        assert_eq!(a, b);
    }

    #[test]
    fn class_token_row_sees_every_visible_patch() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let cfg = tiny_cfg();
        let enc = EncoderCore::<f64>::new(&cfg, &mut rng);
        let patches = Mat::from_shape_fn((cfg.num_patches(), cfg.patch_dim()), |_| {
            f64::std_normal(&mut rng)
        });
        let plan = MaskPlan::sample(cfg.num_patches(), 0.5, &mut rng).unwrap();
        let (base, _) = enc.encode(&patches, &plan);

        for &i in plan.kept() {
            let mut perturbed = patches.clone();
            perturbed[[i, 0]] += 0.5;
            let (out, _) = enc.encode(&perturbed, &plan);
            assert_ne!(out.row(0), base.row(0), "cls row blind to patch {i}");
        }
    }

    #[test]
    fn block_stack_is_permutation_equivariant() {
        // Swap two kept tokens at the input of the stack, inverse-swap
        // the output: identical rows. Positions were already added, so
        // they travel with the tokens.
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let cfg = tiny_cfg();
        let enc = EncoderCore::<f64>::new(&cfg, &mut rng);
        let z0 = Mat::from_shape_fn((6, cfg.enc_dim), |_| f64::std_normal(&mut rng));

        let run = |mut z: Mat<f64>| {
            for b in &enc.blocks {
                z = b.forward(&z).0;
            }
            z
        };
        let base = run(z0.clone());

        let mut swapped = z0.clone();
        let (r2, r4) = (z0.row(2).to_owned(), z0.row(4).to_owned());
        swapped.row_mut(2).assign(&r4);
        swapped.row_mut(4).assign(&r2);
        let mut out = run(swapped);
        let (o2, o4) = (out.row(2).to_owned(), out.row(4).to_owned());
        out.row_mut(2).assign(&o4);
        out.row_mut(4).assign(&o2);

        for (a, b) in base.iter().zip(out.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
