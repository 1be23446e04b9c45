//! The masked-autoencoder pipeline: encode visible patches, restore the
//! full sequence with mask tokens, decode, predict patch values.

use rand::Rng;

use super::block::{BlockCache, TransformerBlock};
use super::config::ModelConfig;
use super::encoder::{EncodeCache, EncoderCore};
use super::mask::MaskPlan;
use crate::nn::{c, init, mat_mut, mat_ref, vec_mut, vec_ref, Linear, Mat, ParamMut, ParamRef, Scalar, Vect};

/// Decoder-side parameters: the encoder→decoder projection, mask token,
/// decoder positional table (row 0 belongs to the class token), decoder
/// blocks, and the per-patch prediction head.
#[derive(Debug, Clone)]
pub struct Decoder<F> {
    pub proj: Linear<F>,
    pub mask_token: Vect<F>,
    pub pos: Mat<F>,
    pub blocks: Vec<TransformerBlock<F>>,
    pub pred: Linear<F>,
}

impl<F: Scalar> Decoder<F> {
    pub fn new<R: Rng>(cfg: &ModelConfig, rng: &mut R) -> Self {
        let std = c::<F>(0.02);
        Self {
            proj: Linear::new(rng, cfg.enc_dim, cfg.dec_dim),
            mask_token: init::trunc_normal_vec(rng, cfg.dec_dim, std),
            pos: {
                // Sinusoidal start for the patch rows; the class-token
                // row carries no temporal position and starts at zero.
                let table = init::sincos_mat::<F>(cfg.num_patches(), cfg.dec_dim);
                let mut pos = Mat::zeros((cfg.num_patches() + 1, cfg.dec_dim));
                pos.slice_mut(ndarray::s![1.., ..]).assign(&table);
                pos
            },
            blocks: (0..cfg.dec_layers)
                .map(|_| TransformerBlock::new(rng, cfg.dec_dim, cfg.dec_heads, cfg.mlp_ratio))
                .collect(),
            pred: Linear::new(rng, cfg.dec_dim, cfg.patch_dim()),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            proj: self.proj.zeros_like(),
            mask_token: Vect::zeros(self.mask_token.len()),
            pos: Mat::zeros(self.pos.raw_dim()),
            blocks: self.blocks.iter().map(|b| b.zeros_like()).collect(),
            pred: self.pred.zeros_like(),
        }
    }

    /// Projects encoder output to decoder width, scatters kept rows and
    /// mask tokens back to original positions, adds decoder positions.
    /// Row 0 stays the class token.
    pub fn restore(&self, z_enc: &Mat<F>, plan: &MaskPlan) -> Mat<F> {
        let proj = self.proj.forward(z_enc);
        self.scatter(&proj, plan)
    }

    fn scatter(&self, proj: &Mat<F>, plan: &MaskPlan) -> Mat<F> {
        let n = plan.num_patches();
        let num_kept = plan.kept().len();
        assert_eq!(proj.nrows(), num_kept + 1, "projected rows");
        let mut full = Mat::zeros((n + 1, self.mask_token.len()));
        full.row_mut(0).assign(&proj.row(0));
        for i in 0..n {
            let src = plan.ids_restore()[i];
            if src < num_kept {
                full.row_mut(i + 1).assign(&proj.row(src + 1));
            } else {
                full.row_mut(i + 1).assign(&self.mask_token);
            }
        }
        full + &self.pos
    }

    /// Runs decoder blocks on a restored sequence, drops the class row,
    /// and predicts every patch (inference path, no caches).
    pub fn decode_predict(&self, z_full: &Mat<F>) -> Mat<F> {
        let mut z = z_full.clone();
        for block in &self.blocks {
            z = block.forward(&z).0;
        }
        let body = z.slice(ndarray::s![1.., ..]).to_owned();
        self.pred.forward(&body)
    }

    pub fn param_refs(&self, prefix: &str) -> Vec<ParamRef<'_, F>> {
        let mut v = self.proj.param_refs(&format!("{prefix}.proj"));
        v.push(vec_ref(format!("{prefix}.mask_token"), &self.mask_token));
        v.push(mat_ref(format!("{prefix}.pos"), &self.pos));
        for (i, b) in self.blocks.iter().enumerate() {
            v.extend(b.param_refs(&format!("{prefix}.block{i}")));
        }
        v.extend(self.pred.param_refs(&format!("{prefix}.pred")));
        v
    }

    pub fn param_muts(&mut self, prefix: &str) -> Vec<ParamMut<'_, F>> {
        let Self {
            proj,
            mask_token,
            pos,
            blocks,
            pred,
        } = self;
        let mut v = proj.param_muts(&format!("{prefix}.proj"));
        v.push(vec_mut(format!("{prefix}.mask_token"), mask_token));
        v.push(mat_mut(format!("{prefix}.pos"), pos));
        for (i, b) in blocks.iter_mut().enumerate() {
            v.extend(b.param_muts(&format!("{prefix}.block{i}")));
        }
        v.extend(pred.param_muts(&format!("{prefix}.pred")));
        v
    }
}

/// Full pretraining model.
#[derive(Debug, Clone)]
pub struct MaeModel<F> {
    pub cfg: ModelConfig,
    pub encoder: EncoderCore<F>,
    pub decoder: Decoder<F>,
}

/// Forward record for one masked reconstruction pass.
pub struct MaeCache<F> {
    enc: EncodeCache<F>,
    z_enc: Mat<F>,
    dec_blocks: Vec<BlockCache<F>>,
    dec_body: Mat<F>,
    plan: MaskPlan,
}

impl<F: Scalar> MaeModel<F> {
    pub fn new<R: Rng>(cfg: &ModelConfig, rng: &mut R) -> Self {
        cfg.validate().expect("model config valid");
        Self {
            cfg: cfg.clone(),
            encoder: EncoderCore::new(cfg, rng),
            decoder: Decoder::new(cfg, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            cfg: self.cfg.clone(),
            encoder: self.encoder.zeros_like(),
            decoder: self.decoder.zeros_like(),
        }
    }

    /// Predicts all N patches from the visible subset. Reconstruction
    /// loss downstream must consume only rows in `plan.masked()`.
    pub fn forward(&self, patches: &Mat<F>, plan: &MaskPlan) -> (Mat<F>, MaeCache<F>) {
        let (z_enc, enc) = self.encoder.encode(patches, plan);
        let mut z = self.decoder.restore(&z_enc, plan);
        let mut dec_blocks = Vec::with_capacity(self.decoder.blocks.len());
        for block in &self.decoder.blocks {
            let (next, cache) = block.forward(&z);
            z = next;
            dec_blocks.push(cache);
        }
        let dec_body = z.slice(ndarray::s![1.., ..]).to_owned();
        let pred = self.decoder.pred.forward(&dec_body);
        (
            pred,
            MaeCache {
                enc,
                z_enc,
                dec_blocks,
                dec_body,
                plan: plan.clone(),
            },
        )
    }

    /// Accumulates gradients for every parameter; returns `dL/dpatches`
    /// through the encoder path (zero at masked rows).
    pub fn backward(&self, cache: &MaeCache<F>, dpred: &Mat<F>, grad: &mut Self) -> Mat<F> {
        let plan = &cache.plan;
        let n = plan.num_patches();
        let num_kept = plan.kept().len();
        let d_dec = self.decoder.mask_token.len();

        // Prediction head; the class row received no loss.
        let dbody = self
            .decoder
            .pred
            .backward(&cache.dec_body, dpred, &mut grad.decoder.pred);
        let mut dz = Mat::zeros((n + 1, d_dec));
        dz.slice_mut(ndarray::s![1.., ..]).assign(&dbody);

        for ((block, bc), gb) in self
            .decoder
            .blocks
            .iter()
            .zip(&cache.dec_blocks)
            .zip(grad.decoder.blocks.iter_mut())
            .rev()
        {
            dz = block.backward(bc, &dz, gb);
        }

        // Undo restore: position add, scatter, projection.
        grad.decoder.pos += &dz;
        let mut dproj = Mat::zeros((num_kept + 1, d_dec));
        dproj.row_mut(0).assign(&dz.row(0));
        for i in 0..n {
            let src = plan.ids_restore()[i];
            if src < num_kept {
                dproj.row_mut(src + 1).assign(&dz.row(i + 1));
            } else {
                grad.decoder.mask_token += &dz.row(i + 1);
            }
        }
        let dz_enc = self
            .decoder
            .proj
            .backward(&cache.z_enc, &dproj, &mut grad.decoder.proj);
        self.encoder
            .encode_backward(&cache.enc, plan, &dz_enc, &mut grad.encoder)
    }

    pub fn param_refs(&self) -> Vec<ParamRef<'_, F>> {
        let mut v = self.encoder.param_refs("enc");
        v.extend(self.decoder.param_refs("dec"));
        v
    }

    pub fn param_muts(&mut self) -> Vec<ParamMut<'_, F>> {
        let Self {
            encoder, decoder, ..
        } = self;
        let mut v = encoder.param_muts("enc");
        v.extend(decoder.param_muts("dec"));
        v
    }
}
