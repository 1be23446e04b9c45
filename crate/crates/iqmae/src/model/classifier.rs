//! Classification path: encoder (no masking) + linear head on the
//! class token.

use rand::Rng;

use super::config::ModelConfig;
use super::encoder::{EncodeCache, EncoderCore};
use super::mae::MaeModel;
use super::mask::MaskPlan;
use crate::nn::ops::softmax_rows;
use crate::nn::{Linear, Mat, ParamMut, ParamRef, Scalar, Vect};

/// Fine-tuning/inference model. Classification always runs with every
/// patch visible.
#[derive(Debug, Clone)]
pub struct ClsModel<F> {
    pub cfg: ModelConfig,
    pub encoder: EncoderCore<F>,
    pub head: Linear<F>,
}

pub struct ClsCache<F> {
    enc: EncodeCache<F>,
    plan: MaskPlan,
    cls_row: Mat<F>,
}

impl<F: Scalar> ClsModel<F> {
    pub fn new<R: Rng>(cfg: &ModelConfig, rng: &mut R) -> Self {
        cfg.validate().expect("model config valid");
        Self {
            cfg: cfg.clone(),
            encoder: EncoderCore::new(cfg, rng),
            head: Linear::new(rng, cfg.enc_dim, cfg.num_classes),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            cfg: self.cfg.clone(),
            encoder: self.encoder.zeros_like(),
            head: self.head.zeros_like(),
        }
    }

    /// Logits from the class-token representation, all patches visible.
    pub fn forward(&self, patches: &Mat<F>) -> (Vect<F>, ClsCache<F>) {
        let plan = MaskPlan::identity(self.cfg.num_patches());
        let (z_enc, enc) = self.encoder.encode(patches, &plan);
        let cls_row = z_enc.slice(ndarray::s![0..1, ..]).to_owned();
        let logits = self.head.forward(&cls_row).row(0).to_owned();
        (
            logits,
            ClsCache {
                enc,
                plan,
                cls_row,
            },
        )
    }

    /// Probability vector over classes.
    pub fn classify(&self, patches: &Mat<F>) -> Vect<F> {
        let (logits, _) = self.forward(patches);
        softmax_vec(&logits)
    }

    /// Backward from `dL/dlogits`; returns `dL/dpatches`.
    pub fn backward(&self, cache: &ClsCache<F>, dlogits: &Vect<F>, grad: &mut Self) -> Mat<F> {
        let dlogits_row = dlogits.clone().insert_axis(ndarray::Axis(0));
        let dcls = self.head.backward(&cache.cls_row, &dlogits_row, &mut grad.head);
        let mut dz = Mat::zeros((self.cfg.num_patches() + 1, self.cfg.enc_dim));
        dz.row_mut(0).assign(&dcls.row(0));
        self.encoder
            .encode_backward(&cache.enc, &cache.plan, &dz, &mut grad.encoder)
    }

    pub fn param_refs(&self) -> Vec<ParamRef<'_, F>> {
        let mut v = self.encoder.param_refs("enc");
        v.extend(self.head.param_refs("head"));
        v
    }

    pub fn param_muts(&mut self) -> Vec<ParamMut<'_, F>> {
        let Self { encoder, head, .. } = self;
        let mut v = encoder.param_muts("enc");
        v.extend(head.param_muts("head"));
        v
    }

    /// Head-only views, for linear-probe (frozen encoder) training.
    pub fn head_param_refs(&self) -> Vec<ParamRef<'_, F>> {
        self.head.param_refs("head")
    }

    pub fn head_param_muts(&mut self) -> Vec<ParamMut<'_, F>> {
        self.head.param_muts("head")
    }
}

/// Softmax of a logit vector with max subtraction.
pub fn softmax_vec<F: Scalar>(logits: &Vect<F>) -> Vect<F> {
    let row = logits.clone().insert_axis(ndarray::Axis(0));
    softmax_rows(&row).row(0).to_owned()
}

impl<F: Scalar> MaeModel<F> {
    /// Pretrain→finetune handoff: keeps the encoder bit-for-bit, drops
    /// the decoder, attaches a freshly initialized classifier head.
    pub fn into_classifier<R: Rng>(self, rng: &mut R) -> ClsModel<F> {
        let head = Linear::new(rng, self.cfg.enc_dim, self.cfg.num_classes);
        ClsModel {
            cfg: self.cfg,
            encoder: self.encoder,
            head,
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

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
    fn probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let cfg = tiny_cfg();
        let model = ClsModel::<f64>::new(&cfg, &mut rng);
        let patches = Mat::from_shape_fn((cfg.num_patches(), cfg.patch_dim()), |_| {
            f64::std_normal(&mut rng)
        });
        let probs = model.classify(&patches);
        assert_eq!(probs.len(), 4);
        assert!((probs.sum() - 1.0).abs() < 1e-6);
        assert!(probs.iter().all(|p| *p > 0.0));
    }

    #[test]
    fn zero_head_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let cfg = tiny_cfg();
        let mut model = ClsModel::<f64>::new(&cfg, &mut rng);
        model.head.w.fill(0.0);
        model.head.b.fill(0.0);
        let patches = Mat::from_shape_fn((cfg.num_patches(), cfg.patch_dim()), |_| {
            f64::std_normal(&mut rng)
        });
        let probs = model.classify(&patches);
        for p in probs.iter() {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_preserves_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        for _ in 0..100 {
            let logits = Vect::from_shape_fn(6, |_| 5.0 * f64::std_normal(&mut rng));
            let probs = softmax_vec(&logits);
            let argmax_l = logits
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            let argmax_p = probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax_l, argmax_p);
        }
    }

    #[test]
    fn classification_sees_every_patch() {
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        let cfg = tiny_cfg();
        let model = ClsModel::<f64>::new(&cfg, &mut rng);
        let patches = Mat::from_shape_fn((cfg.num_patches(), cfg.patch_dim()), |_| {
            f64::std_normal(&mut rng)
        });
        let (base, _) = model.forward(&patches);
        for i in 0..cfg.num_patches() {
            let mut perturbed = patches.clone();
            perturbed[[i, 3]] += 1.0;
            let (logits, _) = model.forward(&perturbed);
            assert_ne!(logits, base, "logits blind to patch {i}");
        }
    }

    #[test]
    fn handoff_preserves_encoder_and_drops_decoder() {
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        let cfg = tiny_cfg();
        let mae = MaeModel::<f64>::new(&cfg, &mut rng);
        let enc_before: Vec<f64> = crate::nn::fd::flatten(&mae.encoder.param_refs("enc"));
        let cls = mae.into_classifier(&mut rng);
        let enc_after: Vec<f64> = crate::nn::fd::flatten(&cls.encoder.param_refs("enc"));
        assert_eq!(enc_before, enc_after);
        assert_eq!(cls.head.d_out(), cfg.num_classes);
        let names: Vec<String> = cls.param_refs().into_iter().map(|p| p.name).collect();
        assert!(names.iter().all(|n| !n.starts_with("dec.")));
    }
}
