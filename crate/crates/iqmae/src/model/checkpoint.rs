//! Checkpoint directories: model config, canonical parameter blob, and
//! an RNG-state record for provenance.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::classifier::ClsModel;
use super::config::ModelConfig;
use super::mae::MaeModel;
use crate::nn::export;
use crate::nn::Scalar;
use crate::{Error, Result};

pub const META_FILE: &str = "meta.json";

/// Serialized ChaCha stream state: 32-byte seed plus 128-bit word
/// position (as a decimal string, since JSON numbers stop at 2^53).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RngRecord {
    pub seed_hex: String,
    pub word_pos: String,
}

impl RngRecord {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        let seed = rng.get_seed();
        let seed_hex = seed.iter().map(|b| format!("{b:02x}")).collect();
        Self {
            seed_hex,
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        if self.seed_hex.len() != 64 {
            return Err(Error::config("rng seed record must be 64 hex digits"));
        }
        let mut seed = [0u8; 32];
        for (i, chunk) in self.seed_hex.as_bytes().chunks_exact(2).enumerate() {
            let s = std::str::from_utf8(chunk).map_err(|_| Error::config("bad hex"))?;
            seed[i] = u8::from_str_radix(s, 16)
                .map_err(|e| Error::config(format!("bad hex in rng seed: {e}")))?;
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        let pos: u128 = self
            .word_pos
            .parse()
            .map_err(|e| Error::config(format!("bad rng word position: {e}")))?;
        rng.set_word_pos(pos);
        Ok(rng)
    }
}

/// What kind of model a checkpoint holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointKind {
    Mae,
    Classifier,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub kind: CheckpointKind,
    pub config: ModelConfig,
    /// Optimizer steps taken when the checkpoint was written.
    pub step: u64,
    /// Validation metric that selected this checkpoint, if any.
    pub best_metric: Option<f64>,
    pub rng: Option<RngRecord>,
}

pub fn read_meta(dir: &Path) -> Result<CheckpointMeta> {
    let meta: CheckpointMeta = serde_json::from_reader(fs::File::open(dir.join(META_FILE))?)?;
    meta.config.validate()?;
    Ok(meta)
}

fn write_meta(dir: &Path, meta: &CheckpointMeta) -> Result<()> {
    fs::create_dir_all(dir)?;
    serde_json::to_writer_pretty(fs::File::create(dir.join(META_FILE))?, meta)?;
    Ok(())
}

pub fn save_mae<F: Scalar>(
    dir: &Path,
    model: &MaeModel<F>,
    step: u64,
    best_metric: Option<f64>,
    rng: Option<&ChaCha8Rng>,
) -> Result<()> {
    write_meta(
        dir,
        &CheckpointMeta {
            kind: CheckpointKind::Mae,
            config: model.cfg.clone(),
            step,
            best_metric,
            rng: rng.map(RngRecord::capture),
        },
    )?;
    export::write_params(dir, &model.param_refs())
}

pub fn load_mae<F: Scalar>(dir: &Path) -> Result<(MaeModel<F>, CheckpointMeta)> {
    let meta = read_meta(dir)?;
    if meta.kind != CheckpointKind::Mae {
        return Err(Error::config(format!(
            "checkpoint at {} holds a {:?}, expected a masked autoencoder",
            dir.display(),
            meta.kind
        )));
    }
    let mut model = MaeModel::new(&meta.config, &mut ChaCha8Rng::seed_from_u64(0));
    export::load_params(dir, &mut model.param_muts())?;
    Ok((model, meta))
}

pub fn save_classifier<F: Scalar>(
    dir: &Path,
    model: &ClsModel<F>,
    step: u64,
    best_metric: Option<f64>,
    rng: Option<&ChaCha8Rng>,
) -> Result<()> {
    write_meta(
        dir,
        &CheckpointMeta {
            kind: CheckpointKind::Classifier,
            config: model.cfg.clone(),
            step,
            best_metric,
            rng: rng.map(RngRecord::capture),
        },
    )?;
    export::write_params(dir, &model.param_refs())
}

pub fn load_classifier<F: Scalar>(dir: &Path) -> Result<(ClsModel<F>, CheckpointMeta)> {
    let meta = read_meta(dir)?;
    if meta.kind != CheckpointKind::Classifier {
        return Err(Error::config(format!(
            "checkpoint at {} holds a {:?}, expected a classifier",
            dir.display(),
            meta.kind
        )));
    }
    let mut model = ClsModel::new(&meta.config, &mut ChaCha8Rng::seed_from_u64(0));
    export::load_params(dir, &mut model.param_muts())?;
    Ok((model, meta))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::nn::fd::flatten;

    fn tiny_cfg() -> ModelConfig {
        ModelConfig {
            frame_length: 64,
            patch_size: 8,
            enc_dim: 12,
            enc_layers: 1,
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
    fn mae_checkpoint_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = MaeModel::<f32>::new(&tiny_cfg(), &mut rng);
        save_mae(dir.path(), &model, 42, Some(0.5), Some(&rng)).unwrap();

        let (loaded, meta) = load_mae::<f32>(dir.path()).unwrap();
        assert_eq!(meta.step, 42);
        assert_eq!(meta.best_metric, Some(0.5));
        assert_eq!(flatten(&model.param_refs()), flatten(&loaded.param_refs()));
    }

    #[test]
    fn classifier_checkpoint_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let model = ClsModel::<f32>::new(&tiny_cfg(), &mut rng);
        save_classifier(dir.path(), &model, 7, None, None).unwrap();
        let (loaded, meta) = load_classifier::<f32>(dir.path()).unwrap();
        assert_eq!(meta.kind, CheckpointKind::Classifier);
        assert_eq!(flatten(&model.param_refs()), flatten(&loaded.param_refs()));
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let model = MaeModel::<f32>::new(&tiny_cfg(), &mut rng);
        save_mae(dir.path(), &model, 0, None, None).unwrap();
        assert!(load_classifier::<f32>(dir.path()).is_err());
    }

    #[test]
    fn rng_record_resumes_the_stream() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let _: u64 = rng.gen();
        let record = RngRecord::capture(&rng);
        let mut resumed = record.restore().unwrap();
        let next_original: u64 = rng.gen();
        let next_resumed: u64 = resumed.gen();
        assert_eq!(next_original, next_resumed);
    }
}
