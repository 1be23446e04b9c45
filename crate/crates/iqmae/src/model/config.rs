//! Model hyperparameters.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Architecture description. The default is the full-scale
/// configuration; tests and the desk experiment shrink it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Samples per frame (T).
    pub frame_length: usize,
    /// Samples per patch along each of I and Q.
    pub patch_size: usize,
    /// Encoder width (d).
    pub enc_dim: usize,
    /// Encoder depth (L).
    pub enc_layers: usize,
    pub enc_heads: usize,
    /// Decoder width (d_dec).
    pub dec_dim: usize,
    pub dec_layers: usize,
    pub dec_heads: usize,
    /// Hidden width of each MLP as a multiple of its block's width.
    pub mlp_ratio: usize,
    /// Fraction of patches hidden from the encoder during pretraining.
    pub mask_ratio: f64,
    pub num_classes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            frame_length: 1024,
            patch_size: 8,
            enc_dim: 768,
            enc_layers: 12,
            enc_heads: 12,
            dec_dim: 512,
            dec_layers: 4,
            dec_heads: 8,
            mlp_ratio: 4,
            mask_ratio: 0.75,
            num_classes: 8,
        }
    }
}

impl ModelConfig {
    /// N = T / patch_size.
    pub fn num_patches(&self) -> usize {
        self.frame_length / self.patch_size
    }

    /// Flattened patch width: patch_size I-samples plus patch_size
    /// Q-samples.
    pub fn patch_dim(&self) -> usize {
        2 * self.patch_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 || self.frame_length % self.patch_size != 0 {
            return Err(Error::config(format!(
                "frame length {} not divisible by patch size {}",
                self.frame_length, self.patch_size
            )));
        }
        if self.enc_heads == 0 || self.enc_dim % self.enc_heads != 0 {
            return Err(Error::config(format!(
                "encoder width {} not divisible by {} heads",
                self.enc_dim, self.enc_heads
            )));
        }
        if self.dec_heads == 0 || self.dec_dim % self.dec_heads != 0 {
            return Err(Error::config(format!(
                "decoder width {} not divisible by {} heads",
                self.dec_dim, self.dec_heads
            )));
        }
        if !(0.0..1.0).contains(&self.mask_ratio) {
            return Err(Error::config(format!(
                "mask ratio {} outside [0, 1)",
                self.mask_ratio
            )));
        }
        if self.mlp_ratio == 0 || self.num_classes == 0 {
            return Err(Error::config(
                "mlp_ratio and num_classes must be positive",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_published_architecture() {
        let cfg = ModelConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.num_patches(), 128);
        assert_eq!(cfg.patch_dim(), 16);
        assert_eq!(cfg.enc_dim, 768);
        assert_eq!(cfg.enc_layers, 12);
        assert_eq!(cfg.dec_dim, 512);
        assert_eq!(cfg.dec_layers, 4);
        assert_eq!(cfg.mask_ratio, 0.75);
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let mut cfg = ModelConfig::default();
        cfg.patch_size = 7;
        assert!(cfg.validate().is_err());

        let mut cfg = ModelConfig::default();
        cfg.enc_heads = 5;
        assert!(cfg.validate().is_err());

        let mut cfg = ModelConfig::default();
        cfg.mask_ratio = 1.0;
        assert!(cfg.validate().is_err());
    }
}
