//! Masked-autoencoder model over patchified IQ frames.
//!
//! A frame becomes a row-per-patch matrix ([`patchify`]), a random subset of
//! patches is hidden ([`MaskPlan`]), the visible rows plus a class token run
//! through a transformer encoder ([`EncoderCore`]), and a lighter decoder
//! reconstructs every patch from the visible ones ([`MaeModel`]). After
//! pretraining, [`MaeModel::into_classifier`] drops the decoder and attaches
//! a linear head over the class token ([`ClsModel`]).

pub mod block;
pub mod checkpoint;
pub mod classifier;
pub mod config;
pub mod encoder;
pub mod mae;
pub mod mask;
pub mod patch;

pub use block::{BlockCache, TransformerBlock};
pub use checkpoint::{
    load_classifier, load_mae, read_meta, save_classifier, save_mae, CheckpointKind,
    CheckpointMeta, RngRecord, META_FILE,
};
pub use classifier::{softmax_vec, ClsCache, ClsModel};
pub use config::ModelConfig;
pub use encoder::{EncodeCache, EncoderCore};
pub use mae::{Decoder, MaeCache, MaeModel};
pub use mask::MaskPlan;
pub use patch::{frame_to_scalar, patchify, unpatchify};
