//! Synthetic raw-IQ frame generation.
//!
//! Signal chain per frame: random bits → Gray-coded modulation →
//! root-raised-cosine shaping (or direct synthesis for 4FSK/AM-DSB) →
//! carrier frequency/phase offset → FIR channel with calibrated complex
//! AWGN → per-frame unit-average-power normalization.
//!
//! Generation is deterministic: every frame's randomness comes from a
//! seed hashed out of (master_seed, frame_id), so a dataset's bytes
//! depend only on its manifest, never on worker count or scheduling.

pub mod channel;
pub mod dataset;
pub mod frame;
pub mod scheme;
pub mod shaping;

pub use channel::{apply_channel, apply_cfo_phase, preset_rayleigh3, ChannelConfig, Snr};
pub use dataset::{
    frame_seed, generate_dataset, Dataset, DatasetManifest, FrameReader, GenParams,
    SplitFractions, SplitTag,
};
pub use frame::{generate_frame, FrameParams, IQFrame};
pub use scheme::{Modulation, ALL_SCHEMES};
pub use shaping::{rrc_taps, upsample_and_shape};
