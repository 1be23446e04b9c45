//! Two-stage training: masked-reconstruction pretraining on an
//! SNR-filtered unlabeled pool, then supervised fine-tuning on a small
//! stratified labeled fraction.
//!
//! Runs are deterministic: one ChaCha stream seeded by the config
//! drives shuffling and mask sampling in a fixed serial order, so a
//! seed and config pin the entire loss trace.

pub mod config;
pub mod finetune;
pub mod labels;
pub mod loss;
pub mod pretrain;
pub mod schedule;
pub mod trace;

pub use config::TrainConfig;
pub use finetune::{accuracy, finetune, FinetuneOptions, FinetuneOutcome};
pub use labels::select_finetune_labels;
pub use loss::{argmax, cross_entropy, masked_mse, masked_mse_backward, softmax_ce};
pub use pretrain::{mean_reconstruction, pretrain, PretrainOutcome};
pub use schedule::{lr_at, Schedule, ScheduleKind};
pub use trace::{EpochReport, EpochStats, LossTrace, StepRecord, TRACE_FILE};

use crate::model::{frame_to_scalar, patchify};
use crate::nn::{Mat, Scalar};
use crate::siggen::Dataset;
use crate::Result;

/// Subdirectory where a run's best-validation checkpoint lives.
pub const BEST_CHECKPOINT_DIR: &str = "best";

/// Reads the given frames and patchifies each into an N x 2p matrix.
pub fn load_patches<F: Scalar>(
    ds: &Dataset,
    indices: &[usize],
    patch_size: usize,
) -> Result<Vec<Mat<F>>> {
    let frames = ds.read_frames(indices)?;
    frames
        .iter()
        .map(|f| patchify(&frame_to_scalar::<F>(f), patch_size))
        .collect()
}
