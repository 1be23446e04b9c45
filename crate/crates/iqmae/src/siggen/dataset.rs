//! Dataset generation and the on-disk corpus format.
//!
//! A dataset directory holds five files:
//!
//! - `manifest.json` — the full declarative recipe (this module's
//!   [`DatasetManifest`]); dataset bytes are a pure function of it
//! - `frames.f32` — little-endian f32; per frame, T I-samples then T
//!   Q-samples, frames in `frame_id` order
//! - `labels.u16` — scheme index per frame
//! - `snr.i16` — integer dB per frame, noise-free sentinel 32767
//! - `splits.u8` — split tag per frame
//!
//! Frames are ordered by cell: `frame_id = (scheme_idx · |snr_grid| +
//! snr_idx) · frames_per_cell + k`. Each frame's seed is derived by
//! hashing (master_seed, frame_id), so generation is order- and
//! worker-count-independent. External corpora re-expressed in this
//! format load through the same [`Dataset::load`] path.

use std::fs;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::Snr;
use super::frame::{generate_frame, FrameParams, IQFrame};
use super::scheme::Modulation;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FRAMES_FILE: &str = "frames.f32";
pub const LABELS_FILE: &str = "labels.u16";
pub const SNR_FILE: &str = "snr.i16";
pub const SPLITS_FILE: &str = "splits.u8";
pub const FORMAT_VERSION: &str = "1";

/// Where a frame lands in the two-stage protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    SslTrain,
    SslVal,
    FtVal,
    FtTest,
}

impl SplitTag {
    pub const ALL: [SplitTag; 4] = [
        SplitTag::SslTrain,
        SplitTag::SslVal,
        SplitTag::FtVal,
        SplitTag::FtTest,
    ];

    pub fn to_u8(self) -> u8 {
        match self {
            SplitTag::SslTrain => 0,
            SplitTag::SslVal => 1,
            SplitTag::FtVal => 2,
            SplitTag::FtTest => 3,
        }
    }

    pub fn from_u8(raw: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.to_u8() == raw)
            .ok_or_else(|| Error::config(format!("invalid split tag byte {raw}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            SplitTag::SslTrain => "ssl_train",
            SplitTag::SslVal => "ssl_val",
            SplitTag::FtVal => "ft_val",
            SplitTag::FtTest => "ft_test",
        }
    }
}

/// Synthesis parameters shared by every frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub sps: usize,
    pub rolloff: f64,
    pub cfo_max_cycles: f64,
    /// FIR channel taps as (re, im) pairs.
    pub taps: Vec<(f64, f64)>,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            sps: 8,
            rolloff: 0.35,
            cfo_max_cycles: 0.01,
            taps: vec![(1.0, 0.0)],
        }
    }
}

impl GenParams {
    pub fn taps_complex(&self) -> Vec<Complex64> {
        self.taps.iter().map(|&(re, im)| Complex64::new(re, im)).collect()
    }
}

/// Per-cell split proportions: `ssl` of each cell goes to the
/// self-supervised pool (split `ssl_train`/rest within), the remainder
/// to fine-tune evaluation (`ft_val`/rest within).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitFractions {
    pub ssl: f64,
    pub ssl_train: f64,
    pub ft_val: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            ssl: 0.8,
            ssl_train: 0.7,
            ft_val: 0.5,
        }
    }
}

/// The complete, order-defining description of a generated corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: String,
    pub frame_length: usize,
    pub schemes: Vec<String>,
    pub snr_grid_db: Vec<f64>,
    pub frames_per_cell: usize,
    pub master_seed: u64,
    pub split_fractions: SplitFractions,
    pub gen: GenParams,
}

impl DatasetManifest {
    /// Manifest with all defaults: 8 schemes, −20..+20 dB in 2 dB steps.
    pub fn new(frames_per_cell: usize, master_seed: u64) -> Self {
        Self {
            format_version: FORMAT_VERSION.to_string(),
            frame_length: 1024,
            schemes: super::scheme::ALL_SCHEMES.iter().map(|s| s.name().to_string()).collect(),
            snr_grid_db: (-10..=10).map(|k| (2 * k) as f64).collect(),
            frames_per_cell,
            master_seed,
            split_fractions: SplitFractions::default(),
            gen: GenParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::config(format!(
                "unsupported format_version {:?} (expected {FORMAT_VERSION:?})",
                self.format_version
            )));
        }
        if self.schemes.is_empty() || self.snr_grid_db.is_empty() || self.frames_per_cell == 0 {
            return Err(Error::config(
                "manifest needs at least one scheme, one SNR cell, and one frame per cell",
            ));
        }
        for name in &self.schemes {
            Modulation::from_name(name)?;
        }
        for &db in &self.snr_grid_db {
            if !db.is_finite() || (db - db.round()).abs() > 1e-9 || db.abs() > 1000.0 {
                return Err(Error::config(format!(
                    "snr grid value {db} not representable as integer dB"
                )));
            }
        }
        if self.frame_length == 0 || self.frame_length % self.gen.sps != 0 {
            return Err(Error::config(format!(
                "frame length {} not divisible by sps {}",
                self.frame_length, self.gen.sps
            )));
        }
        let f = &self.split_fractions;
        for (name, v) in [("ssl", f.ssl), ("ssl_train", f.ssl_train), ("ft_val", f.ft_val)] {
            if !(0.0 < v && v < 1.0) {
                return Err(Error::config(format!("split fraction {name}={v} outside (0,1)")));
            }
        }
        Ok(())
    }

    pub fn scheme_list(&self) -> Result<Vec<Modulation>> {
        self.schemes.iter().map(|n| Modulation::from_name(n)).collect()
    }

    pub fn num_cells(&self) -> usize {
        self.schemes.len() * self.snr_grid_db.len()
    }

    pub fn num_frames(&self) -> usize {
        self.num_cells() * self.frames_per_cell
    }

    /// (scheme index, snr index, index within cell) of a frame.
    pub fn locate(&self, frame_id: usize) -> (usize, usize, usize) {
        let cell = frame_id / self.frames_per_cell;
        let k = frame_id % self.frames_per_cell;
        (cell / self.snr_grid_db.len(), cell % self.snr_grid_db.len(), k)
    }

    /// Per-cell frame counts in tag order (half-up rounding at each
    /// boundary, so counts stay within 1 frame of the exact ratios).
    pub fn split_counts(&self) -> [usize; 4] {
        let n = self.frames_per_cell;
        let f = &self.split_fractions;
        let n_ssl = round_half_up(f.ssl * n as f64).min(n);
        let n_ssl_train = round_half_up(f.ssl_train * n_ssl as f64).min(n_ssl);
        let n_ft = n - n_ssl;
        let n_ft_val = round_half_up(f.ft_val * n_ft as f64).min(n_ft);
        [n_ssl_train, n_ssl - n_ssl_train, n_ft_val, n_ft - n_ft_val]
    }

    /// Tag of the k-th frame within any cell (sequential assignment).
    pub fn split_tag_for(&self, k: usize) -> SplitTag {
        let counts = self.split_counts();
        let mut edge = 0;
        for (tag, count) in SplitTag::ALL.into_iter().zip(counts) {
            edge += count;
            if k < edge {
                return tag;
            }
        }
        unreachable!("index {k} beyond frames_per_cell {}", self.frames_per_cell)
    }

    fn frame_params(&self, frame_id: usize) -> (Modulation, FrameParams, u16) {
        let (scheme_idx, snr_idx, _) = self.locate(frame_id);
        let scheme = Modulation::from_name(&self.schemes[scheme_idx]).expect("validated");
        let params = FrameParams {
            frame_length: self.frame_length,
            sps: self.gen.sps,
            rolloff: self.gen.rolloff,
            cfo_max_cycles: self.gen.cfo_max_cycles,
            taps: self.gen.taps_complex(),
            snr: Snr::Db(self.snr_grid_db[snr_idx]),
            seed: frame_seed(self.master_seed, frame_id as u64),
        };
        (scheme, params, scheme_idx as u16)
    }

    /// Generates one frame exactly as `generate_dataset` would.
    pub fn generate_one(&self, frame_id: usize) -> Result<IQFrame> {
        let (scheme, params, label) = self.frame_params(frame_id);
        generate_frame(scheme, &params, frame_id as u64, Some(label))
    }
}

pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-frame seed: avalanched mix of the master seed and frame id.
pub fn frame_seed(master_seed: u64, frame_id: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(frame_id.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Generates every frame and writes the five-file dataset. Frames are
/// produced in parallel chunks; bytes do not depend on `workers`.
pub fn generate_dataset(manifest: &DatasetManifest, dir: &Path, workers: usize) -> Result<()> {
    manifest.validate()?;
    fs::create_dir_all(dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;

    let total = manifest.num_frames();
    let mut frames_out = BufWriter::new(fs::File::create(dir.join(FRAMES_FILE))?);
    let mut labels_out = BufWriter::new(fs::File::create(dir.join(LABELS_FILE))?);
    let mut snr_out = BufWriter::new(fs::File::create(dir.join(SNR_FILE))?);
    let mut splits_out = BufWriter::new(fs::File::create(dir.join(SPLITS_FILE))?);

    const CHUNK: usize = 2048;
    let mut start = 0;
    while start < total {
        let end = (start + CHUNK).min(total);
        let chunk: Vec<IQFrame> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|id| manifest.generate_one(id))
                .collect::<Result<Vec<_>>>()
        })?;
        for frame in &chunk {
            for &v in frame.samples.iter() {
                frames_out.write_all(&v.to_le_bytes())?;
            }
            labels_out.write_all(&frame.label.expect("generated frames carry labels").to_le_bytes())?;
            snr_out.write_all(&frame.snr.to_i16().to_le_bytes())?;
            let (_, _, k) = manifest.locate(frame.frame_id as usize);
            splits_out.write_all(&[manifest.split_tag_for(k).to_u8()])?;
        }
        start = end;
    }
    frames_out.flush()?;
    labels_out.flush()?;
    snr_out.flush()?;
    splits_out.flush()?;

    serde_json::to_writer_pretty(
        BufWriter::new(fs::File::create(dir.join(MANIFEST_FILE))?),
        manifest,
    )?;
    Ok(())
}

/// A loaded corpus: full per-frame metadata in memory, sample data read
/// on demand through [`Dataset::read_frame`].
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub labels: Vec<u16>,
    pub snrs: Vec<Snr>,
    pub splits: Vec<SplitTag>,
    frames_path: PathBuf,
}

impl Dataset {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: DatasetManifest =
            serde_json::from_reader(fs::File::open(dir.join(MANIFEST_FILE))?)?;
        manifest.validate()?;
        let total = manifest.num_frames();

        let label_bytes = fs::read(dir.join(LABELS_FILE))?;
        let snr_bytes = fs::read(dir.join(SNR_FILE))?;
        let split_bytes = fs::read(dir.join(SPLITS_FILE))?;
        if label_bytes.len() != total * 2 || snr_bytes.len() != total * 2 || split_bytes.len() != total {
            return Err(Error::config(format!(
                "metadata sizes inconsistent with manifest ({total} frames expected)"
            )));
        }
        let labels: Vec<u16> = label_bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        let snrs: Vec<Snr> = snr_bytes
            .chunks_exact(2)
            .map(|c| Snr::from_i16(i16::from_le_bytes([c[0], c[1]])))
            .collect();
        let splits: Vec<SplitTag> = split_bytes
            .iter()
            .map(|&b| SplitTag::from_u8(b))
            .collect::<Result<_>>()?;
        if let Some(&bad) = labels.iter().find(|&&l| (l as usize) >= manifest.schemes.len()) {
            return Err(Error::config(format!(
                "label {bad} out of range for {} schemes",
                manifest.schemes.len()
            )));
        }

        let frames_path = dir.join(FRAMES_FILE);
        let expect_bytes = (total * manifest.frame_length * 2 * 4) as u64;
        let got_bytes = fs::metadata(&frames_path)?.len();
        if got_bytes != expect_bytes {
            return Err(Error::config(format!(
                "frames.f32 is {got_bytes} bytes, manifest expects {expect_bytes}"
            )));
        }

        Ok(Self {
            manifest,
            labels,
            snrs,
            splits,
            frames_path,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Frame indices with a given tag, optionally SNR-filtered
    /// (noise-free frames pass any threshold).
    pub fn select(&self, tag: SplitTag, min_snr_db: Option<f64>) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.splits[i] == tag)
            .filter(|&i| match min_snr_db {
                Some(t) => self.snrs[i].db_or_inf() >= t,
                None => true,
            })
            .collect()
    }

    pub fn reader(&self) -> Result<FrameReader> {
        Ok(FrameReader {
            file: fs::File::open(&self.frames_path)?,
            frame_length: self.manifest.frame_length,
            total: self.len(),
        })
    }

    /// Loads a set of frames into memory as 2×T arrays.
    pub fn read_frames(&self, indices: &[usize]) -> Result<Vec<Array2<f32>>> {
        let mut reader = self.reader()?;
        indices.iter().map(|&i| reader.read(i)).collect()
    }
}

/// Random-access reader over `frames.f32`.
pub struct FrameReader {
    file: fs::File,
    frame_length: usize,
    total: usize,
}

impl FrameReader {
    pub fn read(&mut self, index: usize) -> Result<Array2<f32>> {
        if index >= self.total {
            return Err(Error::config(format!(
                "frame index {index} out of range ({} frames)",
                self.total
            )));
        }
        let values = self.frame_length * 2;
        let mut bytes = vec![0u8; values * 4];
        self.file
            .seek(SeekFrom::Start((index * values * 4) as u64))?;
        self.file.read_exact(&mut bytes)?;
        let data: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Array2::from_shape_vec((2, self.frame_length), data)
            .map_err(|e| Error::shape(format!("frame reshape: {e}")))
    }
}
