//! Canonical parameter serialization.
//!
//! A parameter set is written as two files in a directory:
//! `params.json`, an ordered descriptor array of `{name, shape, offset}`
//! with offsets counted in elements, and `params.f32`, the concatenated
//! tensor data as little-endian `f32`. The format is the unit of
//! checkpointing and of cross-implementation equivalence tests.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ParamMut, ParamRef, Scalar};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorDesc {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

pub const DESC_FILE: &str = "params.json";
pub const BLOB_FILE: &str = "params.f32";

pub fn write_params<F: Scalar>(dir: &Path, params: &[ParamRef<'_, F>]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut descs = Vec::with_capacity(params.len());
    let mut offset = 0usize;
    let mut blob = BufWriter::new(fs::File::create(dir.join(BLOB_FILE))?);
    for p in params {
        descs.push(TensorDesc {
            name: p.name.clone(),
            shape: p.shape.clone(),
            offset,
        });
        offset += p.data.len();
        for v in p.data {
            let bits = v.to_f32().ok_or_else(|| {
                Error::Numerical {
                    step: 0,
                    what: format!("parameter {} not representable as f32", p.name),
                }
            })?;
            blob.write_all(&bits.to_le_bytes())?;
        }
    }
    blob.flush()?;
    serde_json::to_writer_pretty(
        BufWriter::new(fs::File::create(dir.join(DESC_FILE))?),
        &descs,
    )?;
    Ok(())
}

pub fn read_params(dir: &Path) -> Result<(Vec<TensorDesc>, Vec<f32>)> {
    let descs: Vec<TensorDesc> = serde_json::from_reader(fs::File::open(dir.join(DESC_FILE))?)?;
    let mut bytes = Vec::new();
    fs::File::open(dir.join(BLOB_FILE))?.read_to_end(&mut bytes)?;
    if bytes.len() % 4 != 0 {
        return Err(Error::config(format!(
            "parameter blob length {} not a multiple of 4",
            bytes.len()
        )));
    }
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let expect: usize = descs.iter().map(|d| d.shape.iter().product::<usize>()).sum();
    if values.len() != expect {
        return Err(Error::config(format!(
            "parameter blob holds {} values, descriptor expects {expect}",
            values.len()
        )));
    }
    Ok((descs, values))
}

/// Fills an in-memory parameter list from a stored set. Names, order,
/// and shapes must match exactly.
pub fn load_params<F: Scalar>(dir: &Path, params: &mut [ParamMut<'_, F>]) -> Result<()> {
    let (descs, values) = read_params(dir)?;
    if descs.len() != params.len() {
        return Err(Error::config(format!(
            "stored set has {} tensors, model expects {}",
            descs.len(),
            params.len()
        )));
    }
    for (d, p) in descs.iter().zip(params.iter_mut()) {
        if d.name != p.name || d.shape != p.shape {
            return Err(Error::config(format!(
                "tensor mismatch: stored {} {:?}, model expects {} {:?}",
                d.name, d.shape, p.name, p.shape
            )));
        }
        let len = p.data.len();
        for (dst, src) in p.data.iter_mut().zip(&values[d.offset..d.offset + len]) {
            *dst = F::from(*src).expect("f32 widens into scalar type");
        }
    }
    Ok(())
}
