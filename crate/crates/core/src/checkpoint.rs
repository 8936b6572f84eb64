//! Checkpoint files: model config, named parameter arrays, training step.
//!
//! Layout (little-endian): magic "CGCK", u32 version, u32 header length, a
//! JSON header (config, step, rng digest, master seed), then one record per
//! named array: u32 name length, name bytes, u64 value count, f64 payload.
//! Round-trips are bit-exact; mismatched magic or version is refused.

use crate::model::{Model, ModelConfig};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

const MAGIC: &[u8; 4] = b"CGCK";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: corrupt header at byte offset {offset}: {what}")]
    CorruptHeader {
        path: PathBuf,
        offset: u64,
        what: String,
    },
    #[error("{path}: version {found} unsupported (expected {expected})")]
    BadVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{path}: array {name} has {found} values, layout expects {expected}")]
    ArrayMismatch {
        path: PathBuf,
        name: String,
        found: u64,
        expected: u64,
    },
    #[error("checkpoint incompatible with run: field {field} is {found}, run expects {expected}")]
    ConfigMismatch {
        field: &'static str,
        found: String,
        expected: String,
    },
    #[error("model error: {0}")]
    Model(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    step: u64,
    rng_digest: u64,
    master_seed: u64,
}

/// A trained (or in-training) model snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub step: u64,
    pub rng_digest: u64,
    pub master_seed: u64,
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), CheckpointError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    let header = Header {
        config: ckpt.model.cfg.clone(),
        step: ckpt.step,
        rng_digest: ckpt.rng_digest,
        master_seed: ckpt.master_seed,
    };
    let header_json = serde_json::to_vec(&header).expect("header serializes");
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header_json);
    for entry in &ckpt.model.layout.entries {
        let name = entry.name.as_bytes();
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name);
        buf.extend_from_slice(&(entry.len as u64).to_le_bytes());
        for v in &ckpt.model.params[entry.offset..entry.offset + entry.len] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path).map_err(io_err(path))?;
    file.write_all(&buf).map_err(io_err(path))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let buf = std::fs::read(path).map_err(io_err(path))?;
    let corrupt = |offset: usize, what: &str| CheckpointError::CorruptHeader {
        path: path.to_path_buf(),
        offset: offset as u64,
        what: what.to_string(),
    };
    if buf.len() < 12 {
        return Err(corrupt(buf.len(), "file shorter than fixed header"));
    }
    if &buf[0..4] != MAGIC {
        return Err(corrupt(0, "bad magic"));
    }
    let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(CheckpointError::BadVersion {
            path: path.to_path_buf(),
            found: version,
            expected: VERSION,
        });
    }
    let header_len = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
    if 12 + header_len > buf.len() {
        return Err(corrupt(buf.len(), "truncated JSON header"));
    }
    let header: Header = serde_json::from_slice(&buf[12..12 + header_len])
        .map_err(|e| corrupt(12, &format!("header JSON: {e}")))?;

    let layout = crate::model::ParamLayout::from_config(&header.config);
    let mut params = vec![0.0; layout.total];
    let mut off = 12 + header_len;
    for entry in &layout.entries {
        if off + 4 > buf.len() {
            return Err(corrupt(off, "truncated array name length"));
        }
        let name_len = u32::from_le_bytes(buf[off..off + 4].try_into().unwrap()) as usize;
        off += 4;
        if off + name_len > buf.len() {
            return Err(corrupt(off, "truncated array name"));
        }
        let name = std::str::from_utf8(&buf[off..off + name_len])
            .map_err(|_| corrupt(off, "array name not utf-8"))?;
        if name != entry.name {
            return Err(corrupt(
                off,
                &format!("array {name} out of order, expected {}", entry.name),
            ));
        }
        off += name_len;
        if off + 8 > buf.len() {
            return Err(corrupt(off, "truncated array count"));
        }
        let count = u64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
        off += 8;
        if count != entry.len as u64 {
            return Err(CheckpointError::ArrayMismatch {
                path: path.to_path_buf(),
                name: entry.name.clone(),
                found: count,
                expected: entry.len as u64,
            });
        }
        if off + 8 * entry.len > buf.len() {
            return Err(corrupt(off, "truncated array payload"));
        }
        for i in 0..entry.len {
            params[entry.offset + i] =
                f64::from_le_bytes(buf[off + 8 * i..off + 8 * i + 8].try_into().unwrap());
        }
        off += 8 * entry.len;
    }
    let model = Model::from_parts(header.config, params)
        .map_err(|e| CheckpointError::Model(e.to_string()))?;
    Ok(Checkpoint {
        model,
        step: header.step,
        rng_digest: header.rng_digest,
        master_seed: header.master_seed,
    })
}

/// Verify a loaded checkpoint matches the run's expectations, naming the
/// first mismatched field.
pub fn ensure_compatible(ckpt: &ModelConfig, run: &ModelConfig) -> Result<(), CheckpointError> {
    let fields: [(&'static str, String, String); 4] = [
        ("pixels", ckpt.pixels.to_string(), run.pixels.to_string()),
        ("slots", ckpt.slots.to_string(), run.slots.to_string()),
        (
            "inferred_slot_dim",
            ckpt.inferred_slot_dim.to_string(),
            run.inferred_slot_dim.to_string(),
        ),
        (
            "decoder",
            format!("{:?}", ckpt.decoder),
            format!("{:?}", run.decoder),
        ),
    ];
    for (field, found, expected) in fields {
        if found != expected {
            return Err(CheckpointError::ConfigMismatch {
                field,
                found,
                expected,
            });
        }
    }
    Ok(())
}
