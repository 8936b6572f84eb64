//! Dataset containers and their binary file format.
//!
//! File layout (little-endian): magic "CGL1", u32 count, u32 K, u32 M, u32 N,
//! one region byte (0 = ID, 1 = OOD), then `count` records of K*M f64 latent
//! coordinates followed by N f64 pixels. A JSON sidecar records the scene
//! config for provenance. Round-trips are bit-exact.

use crate::rng;
use crate::scene::{self, GroundTruthLatent, Observation, Region, SceneConfig, SceneError};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

const MAGIC: &[u8; 4] = b"CGL1";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: bad magic {found:?}, expected \"CGL1\"")]
    BadMagic { path: PathBuf, found: [u8; 4] },
    #[error("{path}: truncated at byte {offset}")]
    Truncated { path: PathBuf, offset: u64 },
    #[error("{path}: invalid region tag {tag}")]
    BadRegion { path: PathBuf, tag: u8 },
    #[error(transparent)]
    Scene(#[from] SceneError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Latents with their rendered observations and a region tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub latents: Vec<GroundTruthLatent>,
    pub observations: Vec<Observation>,
    pub region: Region,
    pub slots: usize,
    pub slot_dims: usize,
    pub pixels: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.latents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latents.is_empty()
    }

    /// Observations flattened into one row-major [len, pixels] buffer.
    pub fn observation_matrix(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() * self.pixels);
        for obs in &self.observations {
            out.extend_from_slice(&obs.pixels);
        }
        out
    }

    /// Latents flattened into one row-major [len, slots*slot_dims] buffer.
    pub fn latent_matrix(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() * self.slots * self.slot_dims);
        for z in &self.latents {
            out.extend_from_slice(z.coords());
        }
        out
    }
}

/// Sample counts for one generation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetCounts {
    pub train: usize,
    pub id_test: usize,
    pub ood_test: usize,
}

impl Default for DatasetCounts {
    fn default() -> Self {
        Self {
            train: 20_000,
            id_test: 2_000,
            ood_test: 2_000,
        }
    }
}

#[derive(Debug)]
pub struct DatasetBundle {
    pub train: Dataset,
    pub id_test: Dataset,
    pub ood_test: Dataset,
}

fn build_dataset(cfg: &SceneConfig, latents: Vec<GroundTruthLatent>, region: Region) -> Dataset {
    let observations = latents.iter().map(|z| scene::render(cfg, z)).collect();
    Dataset {
        latents,
        observations,
        region,
        slots: cfg.slots,
        slot_dims: cfg.slot_dims,
        pixels: cfg.pixels,
    }
}

/// Generate train (ID), ID-test, and OOD-test datasets from independent
/// streams derived from the scene seed.
pub fn generate(cfg: &SceneConfig, counts: &DatasetCounts) -> Result<DatasetBundle, DatasetError> {
    cfg.validate()?;
    let mut train_rng = rng::stream(cfg.seed, "scene/train");
    let mut id_rng = rng::stream(cfg.seed, "scene/id_test");
    let mut ood_rng = rng::stream(cfg.seed, "scene/ood_test");
    let train = scene::sample_in_band(cfg, counts.train, &mut train_rng)?;
    let id_test = scene::sample_in_band(cfg, counts.id_test, &mut id_rng)?;
    let ood_test = scene::sample_ood(cfg, counts.ood_test, &mut ood_rng)?;
    Ok(DatasetBundle {
        train: build_dataset(cfg, train, Region::Id),
        id_test: build_dataset(cfg, id_test, Region::Id),
        ood_test: build_dataset(cfg, ood_test, Region::Ood),
    })
}

/// Expected on-disk size in bytes for a dataset of `count` records.
pub fn file_size(count: usize, slots: usize, slot_dims: usize, pixels: usize) -> usize {
    4 + 4 * 4 + 1 + count * 8 * (slots * slot_dims + pixels)
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    let mut buf =
        Vec::with_capacity(file_size(ds.len(), ds.slots, ds.slot_dims, ds.pixels));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(ds.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(ds.slots as u32).to_le_bytes());
    buf.extend_from_slice(&(ds.slot_dims as u32).to_le_bytes());
    buf.extend_from_slice(&(ds.pixels as u32).to_le_bytes());
    buf.push(match ds.region {
        Region::Id => 0,
        Region::Ood => 1,
    });
    for (z, obs) in ds.latents.iter().zip(&ds.observations) {
        for v in z.coords() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for v in &obs.pixels {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path).map_err(io_err(path))?;
    file.write_all(&buf).map_err(io_err(path))?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let mut file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf).map_err(io_err(path))?;
    let need = |offset: usize, len: usize| -> Result<(), DatasetError> {
        if offset + len > buf.len() {
            Err(DatasetError::Truncated {
                path: path.to_path_buf(),
                offset: buf.len() as u64,
            })
        } else {
            Ok(())
        }
    };
    need(0, 21)?;
    let mut magic = [0u8; 4];
    magic.copy_from_slice(&buf[0..4]);
    if &magic != MAGIC {
        return Err(DatasetError::BadMagic {
            path: path.to_path_buf(),
            found: magic,
        });
    }
    let u32_at = |off: usize| u32::from_le_bytes(buf[off..off + 4].try_into().unwrap()) as usize;
    let count = u32_at(4);
    let slots = u32_at(8);
    let slot_dims = u32_at(12);
    let pixels = u32_at(16);
    let region = match buf[20] {
        0 => Region::Id,
        1 => Region::Ood,
        tag => {
            return Err(DatasetError::BadRegion {
                path: path.to_path_buf(),
                tag,
            })
        }
    };
    let record = 8 * (slots * slot_dims + pixels);
    need(21, count * record)?;
    let mut latents = Vec::with_capacity(count);
    let mut observations = Vec::with_capacity(count);
    let mut off = 21;
    let f64_at = |off: usize| f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
    for _ in 0..count {
        let mut coords = Vec::with_capacity(slots * slot_dims);
        for i in 0..slots * slot_dims {
            coords.push(f64_at(off + 8 * i));
        }
        off += 8 * slots * slot_dims;
        let mut px = Vec::with_capacity(pixels);
        for i in 0..pixels {
            px.push(f64_at(off + 8 * i));
        }
        off += 8 * pixels;
        latents.push(GroundTruthLatent::new(coords, slot_dims));
        observations.push(Observation { pixels: px });
    }
    Ok(Dataset {
        latents,
        observations,
        region,
        slots,
        slot_dims,
        pixels,
    })
}

/// Provenance sidecar written next to generated datasets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub scene: SceneConfig,
    pub counts: DatasetCounts,
    pub master_seed: u64,
}

pub fn write_provenance(path: &Path, p: &Provenance) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    let text = serde_json::to_string_pretty(p).expect("provenance serializes");
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn read_provenance(path: &Path) -> Result<Provenance, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| DatasetError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })
}
