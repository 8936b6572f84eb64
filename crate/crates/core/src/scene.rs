//! Ground-truth generative process: a slot-factorized latent space, a
//! diagonal-band training region, and an additive renderer onto a 1-D pixel
//! strip.
//!
//! Each of the K slots holds (position, amplitude) in [0,1]^2 and renders one
//! smooth cos^4 bump. In the default layout every slot owns a disjoint
//! sub-strip of the pixel axis, so slot supports never overlap and each pixel
//! depends on at most one slot. A shared-range mode (all bumps over the full
//! strip, minimum-separation rejection) is kept behind a flag.

use crate::rng::ChaCha12Rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("invalid scene config: {0}")]
    InvalidConfig(String),
    #[error("sampler degenerate: acceptance rate {rate:.2e} after {draws} draws for region {region:?}")]
    DegenerateSampler {
        rate: f64,
        draws: u64,
        region: Region,
    },
}

/// Which side of the training band a dataset was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Id,
    Ood,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    /// Number of slots K.
    pub slots: usize,
    /// Ground-truth dims per slot: position and amplitude.
    pub slot_dims: usize,
    /// Pixel count N.
    pub pixels: usize,
    /// Bump half-width w in strip units.
    pub bump_half_width: f64,
    /// Band thickness delta; the band admits coordinate differences up to
    /// sqrt(2) * delta.
    pub band_thickness: f64,
    /// Minimum position separation, used only in shared-range mode.
    pub min_separation: f64,
    /// All bumps share the full strip and overlapping positions are rejected.
    pub shared_range: bool,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            slots: 2,
            slot_dims: 2,
            pixels: 64,
            bump_half_width: 0.08,
            band_thickness: 0.125,
            min_separation: 0.2,
            shared_range: false,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        let k = self.slots;
        if k == 0 {
            return Err(SceneError::InvalidConfig("slots must be >= 1".into()));
        }
        if self.slot_dims != 2 {
            return Err(SceneError::InvalidConfig(format!(
                "slot_dims must be 2 (position, amplitude), got {}",
                self.slot_dims
            )));
        }
        if k * self.slot_dims > self.pixels {
            return Err(SceneError::InvalidConfig(format!(
                "latent dimension {} exceeds pixel count {}",
                k * self.slot_dims,
                self.pixels
            )));
        }
        let w = self.bump_half_width;
        if !(w > 0.0 && w < 1.0 / (4.0 * k as f64)) {
            return Err(SceneError::InvalidConfig(format!(
                "bump_half_width must lie in (0, 1/{}), got {w}",
                4 * k
            )));
        }
        if !(self.band_thickness > 0.0 && self.band_thickness <= 1.0) {
            return Err(SceneError::InvalidConfig(format!(
                "band_thickness must lie in (0, 1], got {}",
                self.band_thickness
            )));
        }
        Ok(())
    }

    pub fn latent_dim(&self) -> usize {
        self.slots * self.slot_dims
    }
}

/// A point in the slot-factorized latent space, all coordinates in [0,1].
/// Stored row-major: slot k occupies coords[k*M .. (k+1)*M].
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthLatent {
    coords: Vec<f64>,
    slot_dims: usize,
}

impl GroundTruthLatent {
    pub fn new(coords: Vec<f64>, slot_dims: usize) -> Self {
        debug_assert_eq!(coords.len() % slot_dims, 0);
        Self { coords, slot_dims }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn slot(&self, k: usize) -> &[f64] {
        &self.coords[k * self.slot_dims..(k + 1) * self.slot_dims]
    }

    pub fn slots(&self) -> usize {
        self.coords.len() / self.slot_dims
    }
}

/// An N-pixel observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub pixels: Vec<f64>,
}

/// True iff every coordinate-wise slot difference is within sqrt(2) * delta,
/// pairwise over slots.
pub fn in_band(cfg: &SceneConfig, z: &GroundTruthLatent) -> bool {
    let bound = SQRT2 * cfg.band_thickness;
    let k = cfg.slots;
    for i in 0..cfg.slot_dims {
        for a in 0..k {
            for b in a + 1..k {
                if (z.slot(a)[i] - z.slot(b)[i]).abs() > bound {
                    return false;
                }
            }
        }
    }
    true
}

/// Rendered position of slot k in shared-range mode: the position latent
/// plus a per-slot offset of k/K, wrapped into [0, 1). Without the offset,
/// band-correlated slots would almost always overlap.
pub fn effective_position(cfg: &SceneConfig, k: usize, p: f64) -> f64 {
    if cfg.shared_range {
        (p + k as f64 / cfg.slots as f64).rem_euclid(1.0)
    } else {
        p
    }
}

/// Rendered positions must differ by at least min_separation (shared-range
/// mode only; sub-strips are disjoint by construction).
fn separated(cfg: &SceneConfig, z: &GroundTruthLatent) -> bool {
    if !cfg.shared_range {
        return true;
    }
    for a in 0..cfg.slots {
        for b in a + 1..cfg.slots {
            let pa = effective_position(cfg, a, z.slot(a)[0]);
            let pb = effective_position(cfg, b, z.slot(b)[0]);
            if (pa - pb).abs() < cfg.min_separation {
                return false;
            }
        }
    }
    true
}

fn draw_uniform(cfg: &SceneConfig, rng: &mut ChaCha12Rng) -> GroundTruthLatent {
    let coords = (0..cfg.latent_dim()).map(|_| rng.gen::<f64>()).collect();
    GroundTruthLatent::new(coords, cfg.slot_dims)
}

fn rejection_sample(
    cfg: &SceneConfig,
    count: usize,
    rng: &mut ChaCha12Rng,
    region: Region,
) -> Result<Vec<GroundTruthLatent>, SceneError> {
    const PROBE: u64 = 1_000_000;
    const MIN_RATE: f64 = 1e-4;
    let mut out = Vec::with_capacity(count);
    let mut draws: u64 = 0;
    let mut accepts: u64 = 0;
    while out.len() < count {
        let z = draw_uniform(cfg, rng);
        draws += 1;
        let inside = in_band(cfg, &z);
        let keep = match region {
            Region::Id => inside,
            Region::Ood => !inside,
        } && separated(cfg, &z);
        if keep {
            accepts += 1;
            out.push(z);
        }
        if draws >= PROBE {
            let rate = accepts as f64 / draws as f64;
            if rate < MIN_RATE {
                return Err(SceneError::DegenerateSampler {
                    rate,
                    draws,
                    region,
                });
            }
        }
    }
    Ok(out)
}

/// Uniform samples from the training band. Deterministic given the stream.
pub fn sample_in_band(
    cfg: &SceneConfig,
    count: usize,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<GroundTruthLatent>, SceneError> {
    rejection_sample(cfg, count, rng, Region::Id)
}

/// Uniform samples from the complement of the band.
pub fn sample_ood(
    cfg: &SceneConfig,
    count: usize,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<GroundTruthLatent>, SceneError> {
    rejection_sample(cfg, count, rng, Region::Ood)
}

/// Bump center for slot k at position latent p.
fn bump_center(cfg: &SceneConfig, k: usize, p: f64) -> f64 {
    let w = cfg.bump_half_width;
    if cfg.shared_range {
        w + (1.0 - 2.0 * w) * effective_position(cfg, k, p)
    } else {
        let kf = cfg.slots as f64;
        k as f64 / kf + w + (1.0 / kf - 2.0 * w) * p
    }
}

/// Render one slot's bump: amplitude (0.5 + 0.5 a) * cos^4 shape with compact
/// support of half-width w around the center.
pub fn render_object(cfg: &SceneConfig, k: usize, slot: &[f64]) -> Observation {
    let (p, a) = (slot[0], slot[1]);
    let center = bump_center(cfg, k, p);
    let amp = 0.5 + 0.5 * a;
    let w = cfg.bump_half_width;
    let n = cfg.pixels;
    let mut pixels = vec![0.0; n];
    for (i, px) in pixels.iter_mut().enumerate() {
        let u = (i as f64 + 0.5) / n as f64;
        let d = u - center;
        if d.abs() < w {
            let c = (std::f64::consts::PI * d / (2.0 * w)).cos();
            *px = amp * c * c * c * c;
        }
    }
    Observation { pixels }
}

/// Render a full scene: the pixel-wise sum of the per-slot bumps.
pub fn render(cfg: &SceneConfig, z: &GroundTruthLatent) -> Observation {
    let mut pixels = vec![0.0; cfg.pixels];
    for k in 0..cfg.slots {
        let obj = render_object(cfg, k, z.slot(k));
        for (acc, v) in pixels.iter_mut().zip(obj.pixels) {
            *acc += v;
        }
    }
    Observation { pixels }
}

/// Render from a flat coordinate slice (K*M values). Finite-difference
/// probes may step slightly outside the unit cube; the renderer is smooth
/// there too.
pub fn render_flat(cfg: &SceneConfig, coords: &[f64]) -> Vec<f64> {
    let z = GroundTruthLatent::new(coords.to_vec(), cfg.slot_dims);
    render(cfg, &z).pixels
}
