//! Latent-projection error heatmaps: test points projected onto the plane
//! spanned by each object's amplitude latent, binned into a G x G grid of
//! mean normalized MSE.

use super::isolated::isolated_decoder_error;
use crate::dataset::Dataset;
use crate::model::Model;
use crate::scene::{self, SceneConfig, SQRT2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapMode {
    FullAe,
    IsolatedDecoder,
}

#[derive(Debug, Clone)]
pub struct HeatmapGrid {
    pub resolution: usize,
    /// Row-major G x G cell means; -1 marks an empty cell.
    pub values: Vec<f64>,
    /// True when the cell center lies in the band's projection.
    pub region_id: Vec<bool>,
    pub counts: Vec<usize>,
    pub mode: HeatmapMode,
}

/// Project a latent onto (slot 0 amplitude, slot 1 amplitude).
fn project(z: &scene::GroundTruthLatent) -> (f64, f64) {
    (z.slot(0)[1], z.slot(1)[1])
}

fn cell_of(coord: f64, resolution: usize) -> usize {
    ((coord * resolution as f64) as usize).min(resolution - 1)
}

fn per_point_errors(
    model: &Model,
    scene_cfg: &SceneConfig,
    data: &Dataset,
    mode: HeatmapMode,
    id_identifiability: Option<f64>,
) -> Vec<f64> {
    let n = data.pixels;
    match mode {
        HeatmapMode::FullAe => {
            let x = data.observation_matrix();
            let mut errs = Vec::with_capacity(data.len());
            const CHUNK: usize = 256;
            let mut row = 0;
            while row < data.len() {
                let rows = CHUNK.min(data.len() - row);
                let xhat = model.reconstruct_batch(&x[row * n..(row + rows) * n], rows);
                for r in 0..rows {
                    let mut e = 0.0;
                    for j in 0..n {
                        let d = xhat[r * n + j] - x[(row + r) * n + j];
                        e += d * d;
                    }
                    errs.push(e / n as f64);
                }
                row += rows;
            }
            errs
        }
        HeatmapMode::IsolatedDecoder => data
            .latents
            .iter()
            .map(|z| {
                isolated_decoder_error(model, scene_cfg, std::slice::from_ref(z), id_identifiability).0
            })
            .collect(),
    }
}

/// Bin ID and OOD test points into a G x G grid over the amplitude plane.
/// OOD points whose projection falls inside the band's projected strip are
/// filtered out so the regions separate visually.
pub fn heatmap_grid(
    model: &Model,
    scene_cfg: &SceneConfig,
    id_data: &Dataset,
    ood_data: &Dataset,
    mode: HeatmapMode,
    resolution: usize,
    id_identifiability: Option<f64>,
) -> HeatmapGrid {
    assert!(resolution >= 8, "heatmap resolution must be at least 8");
    let g = resolution;
    let mut sums = vec![0.0; g * g];
    let mut counts = vec![0usize; g * g];
    let band = SQRT2 * scene_cfg.band_thickness;

    let mut bin = |data: &Dataset, errs: &[f64], filter_band: bool| {
        for (z, &e) in data.latents.iter().zip(errs) {
            let (a0, a1) = project(z);
            if filter_band && (a0 - a1).abs() <= band {
                continue;
            }
            let cell = cell_of(a0, g) * g + cell_of(a1, g);
            sums[cell] += e;
            counts[cell] += 1;
        }
    };
    let id_errs = per_point_errors(model, scene_cfg, id_data, mode, id_identifiability);
    bin(id_data, &id_errs, false);
    let ood_errs = per_point_errors(model, scene_cfg, ood_data, mode, id_identifiability);
    bin(ood_data, &ood_errs, true);

    let values: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c == 0 { -1.0 } else { s / c as f64 })
        .collect();
    let region_id = (0..g * g)
        .map(|cell| {
            let r = ((cell / g) as f64 + 0.5) / g as f64;
            let c = ((cell % g) as f64 + 0.5) / g as f64;
            (r - c).abs() <= band
        })
        .collect();
    HeatmapGrid {
        resolution: g,
        values,
        region_id,
        counts,
        mode,
    }
}

impl HeatmapGrid {
    /// CSV rows `row,col,value,region`; empty cells carry -1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,value,region\n");
        let g = self.resolution;
        for r in 0..g {
            for c in 0..g {
                let cell = r * g + c;
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r,
                    c,
                    self.values[cell],
                    if self.region_id[cell] { "ID" } else { "OOD" }
                ));
            }
        }
        out
    }

    /// Binary 8-bit PGM (P5), linear scale from 0 to the max cell value
    /// (recorded in a header comment); empty cells render as 0.
    pub fn to_pgm(&self) -> Vec<u8> {
        let g = self.resolution;
        let max = self
            .values
            .iter()
            .cloned()
            .filter(|v| *v >= 0.0)
            .fold(0.0f64, f64::max);
        let mut out = Vec::new();
        out.extend_from_slice(format!("P5\n# max={max}\n{g} {g}\n255\n").as_bytes());
        for v in &self.values {
            let byte = if *v < 0.0 || max == 0.0 {
                0u8
            } else {
                ((v / max) * 255.0).round().clamp(0.0, 255.0) as u8
            };
            out.push(byte);
        }
        out
    }
}
