//! Evaluation machinery: compositionality diagnostics, nonlinear-regression
//! identifiability scores, reconstruction quality, isolated decoder error,
//! and latent-projection heatmaps.

mod diag;
mod heatmap;
mod ident;
mod isolated;
mod report;
mod ridge;

pub use diag::{
    comp_contrast, compositionality_check, hessian_cross_check, irreducibility_check,
    InfluenceSets, IrreducibilityOptions, IrreducibilityReport,
};
pub use heatmap::{heatmap_grid, HeatmapGrid, HeatmapMode};
pub use ident::{reconstruction_r2, slot_identifiability, SlotIdentifiability};
pub use isolated::isolated_decoder_error;
pub use report::{evaluate, EvalOptions, MetricsReport};
pub use ridge::{kernel_ridge_fit, r2_score, KernelRidgeModel};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    NumDiff(#[from] crate::numdiff::NumDiffError),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("ground-truth slot {slot} dimension {dim} has (near-)zero variance")]
    DegenerateSlot { slot: usize, dim: usize },
    #[error("kernel ridge solve failed: {0}")]
    Solve(#[from] crate::linalg::LinalgError),
    #[error("model error: {0}")]
    Model(String),
}
