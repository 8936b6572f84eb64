//! Slot identifiability and reconstruction quality.

use super::ridge::{kernel_ridge_fit, r2_score};
use super::MetricsError;
use crate::assignment::{hungarian, CostMatrix};
use crate::dataset::Dataset;
use crate::model::Model;
use crate::rng;
use rand::seq::SliceRandom;

const MAX_FIT: usize = 2000;
const RIDGE: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct SlotIdentifiability {
    /// Mean held-out R^2 over matched slot pairs.
    pub mean_r2: f64,
    /// permutation[i] = inferred slot matched to ground-truth slot i.
    pub permutation: Vec<usize>,
    /// Full pairwise matrix r2[gt][inferred].
    pub r2_matrix: Vec<Vec<f64>>,
}

/// Fit one nonlinear regressor per (ground-truth slot, inferred slot) pair,
/// score each on held-out data, and match slots by Hungarian assignment on
/// the negated scores.
///
/// `inferred` is a row-major [n, slots * inferred_dim] buffer, `gt` a
/// [n, slots * gt_dim] buffer. Up to 2000 points are used for fitting and a
/// disjoint 20% of the subsample for scoring.
pub fn slot_identifiability(
    inferred: &[f64],
    gt: &[f64],
    n: usize,
    slots: usize,
    inferred_dim: usize,
    gt_dim: usize,
    eval_seed: u64,
) -> Result<SlotIdentifiability, MetricsError> {
    if n < 100 {
        return Err(MetricsError::TooFewSamples { need: 100, got: n });
    }
    let gt_cols = slots * gt_dim;
    let inf_cols = slots * inferred_dim;
    assert_eq!(gt.len(), n * gt_cols);
    assert_eq!(inferred.len(), n * inf_cols);

    // Refuse degenerate ground-truth slots: R^2 against a constant target is
    // undefined.
    for slot in 0..slots {
        for d in 0..gt_dim {
            let col = slot * gt_dim + d;
            let mean: f64 = (0..n).map(|r| gt[r * gt_cols + col]).sum::<f64>() / n as f64;
            let var: f64 = (0..n)
                .map(|r| {
                    let v = gt[r * gt_cols + col] - mean;
                    v * v
                })
                .sum::<f64>()
                / n as f64;
            if var < 1e-12 {
                return Err(MetricsError::DegenerateSlot { slot, dim: d });
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = rng::stream(eval_seed, "metrics/ident");
    order.shuffle(&mut shuffle_rng);
    let total = n.min(MAX_FIT + MAX_FIT / 4);
    let fit_count = (total * 4 / 5).min(MAX_FIT);
    let test_count = total - fit_count;
    let fit_rows = &order[..fit_count];
    let test_rows = &order[fit_count..fit_count + test_count];

    let gather = |rows: &[usize], src: &[f64], cols: usize, lo: usize, hi: usize| -> Vec<f64> {
        let mut out = Vec::with_capacity(rows.len() * (hi - lo));
        for &r in rows {
            out.extend_from_slice(&src[r * cols + lo..r * cols + hi]);
        }
        out
    };

    let mut r2 = vec![vec![0.0; slots]; slots];
    for gt_slot in 0..slots {
        let y_fit = gather(fit_rows, gt, gt_cols, gt_slot * gt_dim, (gt_slot + 1) * gt_dim);
        let y_test = gather(
            test_rows,
            gt,
            gt_cols,
            gt_slot * gt_dim,
            (gt_slot + 1) * gt_dim,
        );
        for inf_slot in 0..slots {
            let x_fit = gather(
                fit_rows,
                inferred,
                inf_cols,
                inf_slot * inferred_dim,
                (inf_slot + 1) * inferred_dim,
            );
            let x_test = gather(
                test_rows,
                inferred,
                inf_cols,
                inf_slot * inferred_dim,
                (inf_slot + 1) * inferred_dim,
            );
            let model = kernel_ridge_fit(&x_fit, fit_count, inferred_dim, &y_fit, gt_dim, RIDGE)?;
            let pred = model.predict(&x_test, test_count);
            r2[gt_slot][inf_slot] = r2_score(&y_test, &pred, test_count, gt_dim);
        }
    }

    // Hungarian on negated scores; clamp -inf sentinels to a large finite
    // cost so the solver sees finite entries.
    let mut costs = Vec::with_capacity(slots * slots);
    for row in &r2 {
        for &v in row {
            costs.push(if v.is_finite() { -v } else { 1e12 });
        }
    }
    let cm = CostMatrix::new(slots, costs).expect("square");
    let assignment = hungarian(&cm).expect("finite by clamping");
    let mean_r2 = (0..slots)
        .map(|i| r2[i][assignment.perm[i]])
        .sum::<f64>()
        / slots as f64;
    Ok(SlotIdentifiability {
        mean_r2,
        permutation: assignment.perm,
        r2_matrix: r2,
    })
}

/// 1 - MSE / (mean per-pixel variance of the dataset). A model emitting the
/// dataset's mean image scores exactly zero.
pub fn reconstruction_r2(model: &Model, data: &Dataset) -> f64 {
    let n = data.pixels;
    let count = data.len();
    let x = data.observation_matrix();
    let mut mse = 0.0;
    const CHUNK: usize = 256;
    let mut row = 0;
    while row < count {
        let rows = CHUNK.min(count - row);
        let xhat = model.reconstruct_batch(&x[row * n..(row + rows) * n], rows);
        for (a, b) in xhat.iter().zip(&x[row * n..(row + rows) * n]) {
            mse += (a - b) * (a - b);
        }
        row += rows;
    }
    mse /= (count * n) as f64;

    let mut mean = vec![0.0; n];
    for r in 0..count {
        for j in 0..n {
            mean[j] += x[r * n + j];
        }
    }
    for m in mean.iter_mut() {
        *m /= count as f64;
    }
    let mut var = 0.0;
    for r in 0..count {
        for j in 0..n {
            let d = x[r * n + j] - mean[j];
            var += d * d;
        }
    }
    var /= (count * n) as f64;
    1.0 - mse / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Identity-with-permutation fixture: inferred slots are the ground truth
    /// slots in swapped order (padded to the inferred dimension).
    #[test]
    fn permuted_identity_scores_near_one() {
        let n = 600;
        let (slots, gt_dim, inf_dim) = (2, 2, 3);
        let mut rng = crate::rng::stream(11, "ident-test");
        let mut gt = Vec::with_capacity(n * slots * gt_dim);
        let mut inferred = Vec::with_capacity(n * slots * inf_dim);
        for _ in 0..n {
            let z: Vec<f64> = (0..slots * gt_dim).map(|_| rng.gen::<f64>()).collect();
            gt.extend_from_slice(&z);
            // inferred slot 0 = gt slot 1, inferred slot 1 = gt slot 0
            for src in [1usize, 0] {
                inferred.extend_from_slice(&z[src * gt_dim..(src + 1) * gt_dim]);
                inferred.push(0.37); // inert extra dimension
            }
        }
        let out = slot_identifiability(&inferred, &gt, n, slots, inf_dim, gt_dim, 0).unwrap();
        assert!(out.mean_r2 > 0.99, "mean R2 {}", out.mean_r2);
        assert_eq!(out.permutation, vec![1, 0]);
    }

    #[test]
    fn noise_scores_near_zero() {
        let n = 600;
        let (slots, gt_dim, inf_dim) = (2, 2, 3);
        let mut rng = crate::rng::stream(12, "ident-test");
        let gt: Vec<f64> = (0..n * slots * gt_dim).map(|_| rng.gen::<f64>()).collect();
        let inferred: Vec<f64> = (0..n * slots * inf_dim).map(|_| rng.gen::<f64>()).collect();
        let out = slot_identifiability(&inferred, &gt, n, slots, inf_dim, gt_dim, 0).unwrap();
        assert!(out.mean_r2 < 0.1, "mean R2 {}", out.mean_r2);
    }

    #[test]
    fn elementwise_cubic_is_recovered() {
        let n = 600;
        let (slots, gt_dim, inf_dim) = (2, 2, 2);
        let mut rng = crate::rng::stream(13, "ident-test");
        let mut gt = Vec::new();
        let mut inferred = Vec::new();
        for _ in 0..n {
            let z: Vec<f64> = (0..slots * gt_dim).map(|_| rng.gen::<f64>()).collect();
            gt.extend_from_slice(&z);
            inferred.extend(z.iter().map(|v| v * v * v));
        }
        let out = slot_identifiability(&inferred, &gt, n, slots, inf_dim, gt_dim, 0).unwrap();
        assert!(out.mean_r2 > 0.95, "mean R2 {}", out.mean_r2);
        assert_eq!(out.permutation, vec![0, 1]);
    }

    #[test]
    fn degenerate_slot_is_reported() {
        let n = 200;
        let mut gt = Vec::new();
        let mut inferred = Vec::new();
        let mut rng = crate::rng::stream(14, "ident-test");
        for _ in 0..n {
            gt.extend_from_slice(&[0.5, rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()]);
            inferred.extend((0..4).map(|_| rng.gen::<f64>()));
        }
        match slot_identifiability(&inferred, &gt, n, 2, 2, 2, 0).unwrap_err() {
            MetricsError::DegenerateSlot { slot, dim } => {
                assert_eq!((slot, dim), (0, 0));
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let gt = vec![0.0; 50 * 4];
        let inferred = vec![0.0; 50 * 4];
        assert!(matches!(
            slot_identifiability(&inferred, &gt, 50, 2, 2, 2, 0),
            Err(MetricsError::TooFewSamples { .. })
        ));
    }
}
