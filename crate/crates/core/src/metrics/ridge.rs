//! RBF kernel ridge regression with a closed-form dual solve, and the R^2
//! score used throughout evaluation.

use super::MetricsError;
use crate::linalg::cholesky_solve;

/// Fitted model: support inputs, dual coefficients, RBF bandwidth, ridge.
/// Targets are centered before the solve, so a constant target is fit
/// exactly by the intercept for any ridge strength.
#[derive(Debug, Clone)]
pub struct KernelRidgeModel {
    inputs: Vec<f64>,
    n: usize,
    dim: usize,
    alpha: Vec<f64>,
    intercept: Vec<f64>,
    out_dim: usize,
    pub bandwidth: f64,
    pub ridge: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median pairwise Euclidean distance, floored at 1e-6.
fn median_bandwidth(x: &[f64], n: usize, dim: usize) -> f64 {
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push(sq_dist(&x[i * dim..(i + 1) * dim], &x[j * dim..(j + 1) * dim]).sqrt());
        }
    }
    if dists.is_empty() {
        return 1e-6;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 0 {
        0.5 * (dists[mid - 1] + dists[mid])
    } else {
        dists[mid]
    };
    median.max(1e-6)
}

/// Fit (K + ridge I) alpha = Y with an RBF Gram matrix
/// K_ij = exp(-||x_i - x_j||^2 / (2 bandwidth^2)), bandwidth from the median
/// heuristic.
pub fn kernel_ridge_fit(
    x: &[f64],
    n: usize,
    dim: usize,
    y: &[f64],
    out_dim: usize,
    ridge: f64,
) -> Result<KernelRidgeModel, MetricsError> {
    if n < 2 {
        return Err(MetricsError::TooFewSamples { need: 2, got: n });
    }
    assert!(ridge > 0.0, "ridge must be positive");
    assert_eq!(x.len(), n * dim);
    assert_eq!(y.len(), n * out_dim);
    let bandwidth = median_bandwidth(x, n, dim);
    let denom = 2.0 * bandwidth * bandwidth;
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        gram[i * n + i] = 1.0 + ridge;
        for j in i + 1..n {
            let k = (-sq_dist(&x[i * dim..(i + 1) * dim], &x[j * dim..(j + 1) * dim]) / denom).exp();
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }
    let mut intercept = vec![0.0; out_dim];
    for r in 0..n {
        for c in 0..out_dim {
            intercept[c] += y[r * out_dim + c];
        }
    }
    for v in intercept.iter_mut() {
        *v /= n as f64;
    }
    let mut alpha: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(i, v)| v - intercept[i % out_dim])
        .collect();
    cholesky_solve(&mut gram, n, &mut alpha, out_dim)?;
    Ok(KernelRidgeModel {
        inputs: x.to_vec(),
        n,
        dim,
        alpha,
        intercept,
        out_dim,
        bandwidth,
        ridge,
    })
}

/// Predict targets for a [rows, dim] query block.
pub fn kernel_ridge_predict(model: &KernelRidgeModel, x: &[f64], rows: usize) -> Vec<f64> {
    assert_eq!(x.len(), rows * model.dim);
    let denom = 2.0 * model.bandwidth * model.bandwidth;
    let mut out = vec![0.0; rows * model.out_dim];
    for r in 0..rows {
        let q = &x[r * model.dim..(r + 1) * model.dim];
        for c in 0..model.out_dim {
            out[r * model.out_dim + c] = model.intercept[c];
        }
        for i in 0..model.n {
            let k = (-sq_dist(q, &model.inputs[i * model.dim..(i + 1) * model.dim]) / denom).exp();
            for c in 0..model.out_dim {
                out[r * model.out_dim + c] += k * model.alpha[i * model.out_dim + c];
            }
        }
    }
    out
}

impl KernelRidgeModel {
    pub fn predict(&self, x: &[f64], rows: usize) -> Vec<f64> {
        kernel_ridge_predict(self, x, rows)
    }
}

/// R^2 = 1 - SSE/SST per target dimension, averaged over dimensions. SST is
/// taken about the mean of `y_true`. A zero-variance dimension scores 1 when
/// predictions match exactly and negative infinity otherwise.
pub fn r2_score(y_true: &[f64], y_pred: &[f64], rows: usize, dims: usize) -> f64 {
    assert_eq!(y_true.len(), rows * dims);
    assert_eq!(y_true.len(), y_pred.len());
    let mut total = 0.0;
    for d in 0..dims {
        let mean: f64 = (0..rows).map(|r| y_true[r * dims + d]).sum::<f64>() / rows as f64;
        let mut sst = 0.0;
        let mut sse = 0.0;
        let mut exact = true;
        for r in 0..rows {
            let t = y_true[r * dims + d];
            let p = y_pred[r * dims + d];
            sst += (t - mean) * (t - mean);
            sse += (t - p) * (t - p);
            if t != p {
                exact = false;
            }
        }
        total += if sst == 0.0 {
            if exact {
                1.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            1.0 - sse / sst
        };
    }
    total / dims as f64
}
