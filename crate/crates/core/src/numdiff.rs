//! Finite-difference oracles: gradient checking and Jacobians.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumDiffError {
    #[error("non-finite output at coordinate {output} while perturbing input {input} by {sign}h")]
    NonFiniteOutput {
        output: usize,
        input: usize,
        sign: char,
    },
    #[error("step size must be positive, got {0}")]
    BadStep(f64),
}

/// Max relative error between an analytic gradient and central differences.
///
/// Per-coordinate error is |analytic - central| / (|analytic| + |central| + 1e-12).
pub fn grad_check<F>(f: F, theta: &[f64], analytic: &[f64], h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert!(h > 0.0, "step size must be positive");
    assert_eq!(theta.len(), analytic.len());
    let mut work = theta.to_vec();
    let mut worst = 0.0f64;
    for i in 0..theta.len() {
        let orig = work[i];
        work[i] = orig + h;
        let fp = f(&work);
        work[i] = orig - h;
        let fm = f(&work);
        work[i] = orig;
        let central = (fp - fm) / (2.0 * h);
        let err = (analytic[i] - central).abs() / (analytic[i].abs() + central.abs() + 1e-12);
        worst = worst.max(err);
    }
    worst
}

/// Central-difference Jacobian: J[n][d] = (f(z + h e_d)_n - f(z - h e_d)_n) / 2h.
pub fn jacobian_fd<F>(f: F, z: &[f64], h: f64) -> Result<Vec<Vec<f64>>, NumDiffError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if h <= 0.0 {
        return Err(NumDiffError::BadStep(h));
    }
    let mut work = z.to_vec();
    let mut jac: Vec<Vec<f64>> = Vec::new();
    for d in 0..z.len() {
        let orig = work[d];
        work[d] = orig + h;
        let fp = f(&work);
        work[d] = orig - h;
        let fm = f(&work);
        work[d] = orig;
        if jac.is_empty() {
            jac = vec![vec![0.0; z.len()]; fp.len()];
        }
        for n in 0..fp.len() {
            if !fp[n].is_finite() {
                return Err(NumDiffError::NonFiniteOutput {
                    output: n,
                    input: d,
                    sign: '+',
                });
            }
            if !fm[n].is_finite() {
                return Err(NumDiffError::NonFiniteOutput {
                    output: n,
                    input: d,
                    sign: '-',
                });
            }
            jac[n][d] = (fp[n] - fm[n]) / (2.0 * h);
        }
    }
    Ok(jac)
}
