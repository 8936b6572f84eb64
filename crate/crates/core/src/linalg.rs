//! Small dense linear algebra: SPD solves and symmetric eigenvalues.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix not positive definite: pivot {pivot} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: matrix {n}x{n}, rhs has {rhs_len} elements for {m} columns")]
    DimensionMismatch { n: usize, m: usize, rhs_len: usize },
}

/// Solve A X = B for symmetric positive definite A (n x n, row-major) and
/// B (n x m, row-major). Overwrites `a` with its Cholesky factor and `b`
/// with the solution.
pub fn cholesky_solve(
    a: &mut [f64],
    n: usize,
    b: &mut [f64],
    m: usize,
) -> Result<(), LinalgError> {
    if b.len() != n * m || a.len() != n * n {
        return Err(LinalgError::DimensionMismatch {
            n,
            m,
            rhs_len: b.len(),
        });
    }
    // In-place lower Cholesky: A = L L^T.
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(LinalgError::NotPositiveDefinite {
                index: j,
                pivot: diag,
            });
        }
        let ljj = diag.sqrt();
        a[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / ljj;
        }
    }
    // Forward substitution: L Y = B.
    for i in 0..n {
        for c in 0..m {
            let mut s = b[i * m + c];
            for k in 0..i {
                s -= a[i * n + k] * b[k * m + c];
            }
            b[i * m + c] = s / a[i * n + i];
        }
    }
    // Back substitution: L^T X = Y.
    for i in (0..n).rev() {
        for c in 0..m {
            let mut s = b[i * m + c];
            for k in i + 1..n {
                s -= a[k * n + i] * b[k * m + c];
            }
            b[i * m + c] = s / a[i * n + i];
        }
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix (row-major) by cyclic Jacobi rotation.
/// Returned in descending order.
pub fn sym_eigenvalues(matrix: &[f64], n: usize) -> Vec<f64> {
    let mut a = matrix.to_vec();
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += a[p * n + q] * a[p * n + q];
            }
        }
        s
    };
    let norm: f64 = a.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        if off(&a) <= 1e-30 * norm {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eigs.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eigs
}

/// Singular values of a rows x cols matrix (row-major) via the eigenvalues
/// of its Gram matrix. Descending order.
pub fn singular_values(matrix: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut gram = vec![0.0; cols * cols];
    for i in 0..cols {
        for j in i..cols {
            let mut s = 0.0;
            for r in 0..rows {
                s += matrix[r * cols + i] * matrix[r * cols + j];
            }
            gram[i * cols + j] = s;
            gram[j * cols + i] = s;
        }
    }
    sym_eigenvalues(&gram, cols)
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect()
}

/// Numerical rank: singular values above `rel_tol` times the largest.
pub fn numerical_rank(matrix: &[f64], rows: usize, cols: usize, rel_tol: f64) -> usize {
    if rows == 0 || cols == 0 {
        return 0;
    }
    let sv = singular_values(matrix, rows, cols);
    let max = sv[0];
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}
