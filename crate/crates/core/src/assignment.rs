//! Exact minimum-cost bipartite assignment on square cost matrices.
//!
//! [`hungarian`] runs an O(n^3) shortest-augmenting-path solver, then refines
//! the result to the lexicographically smallest permutation among cost ties so
//! that identical inputs always yield identical outputs. [`brute_force_assignment`]
//! is the independent oracle: exhaustive enumeration with the same tie-break.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssignmentError {
    #[error("non-finite cost at row {row}, col {col}: {value}")]
    NonFiniteCost { row: usize, col: usize, value: f64 },
    #[error("cost data length {len} does not match n^2 for n = {n}")]
    BadDimensions { n: usize, len: usize },
    #[error("brute force limited to n <= {limit}, got n = {n}")]
    TooLarge { n: usize, limit: usize },
}

/// Square cost matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    costs: Vec<f64>,
}

impl CostMatrix {
    pub fn new(n: usize, costs: Vec<f64>) -> Result<Self, AssignmentError> {
        if costs.len() != n * n {
            return Err(AssignmentError::BadDimensions {
                n,
                len: costs.len(),
            });
        }
        Ok(Self { n, costs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AssignmentError> {
        let n = rows.len();
        let mut costs = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(AssignmentError::BadDimensions {
                    n,
                    len: row.len() * n,
                });
            }
            costs.extend_from_slice(row);
        }
        Ok(Self { n, costs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.costs[row * self.n + col]
    }

    fn check_finite(&self) -> Result<(), AssignmentError> {
        for (i, &v) in self.costs.iter().enumerate() {
            if !v.is_finite() {
                return Err(AssignmentError::NonFiniteCost {
                    row: i / self.n,
                    col: i % self.n,
                    value: v,
                });
            }
        }
        Ok(())
    }
}

/// A permutation of [n] assigning a column to each row, with its total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub perm: Vec<usize>,
    pub total_cost: f64,
}

/// Total cost of a permutation, summed in row order.
fn row_fold_cost(c: &CostMatrix, perm: &[usize]) -> f64 {
    perm.iter()
        .enumerate()
        .fold(0.0, |acc, (row, &col)| acc + c.at(row, col))
}

/// Shortest-augmenting-path Hungarian core. Returns the column assigned to
/// each row for one (arbitrary) optimal assignment.
fn hungarian_core(c: &CostMatrix) -> Vec<usize> {
    let n = c.n;
    if n == 0 {
        return Vec::new();
    }
    // 1-indexed potentials; p[j] = row matched to column j, 0 = free.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = c.at(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}

/// Optimal completion of a partial assignment: rows `fixed.len()..n` assigned
/// to the columns not used by `fixed`.
fn complete(c: &CostMatrix, fixed: &[usize]) -> Vec<usize> {
    let n = c.n;
    let start = fixed.len();
    let mut used = vec![false; n];
    for &col in fixed {
        used[col] = true;
    }
    let free_cols: Vec<usize> = (0..n).filter(|&j| !used[j]).collect();
    let m = n - start;
    let mut sub = Vec::with_capacity(m * m);
    for row in start..n {
        for &col in &free_cols {
            sub.push(c.at(row, col));
        }
    }
    let sub = CostMatrix::new(m, sub).expect("square by construction");
    let sub_perm = hungarian_core(&sub);
    let mut perm = fixed.to_vec();
    perm.extend(sub_perm.iter().map(|&j| free_cols[j]));
    perm
}

/// Globally minimal assignment; among cost ties, the lexicographically
/// smallest permutation.
pub fn hungarian(c: &CostMatrix) -> Result<Assignment, AssignmentError> {
    c.check_finite()?;
    let n = c.n;
    if n == 0 {
        return Ok(Assignment {
            perm: Vec::new(),
            total_cost: 0.0,
        });
    }
    let mut best = hungarian_core(c);
    let mut best_cost = row_fold_cost(c, &best);

    // Lexicographic refinement: row by row, try to lower the assigned column
    // without raising the total cost. A strictly cheaper completion (possible
    // only through float rounding of tied optima) restarts the scan.
    let mut row = 0;
    while row < n {
        let mut advanced = true;
        let used: Vec<usize> = best[..row].to_vec();
        for cand in 0..best[row] {
            if used.contains(&cand) {
                continue;
            }
            let mut fixed = used.clone();
            fixed.push(cand);
            let kappa = complete(c, &fixed);
            let cost = row_fold_cost(c, &kappa);
            if cost < best_cost {
                best = kappa;
                best_cost = cost;
                row = 0;
                advanced = false;
                break;
            }
            if cost == best_cost {
                best = kappa;
                break;
            }
        }
        if advanced {
            row += 1;
        }
    }

    Ok(Assignment {
        perm: best,
        total_cost: best_cost,
    })
}

/// Exhaustive minimum with the same lexicographic tie-break. Oracle only.
pub fn brute_force_assignment(c: &CostMatrix) -> Result<Assignment, AssignmentError> {
    const LIMIT: usize = 9;
    if c.n > LIMIT {
        return Err(AssignmentError::TooLarge { n: c.n, limit: LIMIT });
    }
    c.check_finite()?;
    let n = c.n;
    if n == 0 {
        return Ok(Assignment {
            perm: Vec::new(),
            total_cost: 0.0,
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_cost = row_fold_cost(c, &perm);
    while next_permutation(&mut perm) {
        let cost = row_fold_cost(c, &perm);
        if cost < best_cost {
            best_cost = cost;
            best.copy_from_slice(&perm);
        }
    }
    Ok(Assignment {
        perm: best,
        total_cost: best_cost,
    })
}

/// Advance to the next permutation in lexicographic order. Returns false once
/// the sequence wraps.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}
