//! Numerical theory diagnostics on decoders and generators: compositional
//! contrast, influence-set disjointness, irreducibility rank checks, and
//! cross-slot Hessian blocks. All Jacobians come from central finite
//! differences over the function's input coordinates.

use super::MetricsError;
use crate::linalg::numerical_rank;
use crate::numdiff::jacobian_fd;
use crate::rng::ChaCha12Rng;
use rand::Rng;

const JACOBIAN_STEP: f64 = 1e-4;
const HESSIAN_STEP: f64 = 1e-3;
const RANK_REL_TOL: f64 = 1e-8;

/// Per-slot norms of one Jacobian row.
fn slot_norms(row: &[f64], slots: usize, slot_dim: usize) -> Vec<f64> {
    (0..slots)
        .map(|k| {
            row[k * slot_dim..(k + 1) * slot_dim]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Compositional contrast at `z`: sum over outputs of the pairwise products
/// of per-slot gradient norms. Zero iff the function is compositional at `z`
/// up to the numerical floor.
pub fn comp_contrast<F>(f: &F, z: &[f64], slots: usize, slot_dim: usize) -> Result<f64, MetricsError>
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    let jac = jacobian_fd(f, z, JACOBIAN_STEP)?;
    let mut total = 0.0;
    for row in &jac {
        let norms = slot_norms(row, slots, slot_dim);
        for k in 0..slots {
            for j in k + 1..slots {
                total += norms[k] * norms[j];
            }
        }
    }
    Ok(total)
}

/// Pixel indices whose partial norm w.r.t. each slot exceeds the threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluenceSets {
    pub per_slot: Vec<Vec<usize>>,
}

/// Influence-set disjointness: true iff no output coordinate responds to more
/// than one slot above threshold `tau` (default 1e-8).
pub fn compositionality_check<F>(
    f: &F,
    z: &[f64],
    slots: usize,
    slot_dim: usize,
    tau: f64,
) -> Result<(bool, InfluenceSets), MetricsError>
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    let jac = jacobian_fd(f, z, JACOBIAN_STEP)?;
    let mut per_slot = vec![Vec::new(); slots];
    for (n, row) in jac.iter().enumerate() {
        let norms = slot_norms(row, slots, slot_dim);
        for (k, &norm) in norms.iter().enumerate() {
            if norm > tau {
                per_slot[k].push(n);
            }
        }
    }
    let mut seen = vec![false; jac.len()];
    let mut disjoint = true;
    'outer: for set in &per_slot {
        for &n in set {
            if seen[n] {
                disjoint = false;
                break 'outer;
            }
            seen[n] = true;
        }
    }
    Ok((disjoint, InfluenceSets { per_slot }))
}

#[derive(Debug, Clone, Copy)]
pub struct IrreducibilityOptions {
    pub tau: f64,
    /// Random bipartitions tried per slot in addition to singleton splits.
    pub random_partitions: usize,
    /// Enumerate all bipartitions when the influence set is at most this big.
    pub exhaustive_limit: Option<usize>,
}

impl Default for IrreducibilityOptions {
    fn default() -> Self {
        Self {
            tau: 1e-8,
            random_partitions: 64,
            exhaustive_limit: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IrreducibilityReport {
    pub passed: bool,
    /// Slots whose influence set had fewer than two pixels (vacuously true).
    pub vacuous_slots: Vec<usize>,
    pub influence_sizes: Vec<usize>,
}

/// Rank inequality over bipartitions of each slot's influence set:
/// rank(J_S1) + rank(J_S2) > rank(J_I) must hold strictly for every
/// sampled nontrivial partition (pixels of one object share information).
pub fn irreducibility_check<F>(
    f: &F,
    z: &[f64],
    slots: usize,
    slot_dim: usize,
    opts: &IrreducibilityOptions,
    rng: &mut ChaCha12Rng,
) -> Result<IrreducibilityReport, MetricsError>
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    let jac = jacobian_fd(f, z, JACOBIAN_STEP)?;
    let cols = slots * slot_dim;
    let (_, influence) = compositionality_check(f, z, slots, slot_dim, opts.tau)?;

    let rank_of = |pixels: &[usize]| -> usize {
        let mut sub = Vec::with_capacity(pixels.len() * cols);
        for &p in pixels {
            sub.extend_from_slice(&jac[p]);
        }
        numerical_rank(&sub, pixels.len(), cols, RANK_REL_TOL)
    };

    let mut vacuous = Vec::new();
    let mut passed = true;
    let mut sizes = Vec::with_capacity(slots);
    for (k, set) in influence.per_slot.iter().enumerate() {
        sizes.push(set.len());
        if set.len() < 2 {
            vacuous.push(k);
            continue;
        }
        let full_rank = rank_of(set);
        let check = |s1: &[usize], s2: &[usize]| -> bool {
            rank_of(s1) + rank_of(s2) > full_rank
        };
        let exhaustive = opts
            .exhaustive_limit
            .map(|lim| set.len() <= lim)
            .unwrap_or(false);
        if exhaustive {
            // all nontrivial unordered bipartitions: fix element 0 in s1
            let n = set.len();
            for mask in 1..(1u64 << (n - 1)) {
                let mut s1 = vec![set[0]];
                let mut s2 = Vec::new();
                for i in 1..n {
                    if mask & (1 << (i - 1)) != 0 {
                        s1.push(set[i]);
                    } else {
                        s2.push(set[i]);
                    }
                }
                if s2.is_empty() {
                    continue;
                }
                if !check(&s1, &s2) {
                    passed = false;
                }
            }
        } else {
            for i in 0..set.len() {
                let s1 = vec![set[i]];
                let s2: Vec<usize> = set
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, &p)| p)
                    .collect();
                if !check(&s1, &s2) {
                    passed = false;
                }
            }
            for _ in 0..opts.random_partitions {
                let mut s1 = Vec::new();
                let mut s2 = Vec::new();
                for &p in set {
                    if rng.gen::<bool>() {
                        s1.push(p);
                    } else {
                        s2.push(p);
                    }
                }
                if s1.is_empty() || s2.is_empty() {
                    continue;
                }
                if !check(&s1, &s2) {
                    passed = false;
                }
            }
        }
    }
    Ok(IrreducibilityReport {
        passed,
        vacuous_slots: vacuous,
        influence_sizes: sizes,
    })
}

/// Max cross-slot second derivative magnitude via second-order central
/// differences: max over outputs and coordinate pairs from different slots.
pub fn hessian_cross_check<F>(
    f: &F,
    z: &[f64],
    slots: usize,
    slot_dim: usize,
) -> Result<f64, MetricsError>
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    let h = HESSIAN_STEP;
    let mut work = z.to_vec();
    let mut eval = |di: usize, si: f64, dj: usize, sj: f64| -> Vec<f64> {
        work[di] += si * h;
        work[dj] += sj * h;
        let out = f(&work);
        work[di] -= si * h;
        work[dj] -= sj * h;
        out
    };
    let mut max_cross = 0.0f64;
    for k in 0..slots {
        for l in k + 1..slots {
            for a in 0..slot_dim {
                for b in 0..slot_dim {
                    let i = k * slot_dim + a;
                    let j = l * slot_dim + b;
                    let pp = eval(i, 1.0, j, 1.0);
                    let pm = eval(i, 1.0, j, -1.0);
                    let mp = eval(i, -1.0, j, 1.0);
                    let mm = eval(i, -1.0, j, -1.0);
                    for n in 0..pp.len() {
                        let d2 = (pp[n] - pm[n] - mp[n] + mm[n]) / (4.0 * h * h);
                        max_cross = max_cross.max(d2.abs());
                    }
                }
            }
        }
    }
    Ok(max_cross)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn contrast_zero_for_slotwise_identity() {
        // f(z1, z2) = (z1, z2) with one dim per slot
        let f = |z: &[f64]| vec![z[0], z[1]];
        let c = comp_contrast(&f, &[0.4, -0.2], 2, 1).unwrap();
        assert!(c.abs() < 1e-12, "contrast {c}");
    }

    #[test]
    fn contrast_one_for_scalar_sum() {
        let f = |z: &[f64]| vec![z[0] + z[1]];
        let c = comp_contrast(&f, &[0.1, 0.9], 2, 1).unwrap();
        assert!((c - 1.0).abs() < 1e-8, "contrast {c}");
    }

    #[test]
    fn contrast_six_for_product_pair() {
        // f(z1, z2) = (z1 z2, z1) at (2, 3): |3| * |2| + |1| * |0| = 6
        let f = |z: &[f64]| vec![z[0] * z[1], z[0]];
        let c = comp_contrast(&f, &[2.0, 3.0], 2, 1).unwrap();
        assert!((c - 6.0).abs() < 1e-6, "contrast {c}");
    }

    #[test]
    fn compositionality_examples() {
        let add = |z: &[f64]| vec![z[0] + z[1]];
        let (ok, _) = compositionality_check(&add, &[0.2, 0.3], 2, 1, 1e-8).unwrap();
        assert!(!ok);
        let constant = |_: &[f64]| vec![1.0, 2.0];
        let (ok, sets) = compositionality_check(&constant, &[0.2, 0.3], 2, 1, 1e-8).unwrap();
        assert!(ok);
        assert!(sets.per_slot.iter().all(|s| s.is_empty()));
    }

    #[test]
    fn irreducibility_passes_on_duplicated_pixels() {
        // Slot drives two identical pixels: ranks 1 + 1 > 1 holds.
        let f = |z: &[f64]| vec![z[0], z[0], z[1] * 2.0, z[1] * 2.0];
        let mut rng = rng::stream(1, "diag-test");
        let rep = irreducibility_check(
            &f,
            &[0.5, 0.5],
            2,
            1,
            &IrreducibilityOptions::default(),
            &mut rng,
        )
        .unwrap();
        assert!(rep.passed);
        assert!(rep.vacuous_slots.is_empty());
    }

    #[test]
    fn irreducibility_fails_on_independent_pixels() {
        // Slot 0 (2 dims) drives two pixels through independent coordinates:
        // 1 + 1 = rank 2, the strict inequality fails.
        let f = |z: &[f64]| vec![z[0], z[1], z[2] + z[3], z[2] + z[3]];
        let mut rng = rng::stream(2, "diag-test");
        let rep = irreducibility_check(
            &f,
            &[0.5, 0.5, 0.5, 0.5],
            2,
            2,
            &IrreducibilityOptions::default(),
            &mut rng,
        )
        .unwrap();
        assert!(!rep.passed);
    }

    #[test]
    fn irreducibility_vacuous_on_single_pixel() {
        let f = |z: &[f64]| vec![z[0], z[1]];
        let mut rng = rng::stream(3, "diag-test");
        let rep = irreducibility_check(
            &f,
            &[0.5, 0.5],
            2,
            1,
            &IrreducibilityOptions::default(),
            &mut rng,
        )
        .unwrap();
        assert!(rep.passed);
        assert_eq!(rep.vacuous_slots, vec![0, 1]);
    }

    #[test]
    fn hessian_cross_detects_product_coupling() {
        let f = |z: &[f64]| vec![z[0] * z[1]];
        let m = hessian_cross_check(&f, &[0.3, 0.8], 2, 1).unwrap();
        assert!((m - 1.0).abs() < 1e-6, "cross second derivative {m}");
    }

    #[test]
    fn hessian_cross_zero_for_additive_function() {
        let f = |z: &[f64]| vec![z[0] * z[0] + (z[1] - 1.0) * (z[1] - 1.0)];
        let m = hessian_cross_check(&f, &[0.3, 0.8], 2, 1).unwrap();
        assert!(m < 1e-9, "cross second derivative {m}");
    }
}
