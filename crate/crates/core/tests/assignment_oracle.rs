//! Hungarian solver against the exhaustive oracle: cost equality and
//! tie-break permutation equality on random matrices of every size up to 7.

use proptest::prelude::*;
use rand::Rng;
use slotlab::assignment::{brute_force_assignment, hungarian, CostMatrix};
use slotlab::rng;

#[test]
fn hungarian_matches_brute_force_on_random_matrices() {
    for n in 1..=7usize {
        let mut rng = rng::stream(n as u64, "assignment/random");
        for case in 0..1000 {
            let costs: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let c = CostMatrix::new(n, costs).unwrap();
            let fast = hungarian(&c).unwrap();
            let slow = brute_force_assignment(&c).unwrap();
            assert_eq!(
                fast.total_cost, slow.total_cost,
                "n={n} case={case}: cost mismatch"
            );
            assert_eq!(
                fast.perm, slow.perm,
                "n={n} case={case}: tie-break permutation mismatch"
            );
        }
    }
}

#[test]
fn tie_heavy_matrices_agree_with_oracle() {
    // Small integer-valued costs force plenty of exact ties.
    for n in 2..=6usize {
        let mut rng = rng::stream(n as u64, "assignment/ties");
        for case in 0..300 {
            let costs: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0..3) as f64).collect();
            let c = CostMatrix::new(n, costs).unwrap();
            let fast = hungarian(&c).unwrap();
            let slow = brute_force_assignment(&c).unwrap();
            assert_eq!(fast.perm, slow.perm, "n={n} case={case} (tied costs)");
            assert_eq!(fast.total_cost, slow.total_cost);
        }
    }
}

#[test]
fn identical_inputs_give_identical_outputs() {
    let mut rng = rng::stream(9, "assignment/determinism");
    let costs: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c = CostMatrix::new(5, costs).unwrap();
    let a = hungarian(&c).unwrap();
    let b = hungarian(&c).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.total_cost.to_bits(), b.total_cost.to_bits());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    /// Adding a constant to one full row shifts the cost by that constant and
    /// leaves the argmin permutation unchanged.
    #[test]
    fn row_shift_preserves_argmin(
        values in proptest::collection::vec(-5.0f64..5.0, 16),
        row in 0usize..4,
        shift in -3.0f64..3.0,
    ) {
        let n = 4;
        let c = CostMatrix::new(n, values.clone()).unwrap();
        let base = hungarian(&c).unwrap();
        let mut shifted = values;
        for col in 0..n {
            shifted[row * n + col] += shift;
        }
        let c2 = CostMatrix::new(n, shifted).unwrap();
        let moved = hungarian(&c2).unwrap();
        prop_assert_eq!(&base.perm, &moved.perm);
        prop_assert!((moved.total_cost - base.total_cost - shift).abs() < 1e-9);
    }

    /// Same for columns.
    #[test]
    fn col_shift_preserves_argmin(
        values in proptest::collection::vec(-5.0f64..5.0, 16),
        col in 0usize..4,
        shift in -3.0f64..3.0,
    ) {
        let n = 4;
        let c = CostMatrix::new(n, values.clone()).unwrap();
        let base = hungarian(&c).unwrap();
        let mut shifted = values;
        for row in 0..n {
            shifted[row * n + col] += shift;
        }
        let c2 = CostMatrix::new(n, shifted).unwrap();
        let moved = hungarian(&c2).unwrap();
        prop_assert_eq!(&base.perm, &moved.perm);
        prop_assert!((moved.total_cost - base.total_cost - shift).abs() < 1e-9);
    }

    /// The returned cost always equals the row-fold sum of the permutation.
    #[test]
    fn total_cost_is_consistent(values in proptest::collection::vec(-5.0f64..5.0, 9)) {
        let c = CostMatrix::new(3, values).unwrap();
        let a = hungarian(&c).unwrap();
        let fold: f64 = a.perm.iter().enumerate().fold(0.0, |acc, (r, &col)| acc + c.at(r, col));
        prop_assert_eq!(a.total_cost.to_bits(), fold.to_bits());
    }
}
