//! In-place transforms over the subset lattice of a frame.
//!
//! All functions take a dense vector of length `2^n` indexed by mask bits and
//! run in `O(n·2^n)`.

use crate::scalar::Scalar;

fn for_each_pair<T: Scalar>(values: &mut [T], mut step: impl FnMut(&mut T, &mut T)) {
    let len = values.len();
    assert!(len.is_power_of_two(), "dense vector length must be a power of two");
    let mut half = 1;
    while half < len {
        for block in values.chunks_exact_mut(half * 2) {
            let (without, with) = block.split_at_mut(half);
            for (lo, hi) in without.iter_mut().zip(with) {
                step(lo, hi);
            }
        }
        half *= 2;
    }
}

/// `v[A] ← Σ_{B ⊆ A} v[B]` (mass to belief when `v` holds masses).
pub fn subset_sums<T: Scalar>(values: &mut [T]) {
    for_each_pair(values, |lo, hi| *hi = *hi + *lo);
}

/// Inverse of [`subset_sums`].
pub fn inverse_subset_sums<T: Scalar>(values: &mut [T]) {
    for_each_pair(values, |lo, hi| *hi = *hi - *lo);
}

/// `v[A] ← Σ_{B ⊇ A} v[B]` (mass to commonality when `v` holds masses).
pub fn superset_sums<T: Scalar>(values: &mut [T]) {
    for_each_pair(values, |lo, hi| *lo = *lo + *hi);
}

/// Inverse of [`superset_sums`].
pub fn inverse_superset_sums<T: Scalar>(values: &mut [T]) {
    for_each_pair(values, |lo, hi| *lo = *lo - *hi);
}
