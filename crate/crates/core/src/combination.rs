//! Dempster's rule of combination.
//!
//! Two evaluation routes are provided. The sparse route intersects focal
//! elements pairwise and is cheap when the operands have few foci. The dense
//! route multiplies commonality functions pointwise and recovers masses with a
//! Möbius inversion, which costs `O(k·n·2^n)` for `k` operands regardless of
//! how many foci they carry.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::frame::{FrameError, SubsetMask};
use crate::lattice::{inverse_superset_sums, superset_sums};
use crate::mass::MassFunction;
use crate::scalar::Scalar;

/// Normalization constants at or below this value count as total conflict.
pub const TOTAL_CONFLICT_EPS: f64 = 1e-12;

/// Largest frame the dense route will allocate for.
pub const DENSE_MAX_FRAME: usize = 22;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CombinationError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("nothing to combine")]
    NoOperands,
    #[error("total conflict{}", step.map(|s| format!(" at combination step {s}")).unwrap_or_default())]
    TotalConflict { step: Option<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinationResult<T> {
    pub combined: MassFunction<T>,
    /// Product mass that fell on the empty set before renormalization. For a
    /// chain of combinations this is `1 - Π(1 - k_step)`.
    pub conflict: T,
}

/// Combines two mass functions with Dempster's rule.
pub fn dempster_combine<T: Scalar>(
    m1: &MassFunction<T>,
    m2: &MassFunction<T>,
) -> Result<CombinationResult<T>, CombinationError> {
    m1.frame().ensure_same(m2.frame())?;
    let mut acc: BTreeMap<SubsetMask, T> = BTreeMap::new();
    let mut conflict = T::zero();
    for (a, ma) in m1.focal() {
        for (b, mb) in m2.focal() {
            let c = a.intersection(b);
            let product = ma * mb;
            if c.is_empty() {
                conflict = conflict + product;
            } else {
                let slot = acc.entry(c).or_insert_with(T::zero);
                *slot = *slot + product;
            }
        }
    }
    let norm = T::one() - conflict;
    if norm.to_f64_lossy() <= TOTAL_CONFLICT_EPS {
        return Err(CombinationError::TotalConflict { step: None });
    }
    for v in acc.values_mut() {
        *v = *v / norm;
    }
    Ok(CombinationResult {
        combined: MassFunction::from_parts(m1.frame(), acc),
        conflict,
    })
}

/// Left fold of [`dempster_combine`] in the given order.
pub fn combine_all<T: Scalar>(ms: &[MassFunction<T>]) -> Result<CombinationResult<T>, CombinationError> {
    let (first, rest) = ms.split_first().ok_or(CombinationError::NoOperands)?;
    let mut combined = first.clone();
    let mut retained = T::one();
    for (i, m) in rest.iter().enumerate() {
        let step = dempster_combine(&combined, m).map_err(|e| match e {
            CombinationError::TotalConflict { .. } => CombinationError::TotalConflict { step: Some(i + 1) },
            other => other,
        })?;
        retained = retained * (T::one() - step.conflict);
        combined = step.combined;
    }
    Ok(CombinationResult {
        combined,
        conflict: T::one() - retained,
    })
}

/// Combines through the pointwise product of commonality functions.
///
/// Agrees with [`combine_all`] up to rounding. Frames larger than
/// [`DENSE_MAX_FRAME`] are handed to the sparse route.
pub fn fast_combine_via_commonality<T: Scalar>(
    ms: &[MassFunction<T>],
) -> Result<CombinationResult<T>, CombinationError> {
    let (first, rest) = ms.split_first().ok_or(CombinationError::NoOperands)?;
    if rest.is_empty() {
        return Ok(CombinationResult {
            combined: first.clone(),
            conflict: T::zero(),
        });
    }
    let frame = first.frame();
    for m in rest {
        frame.ensure_same(m.frame())?;
    }
    if frame.len() > DENSE_MAX_FRAME {
        return combine_all(ms);
    }

    let mut product = vec![T::one(); frame.powerset_size()];
    for m in ms {
        let mut q = m.to_dense();
        superset_sums(&mut q);
        for (p, qa) in product.iter_mut().zip(q) {
            *p = *p * qa;
        }
    }
    inverse_superset_sums(&mut product);

    let noise = T::DENSE_NOISE;
    let mut focal = BTreeMap::new();
    let mut norm = T::zero();
    for (bits, &v) in product.iter().enumerate().skip(1) {
        if v.abs().to_f64_lossy() > noise && v > T::zero() {
            focal.insert(SubsetMask(bits as u32), v);
            norm = norm + v;
        }
    }
    if norm.to_f64_lossy() <= TOTAL_CONFLICT_EPS {
        return Err(CombinationError::TotalConflict {
            step: Some(dense_conflict_step(ms)),
        });
    }
    for v in focal.values_mut() {
        *v = *v / norm;
    }
    Ok(CombinationResult {
        combined: MassFunction::from_parts(frame, focal),
        conflict: T::one() - norm,
    })
}

/// Replays the dense combination one operand at a time, renormalizing after
/// each step as the sparse fold does, and returns the first step whose
/// normalization constant vanishes.
fn dense_conflict_step<T: Scalar>(ms: &[MassFunction<T>]) -> usize {
    let mut running = ms[0].to_dense();
    superset_sums(&mut running);
    for (i, m) in ms.iter().enumerate().skip(1) {
        let mut q = m.to_dense();
        superset_sums(&mut q);
        for (r, qa) in running.iter_mut().zip(q) {
            *r = *r * qa;
        }
        inverse_superset_sums(&mut running);
        running[0] = T::zero();
        let norm = running
            .iter()
            .filter(|v| v.abs().to_f64_lossy() > T::DENSE_NOISE && **v > T::zero())
            .fold(T::zero(), |acc, &v| acc + v);
        if norm.to_f64_lossy() <= TOTAL_CONFLICT_EPS {
            return i;
        }
        for v in running.iter_mut() {
            *v = *v / norm;
        }
        superset_sums(&mut running);
    }
    ms.len() - 1
}

/// True when the dense route is expected to be cheaper: the product of the
/// operands' focal counts exceeds `n·2^n`.
pub fn prefers_dense<T: Scalar>(ms: &[MassFunction<T>]) -> bool {
    let Some(first) = ms.first() else {
        return false;
    };
    let n = first.frame().len();
    if n > DENSE_MAX_FRAME || ms.len() < 2 {
        return false;
    }
    let budget = (n as f64) * (first.frame().powerset_size() as f64);
    let mut product = 1.0f64;
    for m in ms {
        product *= m.focal_count() as f64;
        if product > budget {
            return true;
        }
    }
    false
}

/// Combines with whichever route [`prefers_dense`] selects.
pub fn combine<T: Scalar>(ms: &[MassFunction<T>]) -> Result<CombinationResult<T>, CombinationError> {
    if prefers_dense(ms) {
        fast_combine_via_commonality(ms)
    } else {
        combine_all(ms)
    }
}
