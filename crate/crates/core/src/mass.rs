//! Mass functions and the belief, plausibility and commonality functionals.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::frame::{Frame, FrameError, SubsetMask};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MassError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("the empty set carries mass")]
    EmptySetMass,
    #[error("mass {mass} on {mask:?} is not positive")]
    NonPositiveMass { mask: SubsetMask, mass: f64 },
    #[error("masses sum to {0}, expected 1")]
    NotNormalized(f64),
}

/// Checks that raw `(subset, mass)` entries form a basic probability
/// assignment on `frame`: nothing on `∅`, every mass positive, total one
/// within [`Scalar::SUM_TOLERANCE`].
pub fn validate_mass<T: Scalar>(frame: &Frame, entries: &[(SubsetMask, T)]) -> Result<(), MassError> {
    let mut total = T::zero();
    for &(mask, mass) in entries {
        frame.check(mask)?;
        if mask.is_empty() {
            return Err(MassError::EmptySetMass);
        }
        if mass <= T::zero() {
            return Err(MassError::NonPositiveMass {
                mask,
                mass: mass.to_f64_lossy(),
            });
        }
        total = total + mass;
    }
    let total = total.to_f64_lossy();
    if (total - 1.0).abs() > T::SUM_TOLERANCE {
        return Err(MassError::NotNormalized(total));
    }
    Ok(())
}

/// Lower and upper probability of a proposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefInterval<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> BeliefInterval<T> {
    pub fn width(&self) -> T {
        self.upper - self.lower
    }
}

/// A basic probability assignment stored sparsely by focal element.
///
/// Immutable once built: the empty set never carries mass, every stored mass
/// is positive and the total is one.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunction<T> {
    frame: Frame,
    focal: BTreeMap<SubsetMask, T>,
}

impl<T: Scalar> MassFunction<T> {
    /// Builds a mass function, merging repeated subsets and dropping exact
    /// zeros. A total within tolerance of one but off by more than rounding
    /// noise is rescaled once.
    pub fn new<I>(frame: &Frame, entries: I) -> Result<Self, MassError>
    where
        I: IntoIterator<Item = (SubsetMask, T)>,
    {
        let mut focal: BTreeMap<SubsetMask, T> = BTreeMap::new();
        for (mask, mass) in entries {
            frame.check(mask)?;
            if mass.is_zero() {
                continue;
            }
            let slot = focal.entry(mask).or_insert_with(T::zero);
            *slot = *slot + mass;
        }
        focal.retain(|_, m| !m.is_zero());
        let flat: Vec<(SubsetMask, T)> = focal.iter().map(|(&k, &v)| (k, v)).collect();
        validate_mass(frame, &flat)?;

        let total = focal.values().fold(T::zero(), |acc, &m| acc + m);
        let drift = (total.to_f64_lossy() - 1.0).abs();
        if drift > (focal.len() as f64 + 1.0) * T::ROUNDING {
            for m in focal.values_mut() {
                *m = *m / total;
            }
        }
        Ok(MassFunction {
            frame: frame.clone(),
            focal,
        })
    }

    /// Builds from `(labels, mass)` pairs.
    pub fn from_labels<S: AsRef<str>>(frame: &Frame, entries: &[(&[S], T)]) -> Result<Self, MassError> {
        let mut masks = Vec::with_capacity(entries.len());
        for (labels, mass) in entries {
            masks.push((frame.subset(labels.iter())?, *mass));
        }
        Self::new(frame, masks)
    }

    /// Total ignorance: `m(θ) = 1`.
    pub fn vacuous(frame: &Frame) -> Self {
        let mut focal = BTreeMap::new();
        focal.insert(frame.theta(), T::one());
        MassFunction {
            frame: frame.clone(),
            focal,
        }
    }

    /// `m(focus) = support`, `m(θ) = 1 - support`.
    pub fn simple_support(frame: &Frame, focus: SubsetMask, support: T) -> Result<Self, MassError> {
        Self::new(frame, [(focus, support), (frame.theta(), T::one() - support)])
    }

    /// Assembles a mass function from parts already known to be valid, such
    /// as the normalized output of a combination. Entries that are not
    /// strictly positive are dropped.
    pub(crate) fn from_parts(frame: &Frame, focal: BTreeMap<SubsetMask, T>) -> Self {
        let focal = focal
            .into_iter()
            .filter(|(k, v)| !k.is_empty() && *v > T::zero())
            .collect();
        MassFunction {
            frame: frame.clone(),
            focal,
        }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// Focal elements with their masses, in increasing mask order.
    pub fn focal(&self) -> impl Iterator<Item = (SubsetMask, T)> + '_ {
        self.focal.iter().map(|(&k, &v)| (k, v))
    }

    pub fn focal_count(&self) -> usize {
        self.focal.len()
    }

    pub fn mass(&self, mask: SubsetMask) -> T {
        self.focal.get(&mask).copied().unwrap_or_else(T::zero)
    }

    pub fn total(&self) -> T {
        self.focal.values().fold(T::zero(), |acc, &m| acc + m)
    }

    /// `Bel(A) = Σ_{B ⊆ A} m(B)`.
    pub fn belief(&self, a: SubsetMask) -> Result<T, FrameError> {
        self.frame.check(a)?;
        Ok(self.sum_where(|b| b.is_subset_of(a)))
    }

    /// `Pl(A) = Σ_{B ∩ A ≠ ∅} m(B) = 1 - Bel(Ā)`.
    pub fn plausibility(&self, a: SubsetMask) -> Result<T, FrameError> {
        self.frame.check(a)?;
        Ok(self.sum_where(|b| b.intersects(a)))
    }

    /// `Q(A) = Σ_{B ⊇ A} m(B)`.
    pub fn commonality(&self, a: SubsetMask) -> Result<T, FrameError> {
        self.frame.check(a)?;
        Ok(self.sum_where(|b| a.is_subset_of(b)))
    }

    pub fn belief_interval(&self, a: SubsetMask) -> Result<BeliefInterval<T>, FrameError> {
        Ok(BeliefInterval {
            lower: self.belief(a)?,
            upper: self.plausibility(a)?,
        })
    }

    fn sum_where(&self, keep: impl Fn(SubsetMask) -> bool) -> T {
        self.focal
            .iter()
            .filter(|(&b, _)| keep(b))
            .fold(T::zero(), |acc, (_, &m)| acc + m)
    }

    /// True iff the focal elements form a chain under inclusion.
    pub fn is_consonant(&self) -> bool {
        let mut foci: Vec<SubsetMask> = self.focal.keys().copied().collect();
        foci.sort_by_key(|m| m.len());
        foci.windows(2).all(|w| w[0].is_subset_of(w[1]))
    }

    /// True iff the only focal element is `θ` with mass one, within `tolerance`.
    pub fn is_vacuous_within(&self, tolerance: f64) -> bool {
        (self.mass(self.frame.theta()).to_f64_lossy() - 1.0).abs() <= tolerance
    }

    /// Dense mass vector indexed by mask bits, length `2^n`.
    pub fn to_dense(&self) -> Vec<T> {
        let mut dense = vec![T::zero(); self.frame.powerset_size()];
        for (&k, &m) in &self.focal {
            dense[k.0 as usize] = m;
        }
        dense
    }

    /// Converts to another scalar type through `f64`.
    pub fn cast<U: Scalar>(&self) -> MassFunction<U> {
        MassFunction {
            frame: self.frame.clone(),
            focal: self
                .focal
                .iter()
                .map(|(&k, &m)| (k, U::from_f64_lossy(m.to_f64_lossy())))
                .collect(),
        }
    }

    /// Largest absolute mass difference over the union of focal sets.
    pub fn max_abs_diff(&self, other: &MassFunction<T>) -> f64 {
        self.focal
            .keys()
            .chain(other.focal.keys())
            .map(|&k| (self.mass(k) - other.mass(k)).abs().to_f64_lossy())
            .fold(0.0, f64::max)
    }
}
