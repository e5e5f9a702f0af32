//! Evidential reasoning over tabulated lab-parameter cases.
//!
//! Belief functions are learned from case data as conditional outcome
//! frequencies per `(parameter, region)` evidence item, optionally overridden
//! by expert assignments, and combined per case with Dempster's rule to
//! produce a diagnosis together with a `[Bel, Pl]` interval for every
//! outcome.
//!
//! The numeric core ([`MassFunction`], [`combination`], [`extraction`],
//! [`expert`]) is generic over [`Scalar`], so the same code runs in `f64`,
//! `f32` or exact [`Rational`] arithmetic. The aliases at the crate root fix
//! the scalar for the common cases.

pub mod bpa;
pub mod combination;
pub mod eval;
pub mod expert;
pub mod extraction;
pub mod frame;
pub mod ingest;
pub mod json;
pub mod lattice;
pub mod mass;
pub mod pipeline;
pub mod prune;
pub mod scalar;
pub mod synth;

pub use bpa::{BpaSet, EvidenceItemId};
pub use combination::{combine, combine_all, dempster_combine, fast_combine_via_commonality, CombinationResult};
pub use frame::{Frame, SubsetMask};
pub use ingest::{CaseRecord, ReferenceIntervals, RegionClass};
pub use mass::{BeliefInterval, MassFunction};
pub use scalar::{Rational, Scalar};

/// Mass function in double precision, the working type of the pipeline.
pub type Mass = MassFunction<f64>;
/// Mass function in exact rational arithmetic.
pub type ExactMass = MassFunction<Rational>;
/// Mass function in single precision.
pub type Mass32 = MassFunction<f32>;
pub type Interval64 = BeliefInterval<f64>;
pub type Bpa = BpaSet<f64>;
pub type ExactBpa = BpaSet<Rational>;
pub type ExpertTable = expert::ExpertBpaTable<f64>;
