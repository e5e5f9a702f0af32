//! Numeric abstraction shared by every mass-function computation.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// A number type that masses, beliefs and frequencies can be expressed in.
///
/// Implemented for `f64`, `f32` and the exact [`Rational`] type. Tolerances
/// are expressed in `f64` so that the same acceptance thresholds can be
/// applied regardless of the storage type.
pub trait Scalar:
    Num + Signed + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Allowed deviation of a mass total from one.
    const SUM_TOLERANCE: f64;

    /// Magnitude below which a value produced by a dense lattice transform
    /// is treated as cancellation noise and dropped.
    const DENSE_NOISE: f64;

    /// Rounding slack of a single arithmetic operation.
    const ROUNDING: f64;

    fn from_count(count: u64) -> Self {
        Self::from_u64(count).expect("count representable in scalar type")
    }

    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).expect("finite value representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const SUM_TOLERANCE: f64 = 1e-9;
    const DENSE_NOISE: f64 = 1e-14;
    const ROUNDING: f64 = f64::EPSILON;
}

impl Scalar for f32 {
    const SUM_TOLERANCE: f64 = 1e-5;
    const DENSE_NOISE: f64 = 1e-6;
    const ROUNDING: f64 = f32::EPSILON as f64;
}

/// Exact rational arithmetic. Overflows on long combination chains, so it is
/// meant for small frames and reference computations.
pub type Rational = Ratio<i64>;

impl Scalar for Rational {
    const SUM_TOLERANCE: f64 = 1e-9;
    const DENSE_NOISE: f64 = 0.0;
    const ROUNDING: f64 = 0.0;
}
