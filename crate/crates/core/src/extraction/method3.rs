use std::fmt;
use std::str::FromStr;

use crate::frame::{Frame, SubsetMask};
use crate::mass::MassFunction;
use crate::scalar::Scalar;

use super::{check_frequencies, ExtractionError};

/// Largest frame for which every subset is materialized.
pub const DENSE_EXTRACTION_MAX_FRAME: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StrataNorm {
    /// Divide every score by the total over all subsets.
    #[default]
    Global,
    /// Normalize within each subset size, then weight the non-empty sizes
    /// equally.
    SizeStratified,
}

/// Score given to the whole frame before normalizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThetaRaw {
    Zero,
    #[default]
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Method3Variant {
    pub norm: StrataNorm,
    pub theta: ThetaRaw,
}

impl fmt::Display for Method3Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let norm = match self.norm {
            StrataNorm::Global => "global",
            StrataNorm::SizeStratified => "stratified",
        };
        let theta = match self.theta {
            ThetaRaw::Zero => "zero",
            ThetaRaw::One => "one",
        };
        write!(f, "{norm}-{theta}")
    }
}

impl FromStr for Method3Variant {
    type Err = ExtractionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ExtractionError::UnknownMethod(format!("3/{s}"));
        let (norm, theta) = s.split_once('-').ok_or_else(bad)?;
        let norm = match norm {
            "global" => StrataNorm::Global,
            "stratified" => StrataNorm::SizeStratified,
            _ => return Err(bad()),
        };
        let theta = match theta {
            "zero" => ThetaRaw::Zero,
            "one" => ThetaRaw::One,
            _ => return Err(bad()),
        };
        Ok(Method3Variant { norm, theta })
    }
}

/// Assigns every non-empty subset the sum of its members' frequencies, sets
/// the frame's own score to zero or one, and normalizes.
pub fn method3<T: Scalar>(
    frame: &Frame,
    freq: &[T],
    variant: Method3Variant,
) -> Result<MassFunction<T>, ExtractionError> {
    check_frequencies(frame, freq)?;
    let n = frame.len();
    if n > DENSE_EXTRACTION_MAX_FRAME {
        return Err(ExtractionError::FrameTooLarge {
            n,
            max: DENSE_EXTRACTION_MAX_FRAME,
        });
    }
    let size = frame.powerset_size();
    let theta = size - 1;

    // raw[A] = raw[A minus its lowest member] + f(lowest member)
    let mut raw = vec![T::zero(); size];
    for bits in 1..size {
        let low = bits.trailing_zeros() as usize;
        raw[bits] = raw[bits & (bits - 1)] + freq[low];
    }
    raw[theta] = match variant.theta {
        ThetaRaw::Zero => T::zero(),
        ThetaRaw::One => T::one(),
    };

    let weights: Vec<T> = match variant.norm {
        StrataNorm::Global => {
            let total = raw.iter().fold(T::zero(), |a, &b| a + b);
            vec![total; n + 1]
        }
        StrataNorm::SizeStratified => {
            let mut per_size = vec![T::zero(); n + 1];
            for (bits, &v) in raw.iter().enumerate() {
                per_size[bits.count_ones() as usize] = per_size[bits.count_ones() as usize] + v;
            }
            let strata = per_size.iter().filter(|s| **s > T::zero()).count();
            let strata = T::from_count(strata as u64);
            per_size.into_iter().map(|s| s * strata).collect()
        }
    };
    if weights.iter().all(|w| w.is_zero()) {
        return Err(ExtractionError::AllRawZero);
    }

    let foci = raw
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, v)| **v > T::zero())
        .map(|(bits, &v)| {
            let mask = SubsetMask(bits as u32);
            (mask, v / weights[mask.len() as usize])
        });
    Ok(MassFunction::new(frame, foci)?)
}
