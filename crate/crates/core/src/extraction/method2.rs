use crate::frame::{Frame, SubsetMask};
use crate::mass::MassFunction;
use crate::scalar::Scalar;

use super::{check_distribution, descending_order, ExtractionError};

/// Where the mass left over after the support set goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Remainder {
    /// Variant 2A: the set of remaining outcomes with positive frequency.
    ComplementSet,
    /// Variant 2B: the whole frame.
    Theta,
}

/// Simple-support search over a frequency distribution.
///
/// Walking outcomes by descending frequency (ties by frame index), a single
/// outcome above one half becomes the support set `B` on its own; otherwise
/// outcomes are added to `B` until its total exceeds one half. Outcomes tied
/// with the last one added are absorbed too. The rest of the mass goes to the
/// remaining positive-frequency outcomes or to `θ`, depending on
/// `remainder`. If nothing positive is left, `B` takes everything.
pub fn method2<T: Scalar>(frame: &Frame, freq: &[T], remainder: Remainder) -> Result<MassFunction<T>, ExtractionError> {
    check_distribution(frame, freq)?;
    let order = descending_order(freq);
    let half = T::one() / (T::one() + T::one());

    let mut support = SubsetMask::EMPTY;
    let mut support_mass = T::zero();
    let mut next = 0;
    if freq[order[0]] > half {
        support.insert(order[0]);
        support_mass = freq[order[0]];
        next = 1;
    } else {
        while support_mass <= half && next < order.len() {
            support.insert(order[next]);
            support_mass = support_mass + freq[order[next]];
            next += 1;
        }
    }
    let last = freq[order[next - 1]];
    while next < order.len() && freq[order[next]] == last {
        support.insert(order[next]);
        support_mass = support_mass + freq[order[next]];
        next += 1;
    }

    let mut rest = SubsetMask::EMPTY;
    let mut rest_mass = T::zero();
    for &i in &order[next..] {
        if freq[i] > T::zero() {
            rest.insert(i);
            rest_mass = rest_mass + freq[i];
        }
    }

    let foci = if rest.is_empty() {
        vec![(support, support_mass + rest_mass)]
    } else {
        let target = match remainder {
            Remainder::ComplementSet => rest,
            Remainder::Theta => frame.theta(),
        };
        vec![(support, support_mass), (target, rest_mass)]
    };
    Ok(MassFunction::new(frame, foci)?)
}
