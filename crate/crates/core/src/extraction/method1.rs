use crate::frame::{Frame, SubsetMask};
use crate::mass::MassFunction;
use crate::scalar::Scalar;

use super::{check_frequencies, descending_order, ExtractionError};

/// Consonant mass function from a frequency vector.
///
/// With the positive-frequency outcomes sorted so that
/// `f(θ_1) ≥ … ≥ f(θ_k) > 0`, the foci are the nested prefixes
/// `{θ_1..θ_j}` with mass `(f(θ_j) - f(θ_{j+1})) / f(θ_1)`, and the longest
/// prefix gets `f(θ_k) / f(θ_1)`. Outcomes with zero frequency never enter a
/// focus, so the last focus is the whole frame only when every outcome
/// occurs. The vector need not be normalized.
pub fn method1_consonant<T: Scalar>(frame: &Frame, freq: &[T]) -> Result<MassFunction<T>, ExtractionError> {
    check_frequencies(frame, freq)?;
    let order: Vec<usize> = descending_order(freq)
        .into_iter()
        .filter(|&i| freq[i] > T::zero())
        .collect();
    let top = freq[order[0]];

    let mut prefix = SubsetMask::EMPTY;
    let mut foci = Vec::with_capacity(order.len());
    for (j, &i) in order.iter().enumerate() {
        prefix.insert(i);
        let next = order.get(j + 1).map_or_else(T::zero, |&n| freq[n]);
        foci.push((prefix, (freq[i] - next) / top));
    }
    Ok(MassFunction::new(frame, foci)?)
}
