//! Conditional frequency tables and their conversion to mass functions.
//!
//! Three conversions are offered:
//!
//! - [`method1_consonant`]: the consonant support function whose singleton
//!   plausibilities are the frequencies scaled by the largest one.
//! - [`method2`]: a simple-support search that grows the most frequent
//!   outcomes into a set holding more than half the frequency, with the
//!   remainder placed on the other observed outcomes or on the frame.
//! - [`method3`]: a dense assignment over every subset followed by one of
//!   several normalizations.

mod method1;
mod method2;
mod method3;

pub use method1::method1_consonant;
pub use method2::{method2, Remainder};
pub use method3::{method3, Method3Variant, StrataNorm, ThetaRaw};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bpa::{BpaSet, EvidenceItemId};
use crate::frame::Frame;
use crate::ingest::{discretize, CaseRecord, IngestError, ReferenceIntervals};
use crate::mass::{MassError, MassFunction};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("frequency vector has {found} entries, frame has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("frequency vector has no positive entry")]
    AllZero,
    #[error("frequency {0} is negative")]
    NegativeFrequency(f64),
    #[error("frequencies sum to {0}, expected 1")]
    NotADistribution(f64),
    #[error("every subset score is zero after the frame override")]
    AllRawZero,
    #[error("dense extraction supports frames of at most {max} outcomes, got {n}")]
    FrameTooLarge { n: usize, max: usize },
    #[error("case {case_id:?} has outcome {label:?} outside the frame")]
    UnknownOutcome { case_id: String, label: String },
    #[error("parameter {0:?} has no reference interval")]
    MissingInterval(String),
    #[error("unknown extraction method {0:?}")]
    UnknownMethod(String),
    #[error("{item}: {source}")]
    Item {
        item: EvidenceItemId,
        #[source]
        source: Box<ExtractionError>,
    },
    #[error(transparent)]
    Mass(#[from] MassError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Outcome counts among the cases exhibiting one evidence item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyEntry {
    pub counts: Vec<u64>,
    pub support: u64,
}

impl FrequencyEntry {
    /// `counts[i] / support`, divided at read time.
    pub fn frequencies<T: Scalar>(&self) -> Vec<T> {
        let support = T::from_count(self.support);
        self.counts.iter().map(|&c| T::from_count(c) / support).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    frame: Frame,
    entries: BTreeMap<EvidenceItemId, FrequencyEntry>,
}

#[derive(Serialize, Deserialize)]
struct FrequencyRowDoc {
    parameter: String,
    class: crate::ingest::RegionClass,
    support: u64,
    counts: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct FrequencyTableDoc {
    frame: Vec<String>,
    entries: Vec<FrequencyRowDoc>,
}

impl FrequencyTable {
    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn get(&self, id: &EvidenceItemId) -> Option<&FrequencyEntry> {
        self.entries.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EvidenceItemId, &FrequencyEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Drops entries supported by fewer than `floor` cases.
    pub fn with_min_support(mut self, floor: u64) -> Self {
        self.entries.retain(|_, e| e.support >= floor);
        self
    }

    pub fn to_json(&self) -> String {
        let doc = FrequencyTableDoc {
            frame: self.frame.labels().to_vec(),
            entries: self
                .entries
                .iter()
                .map(|(id, e)| FrequencyRowDoc {
                    parameter: id.parameter.clone(),
                    class: id.class,
                    support: e.support,
                    counts: e.counts.clone(),
                })
                .collect(),
        };
        crate::json::to_string_shallow(&doc, 3)
    }
}

/// Counts, for every `(parameter, class)` seen in at least one case, how
/// often each outcome co-occurs with it. Missing values contribute nothing.
pub fn build_frequency_table(
    cases: &[CaseRecord],
    intervals: &ReferenceIntervals,
    frame: &Frame,
) -> Result<FrequencyTable, ExtractionError> {
    let mut entries: BTreeMap<EvidenceItemId, FrequencyEntry> = BTreeMap::new();
    for case in cases {
        let outcome = frame
            .index_of(&case.outcome)
            .ok_or_else(|| ExtractionError::UnknownOutcome {
                case_id: case.case_id.clone(),
                label: case.outcome.clone(),
            })?;
        for (param, value) in &case.values {
            let interval = intervals
                .get(param)
                .ok_or_else(|| ExtractionError::MissingInterval(param.clone()))?;
            let Some(value) = value else { continue };
            let class = discretize(*value, interval)?;
            let entry = entries
                .entry(EvidenceItemId::new(param.clone(), class))
                .or_insert_with(|| FrequencyEntry {
                    counts: vec![0; frame.len()],
                    support: 0,
                });
            entry.counts[outcome] += 1;
            entry.support += 1;
        }
    }
    Ok(FrequencyTable {
        frame: frame.clone(),
        entries,
    })
}

/// Which conversion turns a frequency vector into a mass function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionMethod {
    Consonant,
    SimpleSupport(Remainder),
    AllSubsets(Method3Variant),
}

impl fmt::Display for ExtractionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractionMethod::Consonant => f.write_str("1"),
            ExtractionMethod::SimpleSupport(Remainder::ComplementSet) => f.write_str("2a"),
            ExtractionMethod::SimpleSupport(Remainder::Theta) => f.write_str("2b"),
            ExtractionMethod::AllSubsets(v) => write!(f, "3/{v}"),
        }
    }
}

impl FromStr for ExtractionMethod {
    type Err = ExtractionError;

    /// Accepts `1`, `2a`, `2b`, `3` and `3/<variant>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" => Ok(ExtractionMethod::Consonant),
            "2a" => Ok(ExtractionMethod::SimpleSupport(Remainder::ComplementSet)),
            "2b" => Ok(ExtractionMethod::SimpleSupport(Remainder::Theta)),
            "3" => Ok(ExtractionMethod::AllSubsets(Method3Variant::default())),
            other => match other.strip_prefix("3/") {
                Some(v) => Ok(ExtractionMethod::AllSubsets(v.parse()?)),
                None => Err(ExtractionError::UnknownMethod(other.to_owned())),
            },
        }
    }
}

/// Applies `method` to one frequency vector.
pub fn extract_one<T: Scalar>(
    frame: &Frame,
    freq: &[T],
    method: ExtractionMethod,
) -> Result<MassFunction<T>, ExtractionError> {
    match method {
        ExtractionMethod::Consonant => method1_consonant(frame, freq),
        ExtractionMethod::SimpleSupport(r) => method2(frame, freq, r),
        ExtractionMethod::AllSubsets(v) => method3(frame, freq, v),
    }
}

/// Converts every entry of `table` with `method`.
pub fn extract_table<T: Scalar>(
    table: &FrequencyTable,
    method: ExtractionMethod,
) -> Result<BpaSet<T>, ExtractionError> {
    let mut set = BpaSet::new(table.frame(), method.to_string());
    for (id, entry) in table.iter() {
        let freq = entry.frequencies::<T>();
        let mass = extract_one(table.frame(), &freq, method).map_err(|e| ExtractionError::Item {
            item: id.clone(),
            source: Box::new(e),
        })?;
        set.insert(id.clone(), mass).expect("table frame is shared");
    }
    Ok(set)
}

/// Rejects vectors of the wrong length, negative entries, or no positive
/// entry.
pub(crate) fn check_frequencies<T: Scalar>(frame: &Frame, freq: &[T]) -> Result<(), ExtractionError> {
    if freq.len() != frame.len() {
        return Err(ExtractionError::LengthMismatch {
            expected: frame.len(),
            found: freq.len(),
        });
    }
    if let Some(neg) = freq.iter().find(|f| **f < T::zero()) {
        return Err(ExtractionError::NegativeFrequency(neg.to_f64_lossy()));
    }
    if !freq.iter().any(|f| *f > T::zero()) {
        return Err(ExtractionError::AllZero);
    }
    Ok(())
}

/// As [`check_frequencies`], and additionally requires a total of one.
pub(crate) fn check_distribution<T: Scalar>(frame: &Frame, freq: &[T]) -> Result<(), ExtractionError> {
    check_frequencies(frame, freq)?;
    let total = freq.iter().fold(T::zero(), |a, &b| a + b).to_f64_lossy();
    if (total - 1.0).abs() > T::SUM_TOLERANCE {
        return Err(ExtractionError::NotADistribution(total));
    }
    Ok(())
}

/// Outcome indices by descending frequency, ties by ascending index.
pub(crate) fn descending_order<T: Scalar>(freq: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..freq.len()).collect();
    order.sort_by(|&i, &j| {
        freq[j]
            .partial_cmp(&freq[i])
            .expect("frequencies are comparable")
            .then(i.cmp(&j))
    });
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RegionClass;
    use crate::scalar::Rational;

    fn case(id: &str, outcome: &str, aalb: Option<f64>) -> CaseRecord {
        CaseRecord {
            case_id: id.into(),
            outcome: outcome.into(),
            values: [("AALB".to_string(), aalb)].into_iter().collect(),
        }
    }

    fn intervals() -> ReferenceIntervals {
        let mut iv = ReferenceIntervals::new();
        iv.insert("AALB", 25.0, 40.0).unwrap();
        iv
    }

    #[test]
    fn degenerate_table() {
        let frame = Frame::new(["a", "b", "c"]).unwrap();
        let cases: Vec<_> = (0..10).map(|i| case(&format!("c{i}"), "a", Some(10.0))).collect();
        let table = build_frequency_table(&cases, &intervals(), &frame).unwrap();
        let e = table.get(&EvidenceItemId::new("AALB", RegionClass::Below)).unwrap();
        assert_eq!(e.support, 10);
        assert_eq!(e.frequencies::<f64>(), vec![1.0, 0.0, 0.0]);
        assert_eq!(table.len(), 1);
    }

    #[test]
    fn counting_example() {
        let frame = Frame::new(["a", "b", "c"]).unwrap();
        let cases = vec![
            case("1", "a", Some(10.0)),
            case("2", "a", Some(11.0)),
            case("3", "b", Some(12.0)),
            case("4", "c", Some(50.0)),
            case("5", "b", None),
        ];
        let table = build_frequency_table(&cases, &intervals(), &frame).unwrap();
        let below = table.get(&EvidenceItemId::new("AALB", RegionClass::Below)).unwrap();
        assert_eq!(below.support, 3);
        let r = |n, d| Rational::new(n, d);
        assert_eq!(below.frequencies::<Rational>(), vec![r(2, 3), r(1, 3), r(0, 1)]);
        let above = table.get(&EvidenceItemId::new("AALB", RegionClass::Above)).unwrap();
        assert_eq!((above.support, above.frequencies::<f64>()), (1, vec![0.0, 0.0, 1.0]));
        assert!(table.get(&EvidenceItemId::new("AALB", RegionClass::Within)).is_none());
    }

    #[test]
    fn missing_value_contributes_nothing() {
        let frame = Frame::new(["a", "b"]).unwrap();
        let table = build_frequency_table(&[case("1", "a", None)], &intervals(), &frame).unwrap();
        assert!(table.is_empty());
    }

    #[test]
    fn table_errors() {
        let frame = Frame::new(["a", "b"]).unwrap();
        let err = build_frequency_table(&[case("1", "z", Some(1.0))], &intervals(), &frame).unwrap_err();
        assert!(matches!(err, ExtractionError::UnknownOutcome { .. }));
        let err = build_frequency_table(&[case("1", "a", Some(1.0))], &ReferenceIntervals::new(), &frame).unwrap_err();
        assert!(matches!(err, ExtractionError::MissingInterval(p) if p == "AALB"));
    }

    #[test]
    fn support_floor() {
        let frame = Frame::new(["a", "b", "c"]).unwrap();
        let cases = vec![
            case("1", "a", Some(10.0)),
            case("2", "a", Some(11.0)),
            case("3", "c", Some(50.0)),
        ];
        let table = build_frequency_table(&cases, &intervals(), &frame)
            .unwrap()
            .with_min_support(2);
        assert_eq!(table.len(), 1);
    }

    #[test]
    fn method_names() {
        for name in ["1", "2a", "2b", "3/global-zero", "3/stratified-one"] {
            assert_eq!(name.parse::<ExtractionMethod>().unwrap().to_string(), name);
        }
        assert_eq!("3".parse::<ExtractionMethod>().unwrap().to_string(), "3/global-one");
        assert!("4".parse::<ExtractionMethod>().is_err());
    }

    #[test]
    fn ordering_breaks_ties_by_index() {
        assert_eq!(descending_order(&[0.2, 0.4, 0.2, 0.4]), vec![1, 3, 0, 2]);
    }
}
