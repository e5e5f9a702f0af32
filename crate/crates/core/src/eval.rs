//! Case diagnosis and accuracy evaluation.
//!
//! A case is diagnosed by combining the assignments of every evidence item it
//! exhibits. The *observed set* is the focal element with the largest
//! combined mass; ties go to the larger belief, then the smaller set, then
//! the smaller mask. Against the true outcome the observed set is a precise
//! match (PM) when it is exactly that singleton, an imprecise match (IM) when
//! it is a larger set containing it, and a non-match (NM) otherwise.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bpa::{BpaSet, EvidenceItemId};
use crate::combination::{combine, CombinationError};
use crate::expert::is_vacuous;
use crate::frame::{Frame, FrameError, SubsetMask};
use crate::ingest::{discretize, CaseRecord, IngestError, ReferenceIntervals};
use crate::mass::{BeliefInterval, MassFunction};
use crate::scalar::Scalar;

/// Significance level used by [`compare_methods`].
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("case {case_id:?}: no usable evidence")]
    NoEvidence { case_id: String },
    #[error("case {case_id:?}: {source}")]
    Combination {
        case_id: String,
        #[source]
        source: CombinationError,
    },
    #[error("case {case_id:?}: {source}")]
    Value {
        case_id: String,
        #[source]
        source: IngestError,
    },
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("reports cover different cases: {0}")]
    CaseSetMismatch(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisResult<T> {
    pub case_id: String,
    pub observed_set: SubsetMask,
    pub combined: MassFunction<T>,
    /// One interval per frame outcome, in frame order.
    pub singleton_intervals: Vec<BeliefInterval<T>>,
    pub conflict: T,
    /// Evidence items that entered the combination, in fold order.
    pub evidence_used: Vec<EvidenceItemId>,
}

/// Picks the observed set from a combined mass function: the focal element
/// of largest mass, then of larger belief, then of smaller cardinality, then
/// of smaller mask.
pub fn observed_set<T: Scalar>(m: &MassFunction<T>) -> SubsetMask {
    let top = m
        .focal()
        .map(|(_, v)| v)
        .reduce(|a, b| if b > a { b } else { a })
        .expect("mass function has a focal element");
    let tied: Vec<(SubsetMask, T)> = m
        .focal()
        .filter(|&(_, v)| v == top)
        .map(|(k, _)| (k, m.belief(k).expect("focal set lies in frame")))
        .collect();
    let cmp = |(a, ba): &&(SubsetMask, T), (b, bb): &&(SubsetMask, T)| -> Ordering {
        bb.partial_cmp(ba)
            .unwrap_or(Ordering::Equal)
            .then(a.len().cmp(&b.len()))
            .then(a.cmp(b))
    };
    tied.iter()
        .min_by(cmp)
        .map(|(k, _)| *k)
        .expect("the maximum is attained")
}

/// Diagnoses one case against `bpa`.
///
/// Present, non-dropped parameters with a reference interval are
/// discretized; the matching assignments are combined in canonical
/// `(parameter, class)` order. Vacuous assignments count as evidence but are
/// left out of the combination.
pub fn diagnose_case<T: Scalar>(
    case: &CaseRecord,
    bpa: &BpaSet<T>,
    intervals: &ReferenceIntervals,
    drop_params: &BTreeSet<String>,
) -> Result<DiagnosisResult<T>, EvalError> {
    let mut items: Vec<EvidenceItemId> = Vec::new();
    for (param, value) in case.present() {
        if drop_params.contains(param) {
            continue;
        }
        let Some(interval) = intervals.get(param) else { continue };
        let class = discretize(value, interval).map_err(|source| EvalError::Value {
            case_id: case.case_id.clone(),
            source,
        })?;
        let id = EvidenceItemId::new(param, class);
        if bpa.get(&id).is_some() {
            items.push(id);
        }
    }
    if items.is_empty() {
        return Err(EvalError::NoEvidence {
            case_id: case.case_id.clone(),
        });
    }
    items.sort();

    let frame = bpa.frame();
    let used: Vec<EvidenceItemId> = items
        .into_iter()
        .filter(|id| !is_vacuous(bpa.get(id).expect("item present")))
        .collect();
    let masses: Vec<MassFunction<T>> = used
        .iter()
        .map(|id| bpa.get(id).expect("item present").clone())
        .collect();
    let (combined, conflict) = if masses.is_empty() {
        (MassFunction::vacuous(frame), T::zero())
    } else {
        let r = combine(&masses).map_err(|source| EvalError::Combination {
            case_id: case.case_id.clone(),
            source,
        })?;
        (r.combined, r.conflict)
    };

    let singleton_intervals = (0..frame.len())
        .map(|i| {
            combined
                .belief_interval(frame.singleton(i))
                .expect("singleton in frame")
        })
        .collect();
    Ok(DiagnosisResult {
        case_id: case.case_id.clone(),
        observed_set: observed_set(&combined),
        combined,
        singleton_intervals,
        conflict,
        evidence_used: used,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatchCategory {
    PM,
    IM,
    NM,
}

impl MatchCategory {
    pub const ALL: [MatchCategory; 3] = [MatchCategory::PM, MatchCategory::IM, MatchCategory::NM];
}

pub fn classify_match(frame: &Frame, observed: SubsetMask, expected: &str) -> Result<MatchCategory, FrameError> {
    let truth = frame.singleton_of(expected)?;
    Ok(if observed == truth {
        MatchCategory::PM
    } else if truth.is_subset_of(observed) {
        MatchCategory::IM
    } else {
        MatchCategory::NM
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalDoc {
    pub outcome: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTrace {
    pub case_id: String,
    pub expected: String,
    pub observed: Vec<String>,
    pub category: MatchCategory,
    pub conflict: f64,
    pub intervals: Vec<IntervalDoc>,
    pub evidence_used: Vec<EvidenceItemId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedCase {
    pub case_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryCounts {
    #[serde(rename = "PM")]
    pub pm: usize,
    #[serde(rename = "IM")]
    pub im: usize,
    #[serde(rename = "NM")]
    pub nm: usize,
}

impl CategoryCounts {
    pub fn add(&mut self, c: MatchCategory) {
        match c {
            MatchCategory::PM => self.pm += 1,
            MatchCategory::IM => self.im += 1,
            MatchCategory::NM => self.nm += 1,
        }
    }

    pub fn get(&self, c: MatchCategory) -> usize {
        match c {
            MatchCategory::PM => self.pm,
            MatchCategory::IM => self.im,
            MatchCategory::NM => self.nm,
        }
    }

    pub fn total(&self) -> usize {
        self.pm + self.im + self.nm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryPercentages {
    #[serde(rename = "PM")]
    pub pm: f64,
    #[serde(rename = "IM")]
    pub im: f64,
    #[serde(rename = "NM")]
    pub nm: f64,
}

impl CategoryPercentages {
    pub fn get(&self, c: MatchCategory) -> f64 {
        match c {
            MatchCategory::PM => self.pm,
            MatchCategory::IM => self.im,
            MatchCategory::NM => self.nm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: String,
    pub total_cases: usize,
    /// Cases that entered the percentage base.
    pub diagnosed: usize,
    pub excluded: Vec<ExcludedCase>,
    pub counts: CategoryCounts,
    /// Absent when no case could be diagnosed.
    pub percentages: Option<CategoryPercentages>,
    pub cases: Vec<CaseTrace>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        crate::json::to_string_shallow(self, 4)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn category_of(&self, case_id: &str) -> Option<MatchCategory> {
        self.cases.iter().find(|c| c.case_id == case_id).map(|c| c.category)
    }
}

/// Diagnoses and classifies every case. Cases without usable evidence, with
/// total conflict, or whose true outcome is outside the frame are listed
/// under `excluded` and left out of the percentage base.
pub fn evaluate_set<T: Scalar>(
    cases: &[CaseRecord],
    bpa: &BpaSet<T>,
    intervals: &ReferenceIntervals,
    drop_params: &BTreeSet<String>,
) -> EvaluationReport {
    let frame = bpa.frame();
    let mut counts = CategoryCounts::default();
    let mut traces = Vec::new();
    let mut excluded = Vec::new();
    for case in cases {
        let outcome = diagnose_case(case, bpa, intervals, drop_params).and_then(|d| {
            let category = classify_match(frame, d.observed_set, &case.outcome)?;
            Ok((d, category))
        });
        match outcome {
            Ok((d, category)) => {
                counts.add(category);
                traces.push(CaseTrace {
                    case_id: d.case_id.clone(),
                    expected: case.outcome.clone(),
                    observed: frame.labels_of(d.observed_set),
                    category,
                    conflict: d.conflict.to_f64_lossy(),
                    intervals: d
                        .singleton_intervals
                        .iter()
                        .enumerate()
                        .map(|(i, iv)| IntervalDoc {
                            outcome: frame.label(i).to_owned(),
                            lower: iv.lower.to_f64_lossy(),
                            upper: iv.upper.to_f64_lossy(),
                        })
                        .collect(),
                    evidence_used: d.evidence_used,
                });
            }
            Err(e) => excluded.push(ExcludedCase {
                case_id: case.case_id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    let base = counts.total();
    let percentages = (base > 0).then(|| {
        let pct = |c: usize| 100.0 * c as f64 / base as f64;
        CategoryPercentages {
            pm: pct(counts.pm),
            im: pct(counts.im),
            nm: pct(counts.nm),
        }
    });
    EvaluationReport {
        method: bpa.method().to_owned(),
        total_cases: cases.len(),
        diagnosed: base,
        excluded,
        counts,
        percentages,
        cases: traces,
    }
}

/// Rows PM/IM/NM, one column per report, percentages to one decimal.
pub fn render_table(columns: &[(&str, &EvaluationReport)]) -> String {
    let headers: Vec<String> = columns.iter().map(|(name, _)| name.to_string()).collect();
    let width = headers.iter().map(String::len).max().unwrap_or(0).max(6);
    let mut out = String::new();
    write!(out, "{:<10}", "Category").unwrap();
    for h in &headers {
        write!(out, "  {h:>width$}").unwrap();
    }
    out.push('\n');
    for cat in MatchCategory::ALL {
        write!(out, "{:<10}", format!("{cat:?}")).unwrap();
        for (_, r) in columns {
            let cell = r
                .percentages
                .map_or_else(|| "-".to_owned(), |p| format!("{:.1}", p.get(cat)));
            write!(out, "  {cell:>width$}").unwrap();
        }
        out.push('\n');
    }
    write!(out, "{:<10}", "n").unwrap();
    for (_, r) in columns {
        let cell = format!("{}/{}", r.diagnosed, r.total_cases);
        write!(out, "  {cell:>width$}").unwrap();
    }
    out.push('\n');
    out
}

/// Per-case categories of two reports over the same cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedOutcome {
    pub case_id: String,
    pub a: MatchCategory,
    pub b: MatchCategory,
}

/// Lines up two reports case by case. Both must have diagnosed exactly the
/// same case ids.
pub fn pair_reports(a: &EvaluationReport, b: &EvaluationReport) -> Result<Vec<PairedOutcome>, EvalError> {
    let bmap: BTreeMap<&str, MatchCategory> = b.cases.iter().map(|c| (c.case_id.as_str(), c.category)).collect();
    let aids: BTreeSet<&str> = a.cases.iter().map(|c| c.case_id.as_str()).collect();
    let bids: BTreeSet<&str> = bmap.keys().copied().collect();
    if aids != bids {
        let diff: Vec<&str> = aids.symmetric_difference(&bids).copied().collect();
        return Err(EvalError::CaseSetMismatch(diff.join(", ")));
    }
    Ok(a.cases
        .iter()
        .map(|c| PairedOutcome {
            case_id: c.case_id.clone(),
            a: c.category,
            b: bmap[c.case_id.as_str()],
        })
        .collect())
}

pub fn paired_to_csv(paired: &[PairedOutcome]) -> String {
    let mut out = String::from("case_id,a,b\n");
    for p in paired {
        writeln!(out, "{},{:?},{:?}", p.case_id, p.a, p.b).unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub method_a: String,
    pub method_b: String,
    pub cases: usize,
    pub pm_a: usize,
    pub pm_b: usize,
    /// Cases where only A is a precise match.
    pub only_a: usize,
    /// Cases where only B is a precise match.
    pub only_b: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub significant: bool,
    /// No discordant pairs: the test has nothing to work with.
    pub degenerate: bool,
}

/// Two-sided exact McNemar p-value for `b` and `c` discordant pairs:
/// `min(1, 2·P[X ≤ min(b, c)])` with `X ~ Binomial(b + c, 1/2)`.
pub fn mcnemar_exact(b: usize, c: usize) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    let k = b.min(c);
    let ln_half_n = -(n as f64) * std::f64::consts::LN_2;
    let mut ln_choose = 0.0f64;
    let mut tail = 0.0f64;
    for i in 0..=k {
        if i > 0 {
            ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        tail += (ln_choose + ln_half_n).exp();
    }
    (2.0 * tail).min(1.0)
}

/// Exact McNemar test on precise-match versus anything else.
pub fn compare_methods(
    a: &EvaluationReport,
    b: &EvaluationReport,
    paired: &[PairedOutcome],
) -> Result<Comparison, EvalError> {
    let expected = pair_reports(a, b)?;
    let mut given: Vec<&PairedOutcome> = paired.iter().collect();
    given.sort_by(|x, y| x.case_id.cmp(&y.case_id));
    let mut want: Vec<&PairedOutcome> = expected.iter().collect();
    want.sort_by(|x, y| x.case_id.cmp(&y.case_id));
    if given != want {
        return Err(EvalError::CaseSetMismatch(
            "paired outcomes disagree with the reports".into(),
        ));
    }
    let is_pm = |c: MatchCategory| c == MatchCategory::PM;
    let only_a = paired.iter().filter(|p| is_pm(p.a) && !is_pm(p.b)).count();
    let only_b = paired.iter().filter(|p| !is_pm(p.a) && is_pm(p.b)).count();
    let p_value = mcnemar_exact(only_a, only_b);
    let degenerate = only_a + only_b == 0;
    Ok(Comparison {
        method_a: a.method.clone(),
        method_b: b.method.clone(),
        cases: paired.len(),
        pm_a: paired.iter().filter(|p| is_pm(p.a)).count(),
        pm_b: paired.iter().filter(|p| is_pm(p.b)).count(),
        only_a,
        only_b,
        p_value,
        alpha: ALPHA,
        significant: !degenerate && p_value < ALPHA,
        degenerate,
    })
}
