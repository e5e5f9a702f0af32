//! Case and reference-interval files, and discretization of lab values.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("header is missing the {0:?} column")]
    MissingColumn(&'static str),
    #[error("column {0:?} appears more than once")]
    DuplicateColumn(String),
    #[error("row {row}: column {column:?} holds {value:?}, expected a finite number")]
    BadNumber { row: usize, column: String, value: String },
    #[error("row {row}: expected {expected} cells, found {found}")]
    RowLength { row: usize, expected: usize, found: usize },
    #[error("reference interval for {parameter:?} is [{low}, {high}]; need finite low < high")]
    InvalidInterval { parameter: String, low: f64, high: f64 },
    #[error("parameter {0:?} listed more than once")]
    DuplicateParameter(String),
    #[error("value {0} is not finite")]
    NonFiniteValue(f64),
    #[error("unknown parameter group {0:?}")]
    UnknownGroup(String),
    #[error("{0}")]
    Format(String),
}

pub(crate) fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> Result<(), IngestError> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(contents))
        .map_err(|source| IngestError::Io {
            path: path.to_owned(),
            source,
        })
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, IngestError> {
    let mut s = String::new();
    open(path)?.read_to_string(&mut s).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(s)
}

/// Region of a value relative to a parameter's reference interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionClass {
    Above,
    Within,
    Below,
}

impl RegionClass {
    pub const ALL: [RegionClass; 3] = [RegionClass::Above, RegionClass::Within, RegionClass::Below];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionClass::Above => "above",
            RegionClass::Within => "within",
            RegionClass::Below => "below",
        }
    }
}

impl fmt::Display for RegionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionClass {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "above" => Ok(RegionClass::Above),
            "within" => Ok(RegionClass::Within),
            "below" => Ok(RegionClass::Below),
            other => Err(IngestError::Format(format!("unknown region class {other:?}"))),
        }
    }
}

/// Clinical normal range of one parameter, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

/// Boundary values belong to `Within`.
pub fn discretize(value: f64, interval: Interval) -> Result<RegionClass, IngestError> {
    if !value.is_finite() {
        return Err(IngestError::NonFiniteValue(value));
    }
    Ok(if value < interval.low {
        RegionClass::Below
    } else if value > interval.high {
        RegionClass::Above
    } else {
        RegionClass::Within
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceIntervals {
    intervals: BTreeMap<String, Interval>,
}

impl ReferenceIntervals {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, parameter: impl Into<String>, low: f64, high: f64) -> Result<(), IngestError> {
        let parameter = parameter.into();
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(IngestError::InvalidInterval { parameter, low, high });
        }
        if self.intervals.contains_key(&parameter) {
            return Err(IngestError::DuplicateParameter(parameter));
        }
        self.intervals.insert(parameter, Interval { low, high });
        Ok(())
    }

    pub fn get(&self, parameter: &str) -> Option<Interval> {
        self.intervals.get(parameter).copied()
    }

    pub fn parameters(&self) -> impl Iterator<Item = &str> {
        self.intervals.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// CSV with header `parameter,low,high`.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &'static str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or(IngestError::MissingColumn(name))
        };
        let (p, lo, hi) = (col("parameter")?, col("low")?, col("high")?);
        let mut out = ReferenceIntervals::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let number = |idx: usize, name: &str| -> Result<f64, IngestError> {
                let raw = record.get(idx).unwrap_or("");
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| IngestError::BadNumber {
                        row: row + 1,
                        column: name.to_owned(),
                        value: raw.to_owned(),
                    })
            };
            let name = record.get(p).unwrap_or("").to_owned();
            if name.is_empty() {
                return Err(IngestError::Format(format!("row {}: empty parameter name", row + 1)));
            }
            out.insert(name, number(lo, "low")?, number(hi, "high")?)?;
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        Self::from_reader(open(path)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,low,high\n");
        for (name, iv) in &self.intervals {
            out.push_str(&format!("{name},{},{}\n", iv.low, iv.high));
        }
        out
    }
}

/// One training or test case.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRecord {
    pub case_id: String,
    pub outcome: String,
    /// Lab values by parameter; `None` is a missing measurement.
    pub values: BTreeMap<String, Option<f64>>,
}

impl CaseRecord {
    /// Parameters with a measured value, in name order.
    pub fn present(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().filter_map(|(k, v)| v.map(|v| (k.as_str(), v)))
    }
}

/// Reads a case CSV: `case_id,outcome,<param>...`. Empty cells are missing
/// values. Repeated case ids are kept, later ones renamed `id#2`, `id#3`...
pub fn parse_cases_from_reader<R: Read>(reader: R) -> Result<Vec<CaseRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut seen = BTreeSet::new();
    for h in &headers {
        if h.is_empty() {
            return Err(IngestError::Format("empty column name in header".into()));
        }
        if !seen.insert(h.as_str()) {
            return Err(IngestError::DuplicateColumn(h.clone()));
        }
    }
    let id_col = headers
        .iter()
        .position(|h| h == "case_id")
        .ok_or(IngestError::MissingColumn("case_id"))?;
    let outcome_col = headers
        .iter()
        .position(|h| h == "outcome")
        .ok_or(IngestError::MissingColumn("outcome"))?;

    let mut cases = Vec::new();
    let mut id_counts: HashMap<String, usize> = HashMap::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(IngestError::RowLength {
                row: row + 1,
                expected: headers.len(),
                found: record.len(),
            });
        }
        let mut values = BTreeMap::new();
        for (i, cell) in record.iter().enumerate() {
            if i == id_col || i == outcome_col {
                continue;
            }
            let value = if cell.is_empty() {
                None
            } else {
                Some(
                    cell.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| IngestError::BadNumber {
                            row: row + 1,
                            column: headers[i].clone(),
                            value: cell.to_owned(),
                        })?,
                )
            };
            values.insert(headers[i].clone(), value);
        }
        let raw_id = record[id_col].to_owned();
        let count = id_counts.entry(raw_id.clone()).or_insert(0);
        *count += 1;
        let case_id = if *count > 1 {
            log::warn!("duplicate case id {raw_id:?}; keeping it as {raw_id}#{count}");
            format!("{raw_id}#{count}")
        } else {
            raw_id
        };
        cases.push(CaseRecord {
            case_id,
            outcome: record[outcome_col].to_owned(),
            values,
        });
    }
    Ok(cases)
}

pub fn parse_cases(path: &Path) -> Result<Vec<CaseRecord>, IngestError> {
    parse_cases_from_reader(open(path)?)
}

/// Writes cases as CSV; parameter columns are the union over all cases in
/// name order.
pub fn cases_to_csv(cases: &[CaseRecord]) -> Result<String, IngestError> {
    let params: BTreeSet<&str> = cases.iter().flat_map(|c| c.values.keys().map(String::as_str)).collect();
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["case_id", "outcome"];
    header.extend(params.iter().copied());
    wtr.write_record(&header)?;
    for case in cases {
        let mut row = vec![case.case_id.clone(), case.outcome.clone()];
        for p in &params {
            row.push(match case.values.get(*p) {
                Some(Some(v)) => v.to_string(),
                _ => String::new(),
            });
        }
        wtr.write_record(&row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| IngestError::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Plain-text parameter list, one name per line; blank lines and `#`
/// comments are ignored.
pub fn parse_param_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

pub fn load_param_list(path: &Path) -> Result<BTreeSet<String>, IngestError> {
    Ok(parse_param_list(&read_to_string(path)?))
}
