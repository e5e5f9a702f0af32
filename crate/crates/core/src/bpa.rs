//! Evidence items, sets of per-item mass functions, and their JSON documents.
//!
//! Subsets are always written as label lists so documents survive a change
//! of frame order. A mass function document is
//! `{"frame": [...], "focal": [{"subset": [...], "mass": r}, ...]}` and a set
//! of them is `{"method": "...", "frame": [...], "items": [{"parameter",
//! "class", "focal"}, ...]}`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{Frame, FrameError};
use crate::ingest::{self, IngestError, RegionClass};
use crate::mass::{MassError, MassFunction};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum BpaError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("{item}: {source}")]
    Mass {
        item: String,
        #[source]
        source: MassError,
    },
    #[error("{0} appears more than once")]
    DuplicateItem(EvidenceItemId),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] IngestError),
}

/// A lab parameter observed in one region of its reference interval.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EvidenceItemId {
    pub parameter: String,
    pub class: RegionClass,
}

impl EvidenceItemId {
    pub fn new(parameter: impl Into<String>, class: RegionClass) -> Self {
        EvidenceItemId {
            parameter: parameter.into(),
            class,
        }
    }
}

impl fmt::Display for EvidenceItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.parameter, self.class)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalDoc {
    pub subset: Vec<String>,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassFunctionDoc {
    pub frame: Vec<String>,
    pub focal: Vec<FocalDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDoc {
    pub parameter: String,
    pub class: RegionClass,
    pub focal: Vec<FocalDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpaSetDoc {
    #[serde(default)]
    pub method: String,
    pub frame: Vec<String>,
    pub items: Vec<ItemDoc>,
}

pub(crate) fn focal_docs<T: Scalar>(m: &MassFunction<T>) -> Vec<FocalDoc> {
    m.focal()
        .map(|(k, v)| FocalDoc {
            subset: m.frame().labels_of(k),
            mass: v.to_f64_lossy(),
        })
        .collect()
}

pub(crate) fn mass_from_docs<T: Scalar>(frame: &Frame, focal: &[FocalDoc]) -> Result<MassFunction<T>, MassError> {
    let mut entries = Vec::with_capacity(focal.len());
    for f in focal {
        entries.push((frame.subset(&f.subset)?, T::from_f64_lossy(f.mass)));
    }
    MassFunction::new(frame, entries)
}

impl<T: Scalar> MassFunction<T> {
    pub fn to_doc(&self) -> MassFunctionDoc {
        MassFunctionDoc {
            frame: self.frame().labels().to_vec(),
            focal: focal_docs(self),
        }
    }

    pub fn from_doc(doc: &MassFunctionDoc) -> Result<Self, BpaError> {
        let frame = Frame::new(doc.frame.iter().cloned())?;
        mass_from_docs(&frame, &doc.focal).map_err(|source| BpaError::Mass {
            item: "mass function".into(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        crate::json::to_string_shallow(&self.to_doc(), 2)
    }

    pub fn from_json(text: &str) -> Result<Self, BpaError> {
        Self::from_doc(&serde_json::from_str(text)?)
    }
}

/// One mass function per evidence item, all on a shared frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BpaSet<T> {
    frame: Frame,
    method: String,
    items: BTreeMap<EvidenceItemId, MassFunction<T>>,
}

impl<T: Scalar> BpaSet<T> {
    pub fn new(frame: &Frame, method: impl Into<String>) -> Self {
        BpaSet {
            frame: frame.clone(),
            method: method.into(),
            items: BTreeMap::new(),
        }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn set_method(&mut self, method: impl Into<String>) {
        self.method = method.into();
    }

    /// Inserts or replaces the entry for `id`.
    pub fn insert(&mut self, id: EvidenceItemId, mass: MassFunction<T>) -> Result<(), FrameError> {
        self.frame.ensure_same(mass.frame())?;
        self.items.insert(id, mass);
        Ok(())
    }

    pub fn get(&self, id: &EvidenceItemId) -> Option<&MassFunction<T>> {
        self.items.get(id)
    }

    /// Entries in canonical `(parameter, class)` order.
    pub fn iter(&self) -> impl Iterator<Item = (&EvidenceItemId, &MassFunction<T>)> {
        self.items.iter()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn parameters(&self) -> impl Iterator<Item = &str> {
        let mut last: Option<&str> = None;
        self.items.keys().filter_map(move |k| {
            if last == Some(k.parameter.as_str()) {
                None
            } else {
                last = Some(k.parameter.as_str());
                last
            }
        })
    }

    pub fn to_doc(&self) -> BpaSetDoc {
        BpaSetDoc {
            method: self.method.clone(),
            frame: self.frame.labels().to_vec(),
            items: self
                .items
                .iter()
                .map(|(id, m)| ItemDoc {
                    parameter: id.parameter.clone(),
                    class: id.class,
                    focal: focal_docs(m),
                    comment: None,
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &BpaSetDoc) -> Result<Self, BpaError> {
        let frame = Frame::new(doc.frame.iter().cloned())?;
        let mut set = BpaSet::new(&frame, doc.method.clone());
        for item in &doc.items {
            let id = EvidenceItemId::new(item.parameter.clone(), item.class);
            let mass = mass_from_docs(&frame, &item.focal).map_err(|source| BpaError::Mass {
                item: id.to_string(),
                source,
            })?;
            if set.items.insert(id.clone(), mass).is_some() {
                return Err(BpaError::DuplicateItem(id));
            }
        }
        Ok(set)
    }

    pub fn to_json(&self) -> String {
        crate::json::to_string_shallow(&self.to_doc(), 4)
    }

    pub fn from_json(text: &str) -> Result<Self, BpaError> {
        Self::from_doc(&serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, BpaError> {
        Self::from_json(&ingest::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), BpaError> {
        Ok(ingest::write_file(path, self.to_json().as_bytes())?)
    }
}
