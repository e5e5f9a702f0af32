//! Overriding data-derived assignments with expert-supplied ones.
//!
//! An expert table shares the BPA-set JSON schema, with an optional
//! `comment` per item. A class the expert left out is read as `m(θ) = 1`,
//! i.e. "no opinion".

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::bpa::{focal_docs, mass_from_docs, BpaError, BpaSet, BpaSetDoc, EvidenceItemId, ItemDoc};
use crate::frame::{Frame, FrameError};
use crate::ingest;
use crate::mass::MassFunction;
use crate::scalar::Scalar;

/// Tolerance used to recognise an expert's "unknown" entry.
pub const VACUOUS_TOLERANCE: f64 = 1e-9;

/// True iff `m` puts all of its mass on the whole frame.
pub fn is_vacuous<T: Scalar>(m: &MassFunction<T>) -> bool {
    m.is_vacuous_within(VACUOUS_TOLERANCE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertEntry<T> {
    pub mass: MassFunction<T>,
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertBpaTable<T> {
    frame: Frame,
    entries: BTreeMap<EvidenceItemId, ExpertEntry<T>>,
}

impl<T: Scalar> ExpertBpaTable<T> {
    pub fn new(frame: &Frame) -> Self {
        ExpertBpaTable {
            frame: frame.clone(),
            entries: BTreeMap::new(),
        }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn insert(
        &mut self,
        id: EvidenceItemId,
        mass: MassFunction<T>,
        comment: Option<String>,
    ) -> Result<(), FrameError> {
        self.frame.ensure_same(mass.frame())?;
        self.entries.insert(id, ExpertEntry { mass, comment });
        Ok(())
    }

    pub fn get(&self, id: &EvidenceItemId) -> Option<&ExpertEntry<T>> {
        self.entries.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EvidenceItemId, &ExpertEntry<T>)> {
        self.entries.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The expert's opinion on `id`, vacuous when the item is not listed.
    pub fn opinion(&self, id: &EvidenceItemId) -> MassFunction<T> {
        self.entries
            .get(id)
            .map(|e| e.mass.clone())
            .unwrap_or_else(|| MassFunction::vacuous(&self.frame))
    }

    /// Parameters with at least one non-vacuous class entry.
    pub fn informed_parameters(&self) -> BTreeSet<&str> {
        self.entries
            .iter()
            .filter(|(_, e)| !is_vacuous(&e.mass))
            .map(|(id, _)| id.parameter.as_str())
            .collect()
    }

    pub fn to_json(&self) -> String {
        let doc = BpaSetDoc {
            method: "expert".into(),
            frame: self.frame.labels().to_vec(),
            items: self
                .entries
                .iter()
                .map(|(id, e)| ItemDoc {
                    parameter: id.parameter.clone(),
                    class: id.class,
                    focal: focal_docs(&e.mass),
                    comment: e.comment.clone(),
                })
                .collect(),
        };
        crate::json::to_string_shallow(&doc, 4)
    }

    pub fn from_json(text: &str) -> Result<Self, BpaError> {
        let doc: BpaSetDoc = serde_json::from_str(text)?;
        let frame = Frame::new(doc.frame.iter().cloned())?;
        let mut table = ExpertBpaTable::new(&frame);
        for item in doc.items {
            let id = EvidenceItemId::new(item.parameter, item.class);
            let mass = mass_from_docs(&frame, &item.focal).map_err(|source| BpaError::Mass {
                item: id.to_string(),
                source,
            })?;
            if table
                .entries
                .insert(
                    id.clone(),
                    ExpertEntry {
                        mass,
                        comment: item.comment,
                    },
                )
                .is_some()
            {
                return Err(BpaError::DuplicateItem(id));
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, BpaError> {
        Self::from_json(&ingest::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModificationMode {
    /// Class-level overwrite.
    Part,
    /// Parameter-level overwrite.
    All,
}

/// Replaces each generated entry whose expert counterpart is non-vacuous.
/// Expert items with no generated counterpart are ignored.
pub fn part_modify<T: Scalar>(generated: &BpaSet<T>, expert: &ExpertBpaTable<T>) -> Result<BpaSet<T>, FrameError> {
    generated.frame().ensure_same(expert.frame())?;
    let mut out = BpaSet::new(generated.frame(), format!("{}+part", generated.method()));
    for (id, mass) in generated.iter() {
        let chosen = match expert.get(id) {
            Some(e) if !is_vacuous(&e.mass) => e.mass.clone(),
            _ => mass.clone(),
        };
        out.insert(id.clone(), chosen)?;
    }
    Ok(out)
}

/// For every parameter on which the expert has at least one non-vacuous
/// class, replaces all of that parameter's classes with the expert's
/// entries (an unlisted class becomes vacuous). Other parameters pass
/// through unchanged.
pub fn all_modify<T: Scalar>(generated: &BpaSet<T>, expert: &ExpertBpaTable<T>) -> Result<BpaSet<T>, FrameError> {
    generated.frame().ensure_same(expert.frame())?;
    let informed = expert.informed_parameters();
    let mut out = BpaSet::new(generated.frame(), format!("{}+all", generated.method()));
    for (id, mass) in generated.iter() {
        let chosen = if informed.contains(id.parameter.as_str()) {
            expert.opinion(id)
        } else {
            mass.clone()
        };
        out.insert(id.clone(), chosen)?;
    }
    for (id, entry) in expert.iter() {
        if informed.contains(id.parameter.as_str()) && generated.get(id).is_none() {
            out.insert(id.clone(), entry.mass.clone())?;
        }
    }
    Ok(out)
}

pub fn modify<T: Scalar>(
    generated: &BpaSet<T>,
    expert: &ExpertBpaTable<T>,
    mode: ModificationMode,
) -> Result<BpaSet<T>, FrameError> {
    match mode {
        ModificationMode::Part => part_modify(generated, expert),
        ModificationMode::All => all_modify(generated, expert),
    }
}
