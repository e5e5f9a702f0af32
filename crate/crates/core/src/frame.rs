//! Frames of discernment and subset masks.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Largest supported frame; masks live in a single `u32`.
pub const MAX_FRAME_SIZE: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("frame must contain at least one label")]
    Empty,
    #[error("frame has {0} labels, at most {MAX_FRAME_SIZE} are supported")]
    TooLarge(usize),
    #[error("duplicate label {0:?} in frame")]
    DuplicateLabel(String),
    #[error("empty label at position {0}")]
    EmptyLabel(usize),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("subset mask {mask:#b} does not fit a frame of size {size}")]
    MaskOutOfRange { mask: u32, size: usize },
    #[error("operands belong to different frames")]
    Mismatch,
}

#[derive(Debug)]
struct FrameInner {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

/// Ordered set of mutually exclusive outcomes.
///
/// The position of a label fixes its bit in every [`SubsetMask`]. Cloning is
/// cheap; clones share storage.
#[derive(Clone)]
pub struct Frame(Arc<FrameInner>);

impl Frame {
    pub fn new<I, S>(labels: I) -> Result<Self, FrameError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(FrameError::Empty);
        }
        if labels.len() > MAX_FRAME_SIZE {
            return Err(FrameError::TooLarge(labels.len()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(FrameError::EmptyLabel(i));
            }
            if index.insert(label.clone(), i).is_some() {
                return Err(FrameError::DuplicateLabel(label.clone()));
            }
        }
        Ok(Frame(Arc::new(FrameInner { labels, index })))
    }

    pub fn len(&self) -> usize {
        self.0.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> &[String] {
        &self.0.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.0.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.index.get(label).copied()
    }

    /// Number of subsets, `2^n`.
    pub fn powerset_size(&self) -> usize {
        1usize << self.len()
    }

    /// The mask of the whole frame.
    pub fn theta(&self) -> SubsetMask {
        SubsetMask(((1u64 << self.len()) - 1) as u32)
    }

    pub fn singleton(&self, index: usize) -> SubsetMask {
        assert!(index < self.len(), "outcome index {index} out of range");
        SubsetMask(1 << index)
    }

    pub fn singleton_of(&self, label: &str) -> Result<SubsetMask, FrameError> {
        self.index_of(label)
            .map(|i| SubsetMask(1 << i))
            .ok_or_else(|| FrameError::UnknownLabel(label.to_owned()))
    }

    /// Builds a mask from labels. Repeated labels are harmless.
    pub fn subset<I, S>(&self, labels: I) -> Result<SubsetMask, FrameError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        labels.into_iter().try_fold(
            SubsetMask::EMPTY,
            |acc, l| Ok(acc.union(self.singleton_of(l.as_ref())?)),
        )
    }

    /// Labels of the members of `mask`, in frame order.
    pub fn labels_of(&self, mask: SubsetMask) -> Vec<String> {
        mask.members().map(|i| self.0.labels[i].clone()).collect()
    }

    pub fn check(&self, mask: SubsetMask) -> Result<(), FrameError> {
        if mask.0 & !self.theta().0 != 0 {
            return Err(FrameError::MaskOutOfRange {
                mask: mask.0,
                size: self.len(),
            });
        }
        Ok(())
    }

    pub fn complement(&self, mask: SubsetMask) -> SubsetMask {
        SubsetMask(!mask.0 & self.theta().0)
    }

    /// Every subset of the frame, `∅` first, in increasing mask order.
    pub fn masks(&self) -> impl Iterator<Item = SubsetMask> {
        (0..=self.theta().0).map(SubsetMask)
    }

    pub fn same_as(&self, other: &Frame) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.labels == other.0.labels
    }

    pub fn ensure_same(&self, other: &Frame) -> Result<(), FrameError> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(FrameError::Mismatch)
        }
    }
}

impl PartialEq for Frame {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl Eq for Frame {}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Frame").field(&self.0.labels).finish()
    }
}

/// A subset of a frame, bit `i` set iff outcome `i` belongs to it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SubsetMask(pub u32);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn union(self, other: Self) -> Self {
        SubsetMask(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        SubsetMask(self.0 & other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: Self) -> bool {
        self.0 & other.0 != 0
    }

    pub fn contains(self, index: usize) -> bool {
        index < 32 && self.0 & (1 << index) != 0
    }

    pub fn insert(&mut self, index: usize) {
        self.0 |= 1 << index;
    }

    /// Member indices in increasing order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i)
            }
        })
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<usize> for SubsetMask {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut mask = SubsetMask::EMPTY;
        for i in iter {
            mask.insert(i);
        }
        mask
    }
}
