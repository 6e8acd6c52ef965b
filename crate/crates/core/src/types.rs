//! Domain types: score matrices, labeled datasets, thresholds and class sets.

use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

use crate::error::{bail, Result};

/// Largest number of classes a [`ClassSet`] can hold.
pub const MAX_CLASSES: usize = 64;

/// Row-major `n_rows × n_classes` matrix of base-model scores.
///
/// Scores need not sum to one per row and need not be calibrated; only their
/// order within a column matters to the threshold search.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n_rows: usize,
    n_classes: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(n_rows: usize, n_classes: usize, values: Vec<f64>) -> Result<Self> {
        if n_rows == 0 {
            bail!(Dimension, "score matrix needs at least one row");
        }
        if n_classes < 2 {
            bail!(Dimension, "score matrix needs at least two classes, got {n_classes}");
        }
        if n_classes > MAX_CLASSES {
            bail!(Dimension, "at most {MAX_CLASSES} classes are supported, got {n_classes}");
        }
        if values.len() != n_rows * n_classes {
            bail!(Dimension, "expected {} values for {n_rows}x{n_classes}, got {}", n_rows * n_classes, values.len());
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            bail!(InvalidData, "non-finite score at row {} column {}", pos / n_classes, pos % n_classes);
        }
        Ok(Self { n_rows, n_classes, values })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_classes = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * n_classes);
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != n_classes {
                bail!(Dimension, "row {i} has {} scores, expected {n_classes}", r.as_ref().len());
            }
            values.extend_from_slice(r.as_ref());
        }
        Self::new(rows.len(), n_classes, values)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_classes..(i + 1) * self.n_classes]
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.n_classes + k]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_classes)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of the largest score in row `i`, ties resolved to the lowest class.
    pub fn argmax(&self, i: usize) -> usize {
        argmax(self.row(i))
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// A score matrix paired with 0-indexed integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    scores: ScoreMatrix,
    labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(scores: ScoreMatrix, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != scores.n_rows() {
            bail!(Dimension, "{} labels for {} score rows", labels.len(), scores.n_rows());
        }
        let k = scores.n_classes();
        if let Some(i) = labels.iter().position(|&y| y >= k) {
            bail!(InvalidData, "label {} at row {i} is not below K = {k}", labels[i]);
        }
        Ok(Self { scores, labels })
    }

    pub fn scores(&self) -> &ScoreMatrix {
        &self.scores
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.scores.n_classes()
    }

    /// Number of rows carrying each label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.n_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// New dataset made of the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let k = self.n_classes();
        let mut values = Vec::with_capacity(rows.len() * k);
        let mut labels = Vec::with_capacity(rows.len());
        for &i in rows {
            if i >= self.len() {
                bail!(Dimension, "row {i} out of range for {} rows", self.len());
            }
            values.extend_from_slice(self.scores.row(i));
            labels.push(self.labels[i]);
        }
        Self::new(ScoreMatrix::new(rows.len(), k, values)?, labels)
    }
}

/// One threshold per class. `-inf` always includes the class, `+inf` never does.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdVector(Vec<f64>);

impl ThresholdVector {
    pub const NEG_INF: f64 = f64::NEG_INFINITY;
    pub const POS_INF: f64 = f64::INFINITY;

    pub fn new(t: Vec<f64>) -> Result<Self> {
        if let Some(k) = t.iter().position(|v| v.is_nan()) {
            bail!(InvalidData, "threshold {k} is NaN");
        }
        Ok(Self(t))
    }

    pub fn uniform(k: usize, value: f64) -> Self {
        Self(alloc::vec![value; k])
    }

    pub fn set(&mut self, k: usize, value: f64) {
        self.0[k] = value;
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn check_len(&self, k: usize) -> Result<()> {
        if self.0.len() != k {
            bail!(Dimension, "{} thresholds for {k} classes", self.0.len());
        }
        Ok(())
    }
}

impl Deref for ThresholdVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Subset of `{0, …, K-1}` stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ClassSet(u64);

impl ClassSet {
    pub const EMPTY: ClassSet = ClassSet(0);

    pub fn full(k: usize) -> Self {
        debug_assert!(k <= MAX_CLASSES);
        if k == MAX_CLASSES {
            ClassSet(u64::MAX)
        } else {
            ClassSet((1u64 << k) - 1)
        }
    }

    pub fn singleton(k: usize) -> Self {
        ClassSet(1u64 << k)
    }

    pub fn from_bits(bits: u64) -> Self {
        ClassSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn contains(self, k: usize) -> bool {
        self.0 >> k & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, k: usize) {
        self.0 |= 1u64 << k;
    }

    #[inline]
    pub fn remove(&mut self, k: usize) {
        self.0 &= !(1u64 << k);
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// The only member of a singleton set.
    #[inline]
    pub fn sole(self) -> Option<usize> {
        (self.0.count_ones() == 1).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn is_subset(self, other: ClassSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        core::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let k = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(k)
            }
        })
    }
}

impl fmt::Debug for ClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for ClassSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = ClassSet::EMPTY;
        for k in iter {
            s.insert(k);
        }
        s
    }
}
