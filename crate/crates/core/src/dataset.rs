//! Multi-view containers: label vectors and incomplete multi-view datasets.

use std::collections::HashMap;
use std::hash::Hash;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::masking::{gather, IndexVector, Mask};
use crate::matrix::Matrix;

/// Cluster or class ids, one per sample.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelVector(Vec<usize>);

impl LabelVector {
    pub fn new(labels: Vec<usize>) -> Self {
        Self(labels)
    }

    /// Remaps arbitrary ids to `0..c`, numbering ids by first occurrence.
    pub fn canonical<T: Copy + Eq + Hash>(raw: &[T]) -> Self {
        let mut seen: HashMap<T, usize> = HashMap::new();
        let labels = raw
            .iter()
            .map(|id| {
                let next = seen.len();
                *seen.entry(*id).or_insert(next)
            })
            .collect();
        Self(labels)
    }

    pub fn canonicalized(&self) -> Self {
        Self::canonical(&self.0)
    }

    /// Number of distinct ids.
    pub fn num_classes(&self) -> usize {
        let mut ids = self.0.clone();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl Deref for LabelVector {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for LabelVector {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

/// Per-view feature matrices restricted to the samples each view observes.
///
/// `views[i]` row `j` holds sample `index_vectors[i][j]`.
#[derive(Debug, Clone)]
pub struct MultiViewDataset {
    views: Vec<Matrix>,
    index_vectors: Vec<IndexVector>,
    n_total: usize,
    labels: Option<LabelVector>,
}

impl MultiViewDataset {
    pub fn new(
        views: Vec<Matrix>,
        index_vectors: Vec<IndexVector>,
        n_total: usize,
        labels: Option<LabelVector>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::Argument("dataset needs at least one view".into()));
        }
        if views.len() != index_vectors.len() {
            return Err(Error::Contract(format!(
                "{} views but {} index vectors",
                views.len(),
                index_vectors.len()
            )));
        }
        let mut covered = vec![false; n_total];
        for (i, (x, h)) in views.iter().zip(&index_vectors).enumerate() {
            if x.rows() != h.len() {
                return Err(Error::Contract(format!(
                    "view {i} has {} rows but its index vector has {} entries",
                    x.rows(),
                    h.len()
                )));
            }
            if h.upper_bound() > n_total {
                return Err(Error::Contract(format!(
                    "view {i} references sample {} of {n_total}",
                    h.upper_bound() - 1
                )));
            }
            for &p in h.iter() {
                covered[p] = true;
            }
        }
        if let Some(p) = covered.iter().position(|c| !c) {
            return Err(Error::Data(format!("sample {p} is observed in no view")));
        }
        if let Some(l) = &labels {
            if l.len() != n_total {
                return Err(Error::Contract(format!(
                    "{} labels for {n_total} samples",
                    l.len()
                )));
            }
        }
        Ok(Self {
            views,
            index_vectors,
            n_total,
            labels,
        })
    }

    /// Wraps fully observed views (every view has all `n` rows).
    pub fn complete(views: Vec<Matrix>, labels: Option<LabelVector>) -> Result<Self> {
        let n = views.first().map_or(0, Matrix::rows);
        let h = vec![IndexVector::full(n); views.len()];
        Self::new(views, h, n, labels)
    }

    /// Keeps only the rows each view observes under `mask`.
    pub fn from_mask(
        complete_views: &[Matrix],
        mask: &Mask,
        labels: Option<LabelVector>,
    ) -> Result<Self> {
        if complete_views.len() != mask.num_views() {
            return Err(Error::Contract(format!(
                "{} views but mask has {} columns",
                complete_views.len(),
                mask.num_views()
            )));
        }
        let index_vectors = mask.index_vectors();
        let mut views = Vec::with_capacity(complete_views.len());
        for (i, (x, h)) in complete_views.iter().zip(&index_vectors).enumerate() {
            if x.rows() != mask.num_samples() {
                return Err(Error::Contract(format!(
                    "view {i} has {} rows, mask has {}",
                    x.rows(),
                    mask.num_samples()
                )));
            }
            views.push(gather(x, h)?);
        }
        Self::new(views, index_vectors, mask.num_samples(), labels)
    }

    pub fn views(&self) -> &[Matrix] {
        &self.views
    }

    pub fn index_vectors(&self) -> &[IndexVector] {
        &self.index_vectors
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn num_samples(&self) -> usize {
        self.n_total
    }

    pub fn labels(&self) -> Option<&LabelVector> {
        self.labels.as_ref()
    }

    pub fn mask(&self) -> Mask {
        Mask::from_index_vectors(self.n_total, &self.index_vectors)
            .expect("dataset invariants imply a valid mask")
    }
}
