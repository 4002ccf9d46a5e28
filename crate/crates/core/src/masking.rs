//! Missing-view simulation and the gather/scatter operators.
//!
//! A sample-selection matrix `Q` (n x n_i, one 1 per column) is never built.
//! Multiplying by `Qᵀ` is a row gather through an [`IndexVector`], and
//! multiplying by `Q` is the zero-padded scatter back to all `n` rows. Both
//! cost O(n_i k) time and the index vector itself is O(n_i) memory.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAX_MASK_ATTEMPTS: usize = 100;

/// Strictly increasing sample positions observed by one view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexVector(Vec<usize>);

impl IndexVector {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Contract(format!(
                "index vector not strictly increasing at {} >= {}",
                w[0], w[1]
            )));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::Contract(format!(
                    "index {last} out of range for {n} samples"
                )));
            }
        }
        Ok(Self(indices))
    }

    /// `[0, 1, ..., n-1]`.
    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// One past the largest index, or 0 when empty.
    pub fn upper_bound(&self) -> usize {
        self.0.last().map_or(0, |&p| p + 1)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }
}

/// n x v availability table; `true` means sample `p` is observed in view `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    n: usize,
    v: usize,
    table: Vec<bool>,
}

impl Mask {
    pub fn new(table: Vec<Vec<bool>>) -> Result<Self> {
        let n = table.len();
        let v = table.first().map_or(0, Vec::len);
        if n == 0 || v == 0 {
            return Err(Error::Argument(
                "mask must have at least one row and one view".into(),
            ));
        }
        if let Some(p) = table.iter().position(|r| r.len() != v) {
            return Err(Error::Contract(format!(
                "mask row {p} has a different view count"
            )));
        }
        let flat = table.into_iter().flatten().collect();
        Self::from_flat(n, v, flat)
    }

    fn from_flat(n: usize, v: usize, table: Vec<bool>) -> Result<Self> {
        let mask = Self { n, v, table };
        if let Some(p) = (0..n).find(|&p| mask.row(p).iter().all(|x| !x)) {
            return Err(Error::Data(format!("sample {p} is observed in no view")));
        }
        if let Some(i) = (0..v).find(|&i| (0..n).all(|p| !mask.get(p, i))) {
            return Err(Error::Data(format!("view {i} observes no sample")));
        }
        Ok(mask)
    }

    /// A mask with every sample observed in every view.
    pub fn complete(n: usize, v: usize) -> Self {
        Self {
            n,
            v,
            table: vec![true; n * v],
        }
    }

    /// Rebuilds the availability table from per-view index vectors.
    pub fn from_index_vectors(n: usize, index_vectors: &[IndexVector]) -> Result<Self> {
        let v = index_vectors.len();
        let mut table = vec![false; n * v];
        for (i, h) in index_vectors.iter().enumerate() {
            if h.upper_bound() > n {
                return Err(Error::Contract(format!(
                    "view {i} indexes past {n} samples"
                )));
            }
            for &p in h.iter() {
                table[p * v + i] = true;
            }
        }
        Self::from_flat(n, v, table)
    }

    pub fn num_samples(&self) -> usize {
        self.n
    }

    pub fn num_views(&self) -> usize {
        self.v
    }

    #[inline]
    pub fn get(&self, p: usize, i: usize) -> bool {
        self.table[p * self.v + i]
    }

    pub fn row(&self, p: usize) -> &[bool] {
        &self.table[p * self.v..(p + 1) * self.v]
    }

    /// Number of samples observed in every view.
    pub fn num_complete(&self) -> usize {
        (0..self.n)
            .filter(|&p| self.row(p).iter().all(|&x| x))
            .count()
    }

    /// Per-view ascending indices of observed samples.
    pub fn index_vectors(&self) -> Vec<IndexVector> {
        (0..self.v)
            .map(|i| IndexVector((0..self.n).filter(|&p| self.get(p, i)).collect()))
            .collect()
    }
}

/// Convenience alias matching the operation name used across the tooling.
pub fn mask_to_index_vectors(mask: &Mask) -> Vec<IndexVector> {
    mask.index_vectors()
}

/// Simulates incomplete multi-view data.
///
/// `round((1 - p) n)` samples, chosen uniformly, keep every view. Each other
/// sample keeps a uniformly drawn non-empty proper subset of the views. The
/// whole draw is repeated (from the same seeded stream) if some view ends up
/// observing nothing.
pub fn generate_mask(n: usize, v: usize, p: f64, seed: u64) -> Result<Mask> {
    if n == 0 || v == 0 {
        return Err(Error::Argument("mask needs n >= 1 and v >= 1".into()));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Argument(format!("missing rate {p} outside [0, 1)")));
    }
    if v == 1 && p > 0.0 {
        return Err(Error::InfeasibleDrop(p));
    }
    let n_complete = ((1.0 - p) * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_MASK_ATTEMPTS {
        let mut table = vec![false; n * v];
        let mut complete = vec![false; n];
        for p in index::sample(&mut rng, n, n_complete) {
            complete[p] = true;
        }
        for (p, row) in table.chunks_exact_mut(v).enumerate() {
            if complete[p] {
                row.fill(true);
            } else {
                draw_proper_subset(&mut rng, row);
            }
        }
        if let Ok(mask) = Mask::from_flat(n, v, table) {
            return Ok(mask);
        }
    }
    Err(Error::DegenerateMask(MAX_MASK_ATTEMPTS))
}

/// Uniform over the `2^v - 2` subsets that keep at least one view and drop at least one.
fn draw_proper_subset<R: Rng>(rng: &mut R, row: &mut [bool]) {
    loop {
        for x in row.iter_mut() {
            *x = rng.random_bool(0.5);
        }
        let kept = row.iter().filter(|&&x| x).count();
        if kept > 0 && kept < row.len() {
            return;
        }
    }
}

/// Row selection `Qᵀ Y`: row `j` of the result is row `h[j]` of `y`.
pub fn gather(y: &Matrix, h: &IndexVector) -> Result<Matrix> {
    if h.upper_bound() > y.rows() {
        return Err(Error::Contract(format!(
            "gather index {} out of range for {} rows",
            h.upper_bound() - 1,
            y.rows()
        )));
    }
    let mut data = Vec::with_capacity(h.len() * y.cols());
    for &p in h.iter() {
        data.extend_from_slice(y.row(p));
    }
    Ok(Matrix::from_raw(h.len(), y.cols(), data))
}

/// Zero-padded placement `Q F`: row `h[j]` of the result is row `j` of `f`.
pub fn scatter(f: &Matrix, h: &IndexVector, n: usize) -> Result<Matrix> {
    if f.rows() != h.len() {
        return Err(Error::Contract(format!(
            "scatter of {} rows through {} indices",
            f.rows(),
            h.len()
        )));
    }
    if h.upper_bound() > n {
        return Err(Error::Contract(format!(
            "scatter index {} out of range for {n} rows",
            h.upper_bound() - 1
        )));
    }
    let mut out = Matrix::zeros(n, f.cols());
    for (j, &p) in h.iter().enumerate() {
        out.row_mut(p).copy_from_slice(f.row(j));
    }
    Ok(out)
}
