//! Sample-to-anchor bipartite graphs.
//!
//! Each sample connects to its `knn` nearest anchors. With `d_1 <= ... <= d_{knn+1}`
//! the sorted squared distances, anchor `q` among the nearest gets
//!
//! ```text
//! b_q = (d_{knn+1} - d_q) / (knn * d_{knn+1} - Σ_{j<=knn} d_j)
//! ```
//!
//! so every row sums to one. Normalization then scales column `q` by
//! `deg_q^{-1/2}`, where `deg_q` is the total weight anchor `q` receives.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};

pub const DEFAULT_KNN: usize = 5;
/// Denominators at or below this (relative to `knn * d_{knn+1}`) fall back to uniform weights.
const TIE_EPS: f64 = 1e-12;
const ZERO_DEGREE_EPS: f64 = 1e-12;

/// Sparse n_i x m graph with exactly `knn` stored entries per row.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    rows: usize,
    cols: usize,
    knn: usize,
    anchors: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    normalized: bool,
}

impl BipartiteGraph {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn knn(&self) -> usize {
        self.knn
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Column sums of the raw graph.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// `(anchor, weight)` pairs stored for sample `p`, nearest anchor first.
    pub fn row_entries(&self, p: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = p * self.knn..(p + 1) * self.knn;
        self.anchors[span.clone()]
            .iter()
            .copied()
            .zip(self.weights[span].iter().copied())
    }

    pub fn nonzeros_in_row(&self, p: usize) -> usize {
        self.row_entries(p).filter(|&(_, w)| w != 0.0).count()
    }

    pub fn to_dense(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for p in 0..self.rows {
            for (q, w) in self.row_entries(p) {
                out[(p, q)] += w;
            }
        }
        out
    }

    /// Writes `row,col,weight` triplets for the stored non-zero entries.
    pub fn write_triplets(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        for p in 0..self.rows {
            for (q, w) in self.row_entries(p).filter(|&(_, w)| w != 0.0) {
                writeln!(out, "{p},{q},{w}").map_err(|e| Error::io(path, e))?;
            }
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Connects every row of `x` (n_i x d) to its `knn` nearest rows of `anchors` (m x d).
pub fn build_bipartite(x: &Matrix, anchors: &Matrix, knn: usize) -> Result<BipartiteGraph> {
    let m = anchors.rows();
    if knn == 0 || knn >= m {
        return Err(Error::Argument(format!(
            "graph knn must satisfy 1 <= knn < m, got knn = {knn}, m = {m}"
        )));
    }
    if x.cols() != anchors.cols() {
        return Err(Error::Contract(format!(
            "samples have {} features, anchors {}",
            x.cols(),
            anchors.cols()
        )));
    }
    let n = x.rows();
    let mut anchor_idx = Vec::with_capacity(n * knn);
    let mut weights = Vec::with_capacity(n * knn);
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(m);
    for (p, row) in x.row_iter().enumerate() {
        dist.clear();
        dist.extend(
            anchors
                .row_iter()
                .enumerate()
                .map(|(q, a)| (squared_distance(row, a), q)),
        );
        if let Some(&(d, _)) = dist.iter().find(|(d, _)| !d.is_finite()) {
            return Err(Error::Data(format!(
                "sample {p} has non-finite anchor distance {d}"
            )));
        }
        let by_distance =
            |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if knn + 1 < m {
            dist.select_nth_unstable_by(knn, by_distance);
        }
        dist[..=knn].sort_unstable_by(by_distance);
        let cutoff = dist[knn].0;
        // Σ (d_{knn+1} - d_j) equals the closed-form denominator and keeps rows summing to one.
        let numerators: Vec<f64> = dist[..knn].iter().map(|&(d, _)| cutoff - d).collect();
        let denom: f64 = numerators.iter().sum();
        let uniform = denom <= TIE_EPS * (knn as f64 * cutoff).max(1.0);
        for (&(_, q), num) in dist[..knn].iter().zip(&numerators) {
            anchor_idx.push(q);
            weights.push(if uniform {
                1.0 / knn as f64
            } else {
                num / denom
            });
        }
    }
    let mut degrees = vec![0.0; m];
    for (&q, &w) in anchor_idx.iter().zip(&weights) {
        degrees[q] += w;
    }
    Ok(BipartiteGraph {
        rows: n,
        cols: m,
        knn,
        anchors: anchor_idx,
        weights,
        degrees,
        normalized: false,
    })
}

/// Returns `B = B̄ Λ^{-1/2}`; anchors that receive no weight keep an all-zero column.
pub fn normalize(mut g: BipartiteGraph) -> Result<BipartiteGraph> {
    if g.normalized {
        return Err(Error::Contract("graph is already normalized".into()));
    }
    let scale: Vec<f64> = g
        .degrees
        .iter()
        .map(|&d| {
            if d > ZERO_DEGREE_EPS {
                d.sqrt().recip()
            } else {
                0.0
            }
        })
        .collect();
    for (w, &q) in g.weights.iter_mut().zip(&g.anchors) {
        *w *= scale[q];
    }
    g.normalized = true;
    Ok(g)
}

/// Builds the raw graph and normalizes it in one step.
pub fn build_normalized(x: &Matrix, anchors: &Matrix, knn: usize) -> Result<BipartiteGraph> {
    normalize(build_bipartite(x, anchors, knn)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_weights() {
        let x = Matrix::from_rows(&[[0.0]]);
        let a = Matrix::from_rows(&[[1.0], [2.0], [3.0]]);
        let g = build_bipartite(&x, &a, 2).unwrap();
        let dense = g.to_dense();
        assert!((dense[(0, 0)] - 8.0 / 13.0).abs() < 1e-15);
        assert!((dense[(0, 1)] - 5.0 / 13.0).abs() < 1e-15);
        assert_eq!(dense[(0, 2)], 0.0);
    }

    #[test]
    fn coincident_anchor_dominates() {
        let x = Matrix::from_rows(&[[1.0, 1.0]]);
        let a = Matrix::from_rows(&[[1.0, 1.0], [9.0, 0.0], [0.0, 9.0], [7.0, 7.0]]);
        let g = build_bipartite(&x, &a, 3).unwrap();
        let row = g.to_dense();
        let sum: f64 = row.row(0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(row.row(0).iter().all(|&w| w <= row[(0, 0)]));
    }

    #[test]
    fn equidistant_anchors_fall_back_to_uniform() {
        let x = Matrix::from_rows(&[[0.0, 0.0]]);
        let a = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]);
        let g = build_bipartite(&x, &a, 3).unwrap();
        let weights: Vec<f64> = g.row_entries(0).map(|(_, w)| w).collect();
        assert_eq!(weights, vec![1.0 / 3.0; 3]);
        // Ties resolve to the lowest anchor indices.
        let chosen: Vec<usize> = g.row_entries(0).map(|(q, _)| q).collect();
        assert_eq!(chosen, vec![0, 1, 2]);
    }

    #[test]
    fn knn_bounds() {
        let x = Matrix::from_rows(&[[0.0]]);
        let a = Matrix::from_rows(&[[1.0], [2.0]]);
        assert!(matches!(
            build_bipartite(&x, &a, 2),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            build_bipartite(&x, &a, 0),
            Err(Error::Argument(_))
        ));
        assert!(build_bipartite(&x, &a, 1).is_ok());
    }

    #[test]
    fn normalization_examples() {
        // One sample, one used anchor with weight 1.
        let x = Matrix::from_rows(&[[0.0]]);
        let a = Matrix::from_rows(&[[0.0], [5.0]]);
        let g = normalize(build_bipartite(&x, &a, 1).unwrap()).unwrap();
        assert_eq!(g.to_dense().row(0), &[1.0, 0.0]);
        assert_eq!(g.degrees(), &[1.0, 0.0]);

        // Two samples both fully on anchor 0: degree 2.
        let x = Matrix::from_rows(&[[0.0], [0.1]]);
        let g = normalize(build_bipartite(&x, &a, 1).unwrap()).unwrap();
        let dense = g.to_dense();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((dense[(0, 0)] - h).abs() < 1e-15 && (dense[(1, 0)] - h).abs() < 1e-15);
        // Anchor 1 unused: column stays zero.
        assert_eq!(dense.column(1), vec![0.0, 0.0]);

        assert!(matches!(normalize(g), Err(Error::Contract(_))));
    }

    #[test]
    fn triplet_dump() {
        let x = Matrix::from_rows(&[[0.0]]);
        let a = Matrix::from_rows(&[[1.0], [2.0], [3.0]]);
        let g = build_bipartite(&x, &a, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        g.write_triplets(&path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("0,0,"));
    }
}
