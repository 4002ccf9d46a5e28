//! Lloyd's k-means with k-means++ seeding.
//!
//! Used twice by the method: to place the anchors of each view and to turn the
//! consensus embedding into cluster labels.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};

pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub centers: Matrix,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia of every assignment step, starting with the seeding.
    pub inertia_history: Vec<f64>,
}

/// Runs k-means++ seeding followed by Lloyd iterations.
///
/// Stops once no center moves by `tol` or more (Euclidean), or after
/// `max_iters` updates. Clusters that lose all their points take over the
/// point farthest from its current center. Distance ties go to the lowest
/// center index.
pub fn kmeans(
    points: &Matrix,
    m: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<KMeansResult> {
    let n = points.rows();
    if m == 0 || n < m {
        return Err(Error::Argument(format!(
            "k-means needs 1 <= m <= n, got m = {m} with n = {n}"
        )));
    }
    if points.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::Data("non-finite point coordinates".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_init(points, m, &mut rng);
    let mut assignments = vec![0; n];
    let mut distances = vec![0.0; n];
    let mut history = Vec::new();
    let mut iterations = 0;

    loop {
        let inertia = assign(points, &centers, &mut assignments, &mut distances);
        history.push(inertia);
        if iterations == max_iters {
            break;
        }
        let next = update_centers(points, m, &mut assignments);
        iterations += 1;
        let shift = (0..m)
            .map(|c| squared_distance(centers.row(c), next.row(c)))
            .fold(0.0f64, f64::max)
            .sqrt();
        centers = next;
        if shift < tol {
            let inertia = assign(points, &centers, &mut assignments, &mut distances);
            history.push(inertia);
            break;
        }
    }

    Ok(KMeansResult {
        centers,
        assignments,
        inertia: *history.last().unwrap(),
        iterations,
        inertia_history: history,
    })
}

/// Best of `restarts` independent runs (lowest inertia), seeded `seed, seed+1, ...`.
pub fn kmeans_restarts(
    points: &Matrix,
    m: usize,
    seed: u64,
    restarts: usize,
    max_iters: usize,
    tol: f64,
) -> Result<KMeansResult> {
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) {
        let run = kmeans(points, m, seed.wrapping_add(r as u64), max_iters, tol)?;
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

fn plus_plus_init(points: &Matrix, m: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = points.rows();
    let mut chosen = Vec::with_capacity(m);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = points
        .row_iter()
        .map(|x| squared_distance(x, points.row(chosen[0])))
        .collect();
    while chosen.len() < m {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // Every point coincides with a chosen center.
            Err(_) => rng.random_range(0..n),
        };
        chosen.push(next);
        for (p, x) in points.row_iter().enumerate() {
            d2[p] = d2[p].min(squared_distance(x, points.row(next)));
        }
    }
    let mut centers = Matrix::zeros(m, points.cols());
    for (c, &p) in chosen.iter().enumerate() {
        centers.row_mut(c).copy_from_slice(points.row(p));
    }
    centers
}

fn assign(
    points: &Matrix,
    centers: &Matrix,
    assignments: &mut [usize],
    distances: &mut [f64],
) -> f64 {
    let mut inertia = 0.0;
    for (p, x) in points.row_iter().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, center) in centers.row_iter().enumerate() {
            let d = squared_distance(x, center);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        assignments[p] = best;
        distances[p] = best_d;
        inertia += best_d;
    }
    inertia
}

/// Cluster means, with empty clusters repaired in place.
fn update_centers(points: &Matrix, m: usize, assignments: &mut [usize]) -> Matrix {
    let d = points.cols();
    let mut sums = Matrix::zeros(m, d);
    let mut counts = vec![0usize; m];
    for (x, &c) in points.row_iter().zip(assignments.iter()) {
        counts[c] += 1;
        sums.row_mut(c).iter_mut().zip(x).for_each(|(s, v)| *s += v);
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            let inv = 1.0 / count as f64;
            sums.row_mut(c).iter_mut().for_each(|s| *s *= inv);
        }
    }
    let mut centers = sums;

    // Moving the farthest point of a multi-point cluster into an empty one
    // can only lower the inertia, so Lloyd's monotonicity is preserved.
    let mut moved = vec![false; points.rows()];
    for empty in (0..m).filter(|&c| counts[c] == 0).collect::<Vec<_>>() {
        let donor = points
            .row_iter()
            .enumerate()
            .filter(|&(p, _)| !moved[p] && counts[assignments[p]] > 1)
            .map(|(p, x)| (p, squared_distance(x, centers.row(assignments[p]))))
            .fold(None, |best: Option<(usize, f64)>, (p, dist)| match best {
                Some((_, bd)) if bd >= dist => best,
                _ => Some((p, dist)),
            });
        if let Some((p, _)) = donor {
            counts[assignments[p]] -= 1;
            counts[empty] = 1;
            assignments[p] = empty;
            moved[p] = true;
            centers.row_mut(empty).copy_from_slice(points.row(p));
        }
    }
    centers
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorStrategy {
    #[serde(rename = "kmeans")]
    KMeans,
    Random,
}

impl std::str::FromStr for AnchorStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" | "k-means" => Ok(Self::KMeans),
            "random" => Ok(Self::Random),
            other => Err(Error::Argument(format!(
                "unknown anchor strategy {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for AnchorStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::KMeans => "kmeans",
            Self::Random => "random",
        })
    }
}

/// Picks `m` anchors among the observed samples of one view.
pub fn select_anchors(
    view: &Matrix,
    strategy: AnchorStrategy,
    m: usize,
    seed: u64,
) -> Result<Matrix> {
    let n = view.rows();
    if m == 0 || n < m {
        return Err(Error::Argument(format!(
            "cannot select {m} anchors from {n} samples"
        )));
    }
    match strategy {
        AnchorStrategy::KMeans => {
            Ok(kmeans(view, m, seed, DEFAULT_MAX_ITERS, DEFAULT_TOL)?.centers)
        }
        AnchorStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut anchors = Matrix::zeros(m, view.cols());
            for (a, p) in index::sample(&mut rng, n, m).into_iter().enumerate() {
                anchors.row_mut(a).copy_from_slice(view.row(p));
            }
            Ok(anchors)
        }
    }
}
