//! Alternating optimization of view embeddings and the consensus embedding.
//!
//! The model is
//!
//! ```text
//! min  Σ_i ‖Y Yᵀ - Q_i F_i F_iᵀ Q_iᵀ‖²_F  -  β Σ_i Tr(F_iᵀ B_i B_iᵀ F_i)
//! s.t. YᵀY = I_k,  F_iᵀF_i = I_k
//! ```
//!
//! where `B_i` is the normalized anchor graph of view `i` and `Q_i` places the
//! rows observed by view `i` back among all `n` samples. Both subproblems are
//! trace maximizations whose maximizer is the top-k left singular subspace of a
//! thin concatenation:
//!
//! * consensus: `Z = [Q_1 F_1, ..., Q_v F_v]` (n x vk)
//! * view `i`:  `Z = [√2 Q_iᵀY, √β B_i]`        (n_i x (k+m))
//!
//! so every update is a Gram-route truncated SVD and costs O(n d²). Because
//! each subproblem is solved exactly, the objective never increases.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{LabelVector, MultiViewDataset};
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::kmeans;
use crate::linalg::{orthonormalize_columns, trunc_svd_left};
use crate::masking::{gather, scatter, IndexVector};
use crate::matrix::Matrix;

pub const DEFAULT_BETA: f64 = 1.0;
pub const DEFAULT_MAX_ITERS: usize = 50;
pub const DEFAULT_REL_TOL: f64 = 1e-6;
pub const DEFAULT_KMEANS_RESTARTS: usize = 10;
/// Values swept by the β sensitivity experiment.
pub const BETA_GRID: [f64; 9] = [0.01, 0.1, 1.0, 10.0, 20.0, 50.0, 100.0, 500.0, 1000.0];

/// How the complete consensus embedding is recovered from the view embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completion {
    /// Match `Y Yᵀ` to every `Q_i F_i F_iᵀ Q_iᵀ` (rotation invariant).
    SecondOrder,
    /// Average the available rows of the `F_i` directly.
    FirstOrder,
}

impl std::str::FromStr for Completion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "second_order" | "second-order" => Ok(Self::SecondOrder),
            "first_order" | "first-order" => Ok(Self::FirstOrder),
            other => Err(Error::Argument(format!(
                "unknown completion strategy {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Completion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::SecondOrder => "second_order",
            Self::FirstOrder => "first_order",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiseConfig {
    pub beta: f64,
    pub embed_dim: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub completion: Completion,
    /// Cluster unit-length rows of the consensus instead of raw rows.
    pub row_normalize: bool,
    /// Independent k-means++ runs for the final clustering; the lowest inertia wins.
    pub kmeans_restarts: usize,
}

impl RiseConfig {
    pub fn new(embed_dim: usize) -> Self {
        Self {
            beta: DEFAULT_BETA,
            embed_dim,
            max_iters: DEFAULT_MAX_ITERS,
            rel_tol: DEFAULT_REL_TOL,
            seed: 0,
            completion: Completion::SecondOrder,
            row_normalize: false,
            kmeans_restarts: DEFAULT_KMEANS_RESTARTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Argument(format!(
                "beta must be finite and >= 0, got {}",
                self.beta
            )));
        }
        if self.embed_dim == 0 {
            return Err(Error::Argument("embed_dim must be >= 1".into()));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::Argument(format!(
                "rel_tol must be > 0, got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }
}

/// Current iterate of the alternating scheme.
#[derive(Debug, Clone)]
pub struct RiseState {
    /// `F_i`, n_i x k each.
    pub embeddings: Vec<Matrix>,
    /// `Y`, n x k.
    pub consensus: Matrix,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub init_secs: f64,
    /// Wall time of each outer iteration (consensus update + view updates + objective).
    pub iteration_secs: Vec<f64>,
    pub cluster_secs: f64,
}

#[derive(Debug, Clone)]
pub struct RiseResult {
    pub consensus: Matrix,
    pub embeddings: Vec<Matrix>,
    pub labels: LabelVector,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub timings: Timings,
    pub config: RiseConfig,
}

fn check_normalized(graphs: &[BipartiteGraph]) -> Result<()> {
    if let Some(i) = graphs.iter().position(|g| !g.is_normalized()) {
        return Err(Error::Contract(format!(
            "graph of view {i} is not normalized"
        )));
    }
    Ok(())
}

/// `F_i` = top-k left singular vectors of each normalized graph.
pub fn init_embeddings(graphs: &[BipartiteGraph], k: usize) -> Result<Vec<Matrix>> {
    check_normalized(graphs)?;
    graphs
        .iter()
        .enumerate()
        .map(|(i, g)| {
            if k > g.cols() {
                return Err(Error::Argument(format!(
                    "embed_dim {k} exceeds the {} anchors of view {i}",
                    g.cols()
                )));
            }
            Ok(trunc_svd_left(&g.to_dense(), k)?.left_vectors)
        })
        .collect()
}

/// Consensus step: top-k left singular vectors of `[Q_1 F_1, ..., Q_v F_v]`.
pub fn update_consensus(
    embeddings: &[Matrix],
    index_vectors: &[IndexVector],
    n: usize,
    k: usize,
) -> Result<Matrix> {
    let z = consensus_blocks(embeddings, index_vectors, n)?;
    Ok(trunc_svd_left(&z, k)?.left_vectors)
}

/// `[Q_1 F_1, ..., Q_v F_v]` assembled by scattering rows, n x Σ k_i.
pub fn consensus_blocks(
    embeddings: &[Matrix],
    index_vectors: &[IndexVector],
    n: usize,
) -> Result<Matrix> {
    if embeddings.len() != index_vectors.len() || embeddings.is_empty() {
        return Err(Error::Contract(format!(
            "{} embeddings for {} index vectors",
            embeddings.len(),
            index_vectors.len()
        )));
    }
    let width: usize = embeddings.iter().map(Matrix::cols).sum();
    let mut z = Matrix::zeros(n, width);
    let mut offset = 0;
    for (f, h) in embeddings.iter().zip(index_vectors) {
        if f.rows() != h.len() || h.upper_bound() > n {
            return Err(Error::Contract(format!(
                "embedding with {} rows does not match {} indices over {n} samples",
                f.rows(),
                h.len()
            )));
        }
        for (j, &p) in h.iter().enumerate() {
            z.row_mut(p)[offset..offset + f.cols()].copy_from_slice(f.row(j));
        }
        offset += f.cols();
    }
    Ok(z)
}

/// View step: top-k left singular vectors of `[√2 Ŷ, √β B]` with `Ŷ = Q_iᵀ Y`.
pub fn update_embedding(
    graph: &BipartiteGraph,
    y_gathered: &Matrix,
    beta: f64,
    k: usize,
) -> Result<Matrix> {
    let z = embedding_blocks(graph, y_gathered, beta)?;
    Ok(trunc_svd_left(&z, k)?.left_vectors)
}

/// `[√2 Ŷ, √β B]`, n_i x (k + m).
pub fn embedding_blocks(graph: &BipartiteGraph, y_gathered: &Matrix, beta: f64) -> Result<Matrix> {
    if graph.rows() != y_gathered.rows() {
        return Err(Error::Contract(format!(
            "graph has {} rows, gathered consensus {}",
            graph.rows(),
            y_gathered.rows()
        )));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Argument(format!(
            "beta must be finite and >= 0, got {beta}"
        )));
    }
    if y_gathered.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::Data("non-finite consensus rows".into()));
    }
    let k = y_gathered.cols();
    let m = graph.cols();
    let (a, b) = (std::f64::consts::SQRT_2, beta.sqrt());
    let mut z = Matrix::zeros(graph.rows(), k + m);
    for p in 0..graph.rows() {
        let row = z.row_mut(p);
        for (dst, &src) in row[..k].iter_mut().zip(y_gathered.row(p)) {
            *dst = a * src;
        }
        for (q, w) in graph.row_entries(p) {
            row[k + q] += b * w;
        }
    }
    Ok(z)
}

/// `‖Bᵀ F‖²_F` from the sparse rows of `B`.
fn graph_energy(graph: &BipartiteGraph, f: &Matrix) -> f64 {
    let mut bt_f = Matrix::zeros(graph.cols(), f.cols());
    for p in 0..graph.rows() {
        let f_row = f.row(p);
        for (q, w) in graph.row_entries(p) {
            if w != 0.0 {
                bt_f.row_mut(q)
                    .iter_mut()
                    .zip(f_row)
                    .for_each(|(o, x)| *o += w * x);
            }
        }
    }
    bt_f.frobenius_norm_sq()
}

/// Objective value in O(n k² + n k m).
///
/// With orthonormal `Y` and `F_i`, `‖YYᵀ - Q F Fᵀ Qᵀ‖² = 2k - 2‖Fᵀ QᵀY‖²`.
pub fn objective(
    state: &RiseState,
    graphs: &[BipartiteGraph],
    index_vectors: &[IndexVector],
    beta: f64,
) -> Result<f64> {
    if state.embeddings.len() != graphs.len() || graphs.len() != index_vectors.len() {
        return Err(Error::Contract(
            "views, graphs and index vectors differ in count".into(),
        ));
    }
    let k = state.consensus.cols() as f64;
    let mut consensus_term = 0.0;
    let mut graph_term = 0.0;
    for ((f, g), h) in state.embeddings.iter().zip(graphs).zip(index_vectors) {
        let y_hat = gather(&state.consensus, h)?;
        consensus_term += 2.0 * k - 2.0 * f.t_matmul(&y_hat).frobenius_norm_sq();
        graph_term += graph_energy(g, f);
    }
    Ok(consensus_term - beta * graph_term)
}

/// Row-wise mean of the available view embeddings, before orthonormalization.
pub fn first_order_average(
    embeddings: &[Matrix],
    index_vectors: &[IndexVector],
    n: usize,
) -> Result<Matrix> {
    let k = embeddings.first().map_or(0, Matrix::cols);
    if embeddings.iter().any(|f| f.cols() != k) {
        return Err(Error::Contract("view embeddings differ in width".into()));
    }
    let mut sum = Matrix::zeros(n, k);
    let mut counts = vec![0usize; n];
    for (f, h) in embeddings.iter().zip(index_vectors) {
        sum.add_assign(&scatter(f, h, n)?);
        for &p in h.iter() {
            counts[p] += 1;
        }
    }
    for (p, &c) in counts.iter().enumerate() {
        if c > 1 {
            let inv = 1.0 / c as f64;
            sum.row_mut(p).iter_mut().for_each(|x| *x *= inv);
        }
    }
    Ok(sum)
}

/// Minimizer of `Σ_i ‖F_i - Q_iᵀ Y‖²` (row means), column-orthonormalized.
pub fn first_order_consensus(
    embeddings: &[Matrix],
    index_vectors: &[IndexVector],
    n: usize,
) -> Result<Matrix> {
    Ok(orthonormalize_columns(&first_order_average(
        embeddings,
        index_vectors,
        n,
    )?))
}

/// Full method: initialize from the graphs, alternate, then cluster `Y` into `c` groups.
pub fn run_rise(
    dataset: &MultiViewDataset,
    graphs: &[BipartiteGraph],
    cfg: &RiseConfig,
    c: usize,
) -> Result<RiseResult> {
    cfg.validate()?;
    let start = Instant::now();
    let init = init_embeddings(graphs, cfg.embed_dim)?;
    let init_secs = start.elapsed().as_secs_f64();
    let mut result = run_rise_from(dataset, graphs, cfg, c, init)?;
    result.timings.init_secs = init_secs;
    Ok(result)
}

/// Like [`run_rise`] but starting from caller-supplied view embeddings.
pub fn run_rise_from(
    dataset: &MultiViewDataset,
    graphs: &[BipartiteGraph],
    cfg: &RiseConfig,
    c: usize,
    init: Vec<Matrix>,
) -> Result<RiseResult> {
    cfg.validate()?;
    check_normalized(graphs)?;
    let h = dataset.index_vectors();
    let n = dataset.num_samples();
    let k = cfg.embed_dim;
    if graphs.len() != h.len() || init.len() != h.len() {
        return Err(Error::Contract(format!(
            "{} views, {} graphs, {} initial embeddings",
            h.len(),
            graphs.len(),
            init.len()
        )));
    }
    for (i, ((g, f), hi)) in graphs.iter().zip(&init).zip(h).enumerate() {
        if g.rows() != hi.len() || f.rows() != hi.len() || f.cols() != k {
            return Err(Error::Contract(format!(
                "view {i}: graph rows {}, embedding {}x{}, observed samples {}",
                g.rows(),
                f.rows(),
                f.cols(),
                hi.len()
            )));
        }
    }
    if c == 0 || c > n {
        return Err(Error::Argument(format!(
            "cannot form {c} clusters from {n} samples"
        )));
    }

    let mut timings = Timings::default();
    let mut state = RiseState {
        embeddings: init,
        consensus: Matrix::zeros(n, k),
        objective_trace: Vec::new(),
        iterations: 0,
    };
    let mut converged = false;

    match cfg.completion {
        Completion::SecondOrder => {
            if cfg.max_iters == 0 {
                state.consensus = update_consensus(&state.embeddings, h, n, k)?;
            }
            while state.iterations < cfg.max_iters {
                let tick = Instant::now();
                state.consensus = update_consensus(&state.embeddings, h, n, k)?;
                for ((f, g), hi) in state.embeddings.iter_mut().zip(graphs).zip(h) {
                    *f = update_embedding(g, &gather(&state.consensus, hi)?, cfg.beta, k)?;
                }
                let obj = objective(&state, graphs, h, cfg.beta)?;
                timings.iteration_secs.push(tick.elapsed().as_secs_f64());
                state.iterations += 1;
                let previous = state.objective_trace.last().copied();
                state.objective_trace.push(obj);
                if let Some(prev) = previous {
                    if (obj - prev).abs() <= cfg.rel_tol * (prev.abs() + 1.0) {
                        converged = true;
                        break;
                    }
                }
            }
        }
        Completion::FirstOrder => {
            // Single pass: independent spectral embeddings, then row averaging.
            let tick = Instant::now();
            state.consensus = first_order_consensus(&state.embeddings, h, n)?;
            let obj = objective(&state, graphs, h, cfg.beta)?;
            timings.iteration_secs.push(tick.elapsed().as_secs_f64());
            state.objective_trace.push(obj);
            state.iterations = 1;
            converged = true;
        }
    }

    let tick = Instant::now();
    let points = if cfg.row_normalize {
        state.consensus.row_normalized()
    } else {
        state.consensus.clone()
    };
    let clustering = kmeans::kmeans_restarts(
        &points,
        c,
        cfg.seed,
        cfg.kmeans_restarts,
        kmeans::DEFAULT_MAX_ITERS,
        kmeans::DEFAULT_TOL,
    )?;
    timings.cluster_secs = tick.elapsed().as_secs_f64();

    Ok(RiseResult {
        consensus: state.consensus,
        embeddings: state.embeddings,
        labels: LabelVector::new(clustering.assignments),
        objective_trace: state.objective_trace,
        iterations: state.iterations,
        converged,
        timings,
        config: cfg.clone(),
    })
}
