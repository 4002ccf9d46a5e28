//! End-to-end fitting: anchors, graphs, alternating optimization, scores.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::graph::{build_normalized, BipartiteGraph, DEFAULT_KNN};
use crate::kmeans::{select_anchors, AnchorStrategy};
use crate::matrix::Matrix;
use crate::metrics::{evaluate, Scores};
use crate::optimizer::{init_embeddings, run_rise_from, RiseConfig, RiseResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub anchors: usize,
    pub knn: usize,
    pub anchor_strategy: AnchorStrategy,
    pub clusters: usize,
    pub rise: RiseConfig,
}

impl PipelineConfig {
    pub fn new(clusters: usize, anchors: usize, embed_dim: usize) -> Self {
        Self {
            anchors,
            knn: DEFAULT_KNN,
            anchor_strategy: AnchorStrategy::KMeans,
            clusters,
            rise: RiseConfig::new(embed_dim),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub result: RiseResult,
    pub anchor_secs: f64,
    pub graph_secs: f64,
    /// Present when the dataset carries ground-truth labels.
    pub scores: Option<Scores>,
}

impl PipelineOutput {
    pub fn total_secs(&self) -> f64 {
        let t = &self.result.timings;
        self.anchor_secs
            + self.graph_secs
            + t.init_secs
            + t.iteration_secs.iter().sum::<f64>()
            + t.cluster_secs
    }
}

/// Anchor seed for view `i`, so views draw independent anchor sets.
pub fn view_seed(seed: u64, view: usize) -> u64 {
    seed.wrapping_add((view as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn select_all_anchors(
    dataset: &MultiViewDataset,
    m: usize,
    strategy: AnchorStrategy,
    seed: u64,
) -> Result<Vec<Matrix>> {
    dataset
        .views()
        .iter()
        .enumerate()
        .map(|(i, x)| {
            select_anchors(x, strategy, m, view_seed(seed, i))
                .map_err(|e| Error::Argument(format!("view {i}: {e}")))
        })
        .collect()
}

pub fn build_graphs(
    dataset: &MultiViewDataset,
    anchors: &[Matrix],
    knn: usize,
) -> Result<Vec<BipartiteGraph>> {
    dataset
        .views()
        .iter()
        .zip(anchors)
        .map(|(x, a)| build_normalized(x, a, knn))
        .collect()
}

/// Runs the whole method on `dataset`.
pub fn fit(dataset: &MultiViewDataset, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    fit_with(dataset, cfg, |_| {})
}

/// Like [`fit`], letting the caller adjust the initial view embeddings.
pub fn fit_with(
    dataset: &MultiViewDataset,
    cfg: &PipelineConfig,
    adjust_init: impl FnOnce(&mut Vec<Matrix>),
) -> Result<PipelineOutput> {
    cfg.rise.validate()?;
    let tick = Instant::now();
    let anchors = select_all_anchors(dataset, cfg.anchors, cfg.anchor_strategy, cfg.rise.seed)?;
    let anchor_secs = tick.elapsed().as_secs_f64();

    let tick = Instant::now();
    let graphs = build_graphs(dataset, &anchors, cfg.knn)?;
    let graph_secs = tick.elapsed().as_secs_f64();

    let tick = Instant::now();
    let mut init = init_embeddings(&graphs, cfg.rise.embed_dim)?;
    adjust_init(&mut init);
    let init_secs = tick.elapsed().as_secs_f64();

    let mut result = run_rise_from(dataset, &graphs, &cfg.rise, cfg.clusters, init)?;
    result.timings.init_secs = init_secs;
    let scores = match dataset.labels() {
        Some(truth) => Some(evaluate(&result.labels, truth)?),
        None => None,
    };
    Ok(PipelineOutput {
        result,
        anchor_secs,
        graph_secs,
        scores,
    })
}
