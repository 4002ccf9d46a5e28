//! Loading inputs and running one isolated pipeline cell with stage-labelled errors.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use rise::io::{read_labels, read_mask, read_matrix};
use rise::masking::{gather, generate_mask};
use rise::metrics::{evaluate, Scores};
use rise::optimizer::{init_embeddings, run_rise_from, RiseResult};
use rise::pipeline::{build_graphs, select_all_anchors, PipelineConfig};
use rise::{LabelVector, Mask, Matrix, MultiViewDataset};

/// Input files exactly as given on the command line.
#[derive(Debug, Clone, Serialize)]
pub struct DataSource {
    pub views: Vec<PathBuf>,
    pub labels: Option<PathBuf>,
    pub mask: Option<PathBuf>,
}

/// Views, labels and mask after reading; masking is applied per cell.
#[derive(Debug, Clone)]
pub struct RawData {
    pub views: Vec<Matrix>,
    pub labels: Option<LabelVector>,
    pub mask: Option<Mask>,
}

impl RawData {
    pub fn load(source: &DataSource) -> Result<Self> {
        if source.views.is_empty() {
            bail!("loading data: at least one --view is required");
        }
        let views = source
            .views
            .iter()
            .enumerate()
            .map(|(i, path)| {
                read_matrix(path)
                    .with_context(|| format!("loading view {i} from {}", path.display()))
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = source
            .labels
            .as_ref()
            .map(|path| {
                read_labels(path).with_context(|| format!("loading labels from {}", path.display()))
            })
            .transpose()?;
        let mask = source
            .mask
            .as_ref()
            .map(|path| {
                read_mask(path).with_context(|| format!("loading mask from {}", path.display()))
            })
            .transpose()?;
        Ok(Self {
            views,
            labels,
            mask,
        })
    }

    /// Whether every view has one row per sample (so a fresh mask can be drawn).
    pub fn is_complete(&self) -> bool {
        self.mask.is_none()
    }

    /// Builds the incomplete dataset for one cell.
    ///
    /// With a mask file, each view may hold either all `n` rows (observed rows
    /// are picked out) or only its observed rows. Without one, views must be
    /// complete and a mask with `missing_rate` is drawn from `seed`.
    pub fn dataset(&self, missing_rate: f64, seed: u64) -> Result<MultiViewDataset> {
        let v = self.views.len();
        let dataset = match &self.mask {
            Some(mask) => {
                if missing_rate > 0.0 {
                    bail!("masking: --missing-rate cannot be combined with --mask");
                }
                if mask.num_views() != v {
                    bail!(
                        "masking: mask has {} views, {v} view files given",
                        mask.num_views()
                    );
                }
                let n = mask.num_samples();
                let h = mask.index_vectors();
                let views = self
                    .views
                    .iter()
                    .zip(&h)
                    .enumerate()
                    .map(|(i, (x, hi))| {
                        if x.rows() == n {
                            Ok(gather(x, hi)?)
                        } else if x.rows() == hi.len() {
                            Ok(x.clone())
                        } else {
                            bail!(
                                "masking: view {i} has {} rows, expected {n} (all samples) or {} (observed)",
                                x.rows(),
                                hi.len()
                            )
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                MultiViewDataset::new(views, h, n, self.labels.clone())
            }
            None => {
                let n = self.views[0].rows();
                if let Some(i) = self.views.iter().position(|x| x.rows() != n) {
                    bail!(
                        "masking: view {i} has {} rows but view 0 has {n}; pass --mask for incomplete views",
                        self.views[i].rows()
                    );
                }
                let mask = if missing_rate > 0.0 {
                    generate_mask(n, v, missing_rate, seed).context("masking")?
                } else {
                    Mask::complete(n, v)
                };
                MultiViewDataset::from_mask(&self.views, &mask, self.labels.clone())
            }
        };
        dataset.context("assembling dataset")
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StageTimings {
    pub anchors_secs: f64,
    pub graph_secs: f64,
    pub init_secs: f64,
    pub iterations_secs: f64,
    pub cluster_secs: f64,
    pub total_secs: f64,
}

pub struct Fitted {
    pub result: RiseResult,
    pub scores: Option<Scores>,
    pub timings: StageTimings,
}

/// Anchors, graphs, alternating optimization, final k-means and scores.
///
/// `flip_init_view` negates the initial embedding of that view, which builds
/// a sign-mismatch instance when views are duplicated.
pub fn fit(
    dataset: &MultiViewDataset,
    cfg: &PipelineConfig,
    flip_init_view: Option<usize>,
) -> Result<Fitted> {
    cfg.rise.validate().context("validating configuration")?;
    if cfg.anchors < cfg.clusters {
        bail!(
            "validating configuration: {} anchors cannot represent {} clusters",
            cfg.anchors,
            cfg.clusters
        );
    }
    let mut timings = StageTimings::default();

    let tick = Instant::now();
    let anchors = select_all_anchors(dataset, cfg.anchors, cfg.anchor_strategy, cfg.rise.seed)
        .context("anchor selection")?;
    timings.anchors_secs = tick.elapsed().as_secs_f64();

    let tick = Instant::now();
    let graphs = build_graphs(dataset, &anchors, cfg.knn).context("graph construction")?;
    timings.graph_secs = tick.elapsed().as_secs_f64();

    let tick = Instant::now();
    let mut init =
        init_embeddings(&graphs, cfg.rise.embed_dim).context("spectral initialization")?;
    if let Some(i) = flip_init_view {
        let f = init
            .get_mut(i)
            .with_context(|| format!("spectral initialization: no view {i} to flip"))?;
        *f = f.scaled(-1.0);
    }
    timings.init_secs = tick.elapsed().as_secs_f64();

    let result =
        run_rise_from(dataset, &graphs, &cfg.rise, cfg.clusters, init).context("optimization")?;
    timings.iterations_secs = result.timings.iteration_secs.iter().sum();
    timings.cluster_secs = result.timings.cluster_secs;
    timings.total_secs = timings.anchors_secs
        + timings.graph_secs
        + timings.init_secs
        + timings.iterations_secs
        + timings.cluster_secs;

    let scores = dataset
        .labels()
        .map(|truth| evaluate(&result.labels, truth))
        .transpose()
        .context("evaluation")?;
    Ok(Fitted {
        result,
        scores,
        timings,
    })
}
