//! Command-line experiments: synthesize data, draw masks, fit, sweep
//! hyperparameters, run ablations and score label files.

pub mod experiment;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use rise::datagen::{generate_blobs, BlobConfig};
use rise::io::{read_labels, write_labels, write_mask, write_matrix};
use rise::kmeans::AnchorStrategy;
use rise::masking::generate_mask;
use rise::metrics::{evaluate, Scores};
use rise::optimizer::Completion;
use rise::pipeline::PipelineConfig;

use experiment::{fit, DataSource, Fitted, RawData, StageTimings};

/// Version of the `result.json` layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "rise",
    version,
    about = "Rotation-invariant incomplete multi-view clustering"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write seeded multi-view Gaussian blobs (view_<i>.rmat, labels.txt).
    Synth(SynthArgs),
    /// Write a random missing-view mask (mask.csv).
    Mask(MaskArgs),
    /// Fit once and write result.json, trace.csv and consensus.rmat.
    Run(RunArgs),
    /// Repeat fits over a list of values of one hyperparameter (sweep.csv).
    Sweep(SweepArgs),
    /// Compare completion strategies and anchor strategies (ablation.csv).
    Ablate(AblateArgs),
    /// Score predicted labels against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub clusters: usize,
    #[arg(long, default_value_t = 3)]
    pub views: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write mask.csv with this missing rate.
    #[arg(long)]
    pub missing_rate: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub latent_dim: usize,
    /// Feature dimension of every view [default: 2 * latent-dim].
    #[arg(long)]
    pub view_dim: Option<usize>,
    #[arg(long, default_value_t = 10.0)]
    pub center_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub views: usize,
    #[arg(long)]
    pub missing_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// View matrix (RMAT or CSV); repeat once per view.
    #[arg(long = "view", required = true)]
    pub views: Vec<PathBuf>,
    /// Ground-truth labels, one integer per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// 0/1 CSV mask (n rows, one column per view); views may then hold only observed rows.
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

impl DataArgs {
    fn source(&self) -> DataSource {
        DataSource {
            views: self.views.clone(),
            labels: self.labels.clone(),
            mask: self.mask.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Number of clusters c [default: number of classes in --labels].
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Anchors per view (m).
    #[arg(long, default_value_t = 50)]
    pub anchors: usize,
    /// Embedding dimension k [default: clusters].
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Nearest anchors per sample in the bipartite graph.
    #[arg(long, default_value_t = rise::graph::DEFAULT_KNN)]
    pub graph_knn: usize,
    #[arg(long, default_value_t = rise::optimizer::DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = rise::optimizer::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    /// Relative objective change that stops the iterations.
    #[arg(long, default_value_t = rise::optimizer::DEFAULT_REL_TOL)]
    pub tol: f64,
    /// second_order or first_order.
    #[arg(long, default_value = "second_order")]
    pub completion: Completion,
    /// kmeans or random.
    #[arg(long, default_value = "kmeans")]
    pub anchor_strategy: AnchorStrategy,
    /// Run the final k-means on unit-length consensus rows (recommended for incomplete data).
    #[arg(long)]
    pub row_normalize: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of samples with at least one missing view (ignored with --mask).
    #[arg(long, default_value_t = 0.0)]
    pub missing_rate: f64,
}

impl ModelArgs {
    fn config(&self, labels: Option<&rise::LabelVector>) -> Result<PipelineConfig> {
        let clusters = match (self.clusters, labels) {
            (Some(c), _) => c,
            (None, Some(l)) => l.num_classes(),
            (None, None) => {
                bail!("validating configuration: --clusters is required without --labels")
            }
        };
        let mut cfg =
            PipelineConfig::new(clusters, self.anchors, self.embed_dim.unwrap_or(clusters));
        cfg.knn = self.graph_knn;
        cfg.anchor_strategy = self.anchor_strategy;
        cfg.rise.beta = self.beta;
        cfg.rise.max_iters = self.max_iters;
        cfg.rise.rel_tol = self.tol;
        cfg.rise.seed = self.seed;
        cfg.rise.completion = self.completion;
        cfg.rise.row_normalize = self.row_normalize;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Negate the initial embedding of this view (sign-mismatch experiments).
    #[arg(long)]
    pub flip_init_view: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Beta,
    Anchors,
    EmbedDim,
    MissingRate,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub axis: SweepAxis,
    /// Comma-separated values of the swept parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<String>,
    /// Repeats per value; repeat r uses seed + r.
    #[arg(long, default_value_t = 10)]
    pub repeats: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Repeats per combination; repeat r uses seed + r for every combination.
    #[arg(long, default_value_t = 10)]
    pub repeats: u64,
    /// Negate the initial embedding of this view (sign-mismatch experiments).
    #[arg(long)]
    pub flip_init_view: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted labels, one integer per line.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth labels, one integer per line.
    #[arg(long)]
    pub truth: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => synth(&args),
        Command::Mask(args) => mask(&args),
        Command::Run(args) => run_once(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Ablate(args) => ablate(&args),
        Command::Eval(args) => eval(&args),
    }
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("writing outputs: cannot create {}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing outputs: {}", path.display()))
}

/// Pool sized by `RISE_THREADS` (unset or 0: one thread per core).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var("RISE_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .with_context(|| format!("RISE_THREADS must be a non-negative integer, got {s:?}"))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("starting worker threads")
}

fn synth(args: &SynthArgs) -> Result<()> {
    let cfg = BlobConfig {
        n: args.n,
        c: args.clusters,
        v: args.views,
        latent_dim: args.latent_dim,
        view_dims: vec![args.view_dim.unwrap_or(2 * args.latent_dim); args.views],
        cluster_spread: args.spread,
        center_scale: args.center_scale,
        noise_sigma: args.noise,
        seed: args.seed,
    };
    let (data, labels) = generate_blobs(&cfg).context("generating blobs")?;
    create_out_dir(&args.out)?;
    for (i, x) in data.views().iter().enumerate() {
        let path = args.out.join(format!("view_{i}.rmat"));
        write_matrix(x, &path).with_context(|| format!("writing outputs: {}", path.display()))?;
    }
    let path = args.out.join("labels.txt");
    write_labels(&labels, &path).with_context(|| format!("writing outputs: {}", path.display()))?;
    if let Some(p) = args.missing_rate {
        let m = generate_mask(args.n, args.views, p, args.seed).context("masking")?;
        let path = args.out.join("mask.csv");
        write_mask(&m, &path).with_context(|| format!("writing outputs: {}", path.display()))?;
    }
    Ok(())
}

fn mask(args: &MaskArgs) -> Result<()> {
    let m = generate_mask(args.n, args.views, args.missing_rate, args.seed).context("masking")?;
    create_out_dir(&args.out)?;
    let path = args.out.join("mask.csv");
    write_mask(&m, &path).with_context(|| format!("writing outputs: {}", path.display()))
}

#[derive(Serialize)]
struct Manifest<'a> {
    data: &'a DataSource,
    missing_rate: f64,
    flip_init_view: Option<usize>,
    config: &'a PipelineConfig,
}

#[derive(Serialize)]
struct ViewSummary {
    observed: usize,
    features: usize,
}

#[derive(Serialize)]
struct RunReport<'a> {
    schema_version: u32,
    manifest: Manifest<'a>,
    samples: usize,
    views: Vec<ViewSummary>,
    metrics: Option<Scores>,
    iterations: usize,
    converged: bool,
    final_objective: Option<f64>,
    timings: StageTimings,
}

fn run_once(args: &RunArgs) -> Result<()> {
    let source = args.data.source();
    let raw = RawData::load(&source)?;
    let cfg = args.model.config(raw.labels.as_ref())?;
    let dataset = raw.dataset(args.model.missing_rate, args.model.seed)?;
    let Fitted {
        result,
        scores,
        timings,
    } = fit(&dataset, &cfg, args.flip_init_view)?;

    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        manifest: Manifest {
            data: &source,
            missing_rate: args.model.missing_rate,
            flip_init_view: args.flip_init_view,
            config: &cfg,
        },
        samples: dataset.num_samples(),
        views: dataset
            .views()
            .iter()
            .map(|x| ViewSummary {
                observed: x.rows(),
                features: x.cols(),
            })
            .collect(),
        metrics: scores,
        iterations: result.iterations,
        converged: result.converged,
        final_objective: result.objective_trace.last().copied(),
        timings,
    };

    create_out_dir(&args.out)?;
    let json = serde_json::to_string_pretty(&report).context("writing outputs: result.json")?;
    write_text(&args.out.join("result.json"), &(json + "\n"))?;

    let mut trace = Vec::new();
    let mut elapsed = 0.0;
    for (i, (obj, secs)) in result
        .objective_trace
        .iter()
        .zip(&result.timings.iteration_secs)
        .enumerate()
    {
        elapsed += secs;
        trace.push(vec![
            (i + 1).to_string(),
            obj.to_string(),
            format!("{:.3}", elapsed * 1e3),
        ]);
    }
    write_csv(
        &args.out.join("trace.csv"),
        &["iteration", "objective", "elapsed_ms"],
        &trace,
    )?;

    let path = args.out.join("consensus.rmat");
    write_matrix(&result.consensus, &path)
        .with_context(|| format!("writing outputs: {}", path.display()))?;
    let path = args.out.join("assignments.txt");
    write_labels(&result.labels, &path)
        .with_context(|| format!("writing outputs: {}", path.display()))?;

    match scores {
        Some(s) => println!(
            "ACC {:.4}  NMI {:.4}  Purity {:.4}  ({} iterations)",
            s.acc, s.nmi, s.purity, result.iterations
        ),
        None => println!(
            "{} iterations, no labels to score against",
            result.iterations
        ),
    }
    Ok(())
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let context = || format!("writing outputs: {}", path.display());
    let mut w = csv::Writer::from_path(path).with_context(context)?;
    w.write_record(header).with_context(context)?;
    for row in rows {
        w.write_record(row).with_context(context)?;
    }
    w.flush().with_context(context)
}

const OUTCOME_HEADER: [&str; 8] = [
    "status",
    "acc",
    "nmi",
    "purity",
    "iterations",
    "converged",
    "seconds",
    "message",
];

/// Metric columns of one fitted cell, or empty columns plus the error as a warning.
fn outcome_columns(outcome: &Result<Fitted>) -> Vec<String> {
    match outcome {
        Ok(f) => {
            let (acc, nmi, purity) = match f.scores {
                Some(s) => (s.acc.to_string(), s.nmi.to_string(), s.purity.to_string()),
                None => Default::default(),
            };
            vec![
                "ok".into(),
                acc,
                nmi,
                purity,
                f.result.iterations.to_string(),
                f.result.converged.to_string(),
                format!("{:.6}", f.timings.total_secs),
                String::new(),
            ]
        }
        Err(e) => {
            let mut cols = vec![String::new(); OUTCOME_HEADER.len()];
            cols[0] = "warning".into();
            cols[7] = format!("{e:#}");
            cols
        }
    }
}

fn with_outcome_header(keys: &[&'static str]) -> Vec<&'static str> {
    keys.iter().chain(&OUTCOME_HEADER).copied().collect()
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let raw = RawData::load(&args.data.source())?;
    let base = args.model.config(raw.labels.as_ref())?;
    if args.axis == SweepAxis::MissingRate && !raw.is_complete() {
        bail!("validating configuration: a missing-rate sweep needs complete views and no --mask");
    }
    let cells: Vec<(usize, u64)> = (0..args.values.len())
        .flat_map(|v| (0..args.repeats).map(move |r| (v, r)))
        .collect();
    let pool = thread_pool()?;
    let mut rows: Vec<((usize, u64), Vec<String>)> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(v, r)| {
                let seed = args.model.seed.wrapping_add(r);
                let outcome = sweep_cell(&raw, &base, args, &args.values[v], seed);
                let mut row = vec![
                    args.axis
                        .to_possible_value()
                        .unwrap()
                        .get_name()
                        .to_string(),
                    args.values[v].clone(),
                    r.to_string(),
                    seed.to_string(),
                ];
                row.extend(outcome_columns(&outcome));
                ((v, r), row)
            })
            .collect()
    });
    rows.sort_by_key(|(key, _)| *key);

    let rows: Vec<Vec<String>> = rows.into_iter().map(|(_, row)| row).collect();
    create_out_dir(&args.out)?;
    write_csv(
        &args.out.join("sweep.csv"),
        &with_outcome_header(&["axis", "value", "repeat", "seed"]),
        &rows,
    )?;
    let warnings = rows.iter().filter(|row| row[4] == "warning").count();
    println!("{} rows written ({warnings} warnings)", rows.len());
    Ok(())
}

fn sweep_cell(
    raw: &RawData,
    base: &PipelineConfig,
    args: &SweepArgs,
    value: &str,
    seed: u64,
) -> Result<Fitted> {
    let mut cfg = base.clone();
    cfg.rise.seed = seed;
    let mut missing_rate = args.model.missing_rate;
    let parse_count = |what: &str| -> Result<usize> {
        value.trim().parse::<usize>().with_context(|| {
            format!(
                "validating configuration: {what} value {value:?} is not a non-negative integer"
            )
        })
    };
    let parse_real = |what: &str| -> Result<f64> {
        value.trim().parse::<f64>().with_context(|| {
            format!("validating configuration: {what} value {value:?} is not a number")
        })
    };
    match args.axis {
        SweepAxis::Beta => cfg.rise.beta = parse_real("beta")?,
        SweepAxis::Anchors => cfg.anchors = parse_count("anchors")?,
        SweepAxis::EmbedDim => cfg.rise.embed_dim = parse_count("embed-dim")?,
        SweepAxis::MissingRate => missing_rate = parse_real("missing-rate")?,
    }
    let dataset = raw.dataset(missing_rate, seed)?;
    fit(&dataset, &cfg, None)
}

fn ablate(args: &AblateArgs) -> Result<()> {
    let raw = RawData::load(&args.data.source())?;
    let base = args.model.config(raw.labels.as_ref())?;
    let combos = [
        (Completion::SecondOrder, AnchorStrategy::KMeans),
        (Completion::SecondOrder, AnchorStrategy::Random),
        (Completion::FirstOrder, AnchorStrategy::KMeans),
        (Completion::FirstOrder, AnchorStrategy::Random),
    ];
    // Every combination sees the same mask for a given repeat.
    let datasets = (0..args.repeats)
        .map(|r| raw.dataset(args.model.missing_rate, args.model.seed.wrapping_add(r)))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(u64, usize)> = (0..args.repeats)
        .flat_map(|r| (0..combos.len()).map(move |c| (r, c)))
        .collect();
    let pool = thread_pool()?;
    let mut rows: Vec<((u64, usize), Vec<String>)> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(r, c)| {
                let (completion, strategy) = combos[c];
                let seed = args.model.seed.wrapping_add(r);
                let mut cfg = base.clone();
                cfg.rise.seed = seed;
                cfg.rise.completion = completion;
                cfg.anchor_strategy = strategy;
                let outcome = fit(&datasets[r as usize], &cfg, args.flip_init_view);
                let mut row = vec![
                    completion.to_string(),
                    strategy.to_string(),
                    r.to_string(),
                    seed.to_string(),
                ];
                row.extend(outcome_columns(&outcome));
                ((r, c), row)
            })
            .collect()
    });
    rows.sort_by_key(|(key, _)| *key);

    let rows: Vec<Vec<String>> = rows.into_iter().map(|(_, row)| row).collect();
    create_out_dir(&args.out)?;
    write_csv(
        &args.out.join("ablation.csv"),
        &with_outcome_header(&["completion", "anchor_strategy", "repeat", "seed"]),
        &rows,
    )?;
    println!("{} rows written", rows.len());
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    samples: usize,
    #[serde(flatten)]
    scores: Scores,
}

fn eval(args: &EvalArgs) -> Result<()> {
    let pred = read_labels(&args.pred)
        .with_context(|| format!("loading labels from {}", args.pred.display()))?;
    let truth = read_labels(&args.truth)
        .with_context(|| format!("loading labels from {}", args.truth.display()))?;
    let scores = evaluate(&pred, &truth).context("evaluation")?;
    let report = EvalReport {
        samples: pred.len(),
        scores,
    };
    println!("{}", serde_json::to_string(&report).context("evaluation")?);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_line_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn failed_cells_keep_the_column_count() {
        let cols = outcome_columns(&Err(anyhow::anyhow!("bad, very bad")));
        assert_eq!(cols.len(), OUTCOME_HEADER.len());
        assert_eq!(
            (cols[0].as_str(), cols[7].as_str()),
            ("warning", "bad, very bad")
        );
    }

    #[test]
    fn clusters_default_to_label_classes() {
        let cli = Cli::parse_from(["rise", "run", "--view", "x.rmat", "--out", "o"]);
        let Command::Run(args) = cli.command else {
            panic!()
        };
        let labels = rise::LabelVector::new(vec![0, 1, 2, 1]);
        let cfg = args.model.config(Some(&labels)).unwrap();
        assert_eq!((cfg.clusters, cfg.rise.embed_dim), (3, 3));
        assert!(args.model.config(None).is_err());
    }
}
