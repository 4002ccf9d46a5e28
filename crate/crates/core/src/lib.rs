//! Rotation-invariant spectral embedding for incomplete multi-view clustering.
//!
//! Each view gets a sparse sample-to-anchor graph and a spectral embedding
//! learned only from the samples it observes. A complete consensus embedding
//! is fused from those partial embeddings by matching second-order affinities
//! `Y Yᵀ ≈ Q F Fᵀ Qᵀ`, which is immune to the arbitrary rotations (and sign
//! flips) that separate eigen-solvers give each view. Both alternating updates
//! reduce to truncated SVDs of thin matrices, so one iteration is linear in
//! the number of samples.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`io`] | RMAT/CSV matrices, label and mask files |
//! | [`datagen`] | Seeded synthetic multi-view blobs |
//! | [`masking`] | Missing-view simulation, gather/scatter |
//! | [`kmeans`] | k-means++ / Lloyd, anchor selection |
//! | [`graph`] | Anchor bipartite graphs and their normalization |
//! | [`linalg`] | Jacobi eigensolver, Gram-route truncated SVD |
//! | [`optimizer`] | The alternating updates and objective |
//! | [`metrics`] | ACC, NMI, purity |
//! | [`pipeline`] | Everything above wired together |
//!
//! ```
//! use rise::datagen::{generate_blobs, BlobConfig};
//! use rise::masking::generate_mask;
//! use rise::pipeline::{fit, PipelineConfig};
//! use rise::MultiViewDataset;
//!
//! let (complete, labels) = generate_blobs(&BlobConfig::separated(200, 4, 2, 7)).unwrap();
//! let mask = generate_mask(200, 2, 0.5, 7).unwrap();
//! let data = MultiViewDataset::from_mask(complete.views(), &mask, Some(labels)).unwrap();
//! let mut cfg = PipelineConfig::new(4, 20, 4);
//! // Samples seen in fewer views get shorter consensus rows; normalize before k-means.
//! cfg.rise.row_normalize = true;
//! let out = fit(&data, &cfg).unwrap();
//! assert!(out.scores.unwrap().acc > 0.9);
//! ```

pub mod datagen;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod io;
pub mod kmeans;
pub mod linalg;
pub mod masking;
pub mod matrix;
pub mod metrics;
pub mod optimizer;
pub mod pipeline;

pub use dataset::{LabelVector, MultiViewDataset};
pub use error::{Error, Result};
pub use masking::{IndexVector, Mask};
pub use matrix::Matrix;
pub use optimizer::{Completion, RiseConfig, RiseResult};
