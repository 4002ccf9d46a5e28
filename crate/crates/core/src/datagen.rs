//! Seeded synthetic multi-view Gaussian blobs.
//!
//! Cluster centers live in a shared latent space; each view is a random linear
//! map of the latent samples plus view-specific Gaussian noise. All randomness
//! comes from one `ChaCha8Rng` seeded with `BlobConfig::seed`, drawn in a fixed
//! order: centers, latent samples, then per view its map and its noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{LabelVector, MultiViewDataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobConfig {
    pub n: usize,
    pub c: usize,
    pub v: usize,
    pub latent_dim: usize,
    pub view_dims: Vec<usize>,
    pub cluster_spread: f64,
    pub center_scale: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl BlobConfig {
    /// Well separated blobs: `v` views of dimension `2 * latent_dim`.
    pub fn separated(n: usize, c: usize, v: usize, seed: u64) -> Self {
        let latent_dim = 8;
        Self {
            n,
            c,
            v,
            latent_dim,
            view_dims: vec![2 * latent_dim; v],
            cluster_spread: 1.0,
            center_scale: 10.0,
            noise_sigma: 0.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c == 0 || self.n < self.c {
            return Err(Error::Argument(format!(
                "need n >= c >= 1, got n = {}, c = {}",
                self.n, self.c
            )));
        }
        if self.v == 0 || self.view_dims.len() != self.v {
            return Err(Error::Argument(format!(
                "need v >= 1 view dimensions, got v = {} with {} dims",
                self.v,
                self.view_dims.len()
            )));
        }
        if self.latent_dim == 0 || self.view_dims.contains(&0) {
            return Err(Error::Argument("all dimensions must be >= 1".into()));
        }
        for (name, x) in [
            ("cluster_spread", self.cluster_spread),
            ("center_scale", self.center_scale),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::Argument(format!(
                    "{name} must be finite and >= 0, got {x}"
                )));
            }
        }
        Ok(())
    }
}

/// Balanced labels `0, 0, ..., 1, 1, ...`; the first `n % c` clusters get one extra sample.
pub fn balanced_labels(n: usize, c: usize) -> Vec<usize> {
    let base = n / c;
    let extra = n % c;
    (0..c)
        .flat_map(|l| std::iter::repeat_n(l, base + usize::from(l < extra)))
        .collect()
}

/// Generates complete views and their ground-truth labels.
pub fn generate_blobs(cfg: &BlobConfig) -> Result<(MultiViewDataset, LabelVector)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };

    let d = cfg.latent_dim;
    let centers: Vec<f64> = (0..cfg.c * d)
        .map(|_| cfg.center_scale * normal())
        .collect();
    let labels = balanced_labels(cfg.n, cfg.c);
    let mut latent = Matrix::zeros(cfg.n, d);
    for (p, &l) in labels.iter().enumerate() {
        for (j, x) in latent.row_mut(p).iter_mut().enumerate() {
            *x = centers[l * d + j] + cfg.cluster_spread * normal();
        }
    }

    let map_scale = 1.0 / (d as f64).sqrt();
    let mut views = Vec::with_capacity(cfg.v);
    for &dim in &cfg.view_dims {
        let map_data = (0..d * dim).map(|_| map_scale * normal()).collect();
        let map = Matrix::from_raw(d, dim, map_data);
        let mut x = latent.matmul(&map);
        if cfg.noise_sigma > 0.0 {
            for p in 0..x.rows() {
                for e in x.row_mut(p) {
                    *e += cfg.noise_sigma * normal();
                }
            }
        }
        views.push(x);
    }
    let labels = LabelVector::new(labels);
    let dataset = MultiViewDataset::complete(views, Some(labels.clone()))?;
    Ok((dataset, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_gives_repeated_points() {
        let cfg = BlobConfig {
            n: 4,
            c: 2,
            v: 1,
            latent_dim: 3,
            view_dims: vec![5],
            cluster_spread: 0.0,
            center_scale: 4.0,
            noise_sigma: 0.0,
            seed: 1,
        };
        let (ds, labels) = generate_blobs(&cfg).unwrap();
        assert_eq!(labels.as_slice(), &[0, 0, 1, 1]);
        let x = &ds.views()[0];
        assert_eq!(x.row(0), x.row(1));
        assert_eq!(x.row(2), x.row(3));
        assert_ne!(x.row(0), x.row(2));
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = BlobConfig::separated(50, 3, 2, 9);
        let (a, la) = generate_blobs(&cfg).unwrap();
        let (b, lb) = generate_blobs(&cfg).unwrap();
        assert_eq!(la, lb);
        assert_eq!(a.views(), b.views());
        let (c, _) = generate_blobs(&BlobConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.views(), c.views());
    }

    #[test]
    fn cluster_sizes_differ_by_at_most_one() {
        for (n, c) in [(10, 3), (7, 7), (100, 6), (5, 1)] {
            let labels = balanced_labels(n, c);
            assert_eq!(labels.len(), n);
            let sizes: Vec<usize> = (0..c)
                .map(|l| labels.iter().filter(|&&x| x == l).count())
                .collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = BlobConfig::separated(3, 4, 2, 0);
        assert!(generate_blobs(&cfg).is_err());
        cfg.n = 10;
        cfg.view_dims = vec![3];
        assert!(generate_blobs(&cfg).is_err());
        cfg.view_dims = vec![3, 3];
        cfg.noise_sigma = -1.0;
        assert!(generate_blobs(&cfg).is_err());
    }
}
