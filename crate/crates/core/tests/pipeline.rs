use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rise::datagen::{generate_blobs, BlobConfig};
use rise::graph::build_normalized;
use rise::io::{
    read_labels, read_mask, read_matrix, write_labels, write_mask, write_matrix, RMAT_HEADER_LEN,
};
use rise::kmeans::AnchorStrategy;
use rise::linalg::trunc_svd_left;
use rise::masking::generate_mask;
use rise::optimizer::{run_rise, Completion, RiseConfig};
use rise::pipeline::{build_graphs, fit, select_all_anchors, PipelineConfig};
use rise::{Matrix, MultiViewDataset};

fn incomplete_blobs(n: usize, c: usize, v: usize, p: f64, seed: u64) -> MultiViewDataset {
    let (complete, labels) = generate_blobs(&BlobConfig::separated(n, c, v, seed)).unwrap();
    let mask = generate_mask(n, v, p, seed).unwrap();
    MultiViewDataset::from_mask(complete.views(), &mask, Some(labels)).unwrap()
}

#[test]
fn rmat_file_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.rmat");
    let data: Vec<f64> = (0..21)
        .map(|i| (i as f64 - 7.5) * 0.1 + 1e-17 * i as f64)
        .collect();
    let m = Matrix::new(7, 3, data).unwrap();
    write_matrix(&m, &path).unwrap();
    assert_eq!(
        std::fs::metadata(&path).unwrap().len() as usize,
        RMAT_HEADER_LEN + 21 * 8
    );
    let back = read_matrix(&path).unwrap();
    assert_eq!(back.shape(), (7, 3));
    let bits = |m: &Matrix| m.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&m));
}

#[test]
fn label_and_mask_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let labels = vec![2, 0, 0, 1, 2];
    write_labels(&labels, dir.path().join("y.txt")).unwrap();
    assert_eq!(
        read_labels(dir.path().join("y.txt")).unwrap().as_slice(),
        &[0, 1, 1, 2, 0]
    );

    let mask = generate_mask(40, 3, 0.5, 3).unwrap();
    write_mask(&mask, dir.path().join("mask.csv")).unwrap();
    assert_eq!(read_mask(dir.path().join("mask.csv")).unwrap(), mask);
}

#[test]
fn missing_file_error_names_the_path() {
    let err = read_matrix("/definitely/not/here.rmat").unwrap_err();
    assert!(
        err.to_string().contains("/definitely/not/here.rmat"),
        "{err}"
    );
}

#[test]
fn normalized_graph_spectrum_is_bounded_by_one() {
    // B = B̄ Λ^{-1/2} has singular values at most 1.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let n = rng.random_range(10..80);
        let m = rng.random_range(3..15);
        let knn = rng.random_range(1..m);
        let x = Matrix::new(
            n,
            3,
            (0..n * 3).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap();
        let a = Matrix::new(
            m,
            3,
            (0..m * 3).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap();
        let b = build_normalized(&x, &a, knn).unwrap().to_dense();
        let s = trunc_svd_left(&b, 1).unwrap().singular_values[0];
        assert!(s <= 1.0 + 1e-8, "top singular value {s}");
    }
}

#[test]
fn separable_blobs_are_recovered_exactly() {
    let data = incomplete_blobs(300, 3, 3, 0.4, 5);
    let mut cfg = PipelineConfig::new(3, 24, 3);
    cfg.rise.row_normalize = true;
    let out = fit(&data, &cfg).unwrap();
    let scores = out.scores.unwrap();
    assert_eq!(scores.acc, 1.0);
    assert!((scores.nmi - 1.0).abs() < 1e-12);
    assert!(out.result.converged);
    assert!(out.result.consensus.orthonormality_error() < 1e-8);
    for (f, h) in out.result.embeddings.iter().zip(data.index_vectors()) {
        assert_eq!(f.shape(), (h.len(), 3));
        assert!(f.orthonormality_error() < 1e-8);
    }
}

#[test]
fn fit_is_deterministic() {
    let data = incomplete_blobs(200, 4, 2, 0.3, 8);
    let cfg = PipelineConfig::new(4, 16, 4);
    let a = fit(&data, &cfg).unwrap().result;
    let b = fit(&data, &cfg).unwrap().result;
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.consensus, b.consensus);
    assert_eq!(a.objective_trace, b.objective_trace);
}

#[test]
fn random_anchors_and_first_order_run() {
    let data = incomplete_blobs(150, 3, 2, 0.2, 1);
    let anchors = select_all_anchors(&data, 12, AnchorStrategy::Random, 1).unwrap();
    for (a, x) in anchors.iter().zip(data.views()) {
        assert_eq!(a.shape(), (12, x.cols()));
    }
    let graphs = build_graphs(&data, &anchors, 4).unwrap();
    let mut cfg = RiseConfig::new(3);
    cfg.completion = Completion::FirstOrder;
    let r = run_rise(&data, &graphs, &cfg, 3).unwrap();
    assert_eq!(r.iterations, 1);
    assert_eq!(r.objective_trace.len(), 1);
    assert!(r.consensus.orthonormality_error() < 1e-8);
    assert_eq!(r.labels.len(), 150);
}

#[test]
fn graph_with_too_few_anchors_is_rejected() {
    let data = incomplete_blobs(60, 2, 2, 0.0, 2);
    let anchors = select_all_anchors(&data, 4, AnchorStrategy::KMeans, 0).unwrap();
    assert!(build_graphs(&data, &anchors, 4).is_err());
    let graphs = build_graphs(&data, &anchors, 2).unwrap();
    // Embedding dimension cannot exceed the number of anchors.
    assert!(run_rise(&data, &graphs, &RiseConfig::new(5), 2).is_err());
}
