use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rise::io::{read_mask, read_matrix, write_matrix};
use rise::masking::gather;

fn rise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rise"))
        .args(args)
        .env_remove("RISE_THREADS")
        .output()
        .expect("failed to launch rise")
}

fn ok(args: &[&str]) -> String {
    let out = rise(args);
    assert!(
        out.status.success(),
        "rise {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes separable blobs and returns the view paths and the labels path.
fn synth(
    dir: &Path,
    n: usize,
    clusters: usize,
    views: usize,
    seed: u64,
) -> (Vec<PathBuf>, PathBuf) {
    let out = dir.join("data");
    ok(&[
        "synth",
        "--n",
        &n.to_string(),
        "--clusters",
        &clusters.to_string(),
        "--views",
        &views.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        s(&out),
    ]);
    let views = (0..views)
        .map(|i| out.join(format!("view_{i}.rmat")))
        .collect();
    (views, out.join("labels.txt"))
}

fn data_args<'a>(views: &'a [PathBuf], labels: &'a Path) -> Vec<&'a str> {
    let mut args = Vec::new();
    for v in views {
        args.extend(["--view", s(v)]);
    }
    args.extend(["--labels", s(labels)]);
    args
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .unwrap();
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|h| h == name).unwrap()
}

fn result_json(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("result.json")).unwrap()).unwrap()
}

#[test]
fn run_recovers_separable_blobs() {
    let dir = tempfile::tempdir().unwrap();
    let (views, labels) = synth(dir.path(), 240, 3, 2, 4);
    let out = dir.path().join("run");
    let mut args = vec!["run"];
    args.extend(data_args(&views, &labels));
    args.extend(["--anchors", "20", "--out", s(&out)]);
    ok(&args);

    let json = result_json(&out);
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["metrics"]["acc"], 1.0);
    assert_eq!(json["samples"], 240);
    assert_eq!(json["manifest"]["config"]["anchor_strategy"], "kmeans");

    let trace = read_csv(&out.join("trace.csv"));
    assert_eq!(trace[0], ["iteration", "objective", "elapsed_ms"]);
    assert_eq!(
        trace.len() - 1,
        json["iterations"].as_u64().unwrap() as usize
    );
    let objectives: Vec<f64> = trace[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(
        *objectives.last().unwrap(),
        json["final_objective"].as_f64().unwrap()
    );

    let y = read_matrix(out.join("consensus.rmat")).unwrap();
    assert_eq!(y.shape(), (240, 3));
    assert!(y.orthonormality_error() < 1e-8);
}

#[test]
fn missing_view_file_fails_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent_view.rmat");
    let out = rise(&[
        "run",
        "--view",
        s(&missing),
        "--clusters",
        "2",
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(s(&missing)), "{stderr}");
    assert!(stderr.contains("loading view 0"), "{stderr}");
}

#[test]
fn repeated_runs_match_except_timings() {
    let dir = tempfile::tempdir().unwrap();
    let (views, labels) = synth(dir.path(), 200, 4, 3, 9);
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let mut args = vec!["run"];
        args.extend(data_args(&views, &labels));
        args.extend([
            "--anchors",
            "16",
            "--missing-rate",
            "0.5",
            "--seed",
            "3",
            "--out",
            s(&out),
        ]);
        ok(&args);
        outputs.push(out);
    }
    let strip = |mut v: serde_json::Value| {
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    assert_eq!(
        strip(result_json(&outputs[0])),
        strip(result_json(&outputs[1]))
    );
    let bytes = |p: &Path| fs::read(p.join("consensus.rmat")).unwrap();
    assert_eq!(bytes(&outputs[0]), bytes(&outputs[1]));
    let labels = |p: &Path| fs::read_to_string(p.join("assignments.txt")).unwrap();
    assert_eq!(labels(&outputs[0]), labels(&outputs[1]));
}

#[test]
fn mask_file_accepts_full_or_observed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (views, labels) = synth(dir.path(), 150, 3, 2, 2);
    let mask_dir = dir.path().join("mask");
    ok(&[
        "mask",
        "--n",
        "150",
        "--views",
        "2",
        "--missing-rate",
        "0.6",
        "--seed",
        "5",
        "--out",
        s(&mask_dir),
    ]);
    let mask_path = mask_dir.join("mask.csv");
    let mask = read_mask(&mask_path).unwrap();
    assert_eq!(mask.num_samples(), 150);
    assert_eq!(mask.num_complete(), 60);

    // View 1 stored with only its observed rows.
    let h = mask.index_vectors();
    let observed = dir.path().join("view_1_observed.rmat");
    write_matrix(
        &gather(&read_matrix(&views[1]).unwrap(), &h[1]).unwrap(),
        &observed,
    )
    .unwrap();

    let mut scores = Vec::new();
    for (name, second) in [("full", &views[1]), ("observed", &observed)] {
        let out = dir.path().join(name);
        let pair = [views[0].clone(), second.clone()];
        let mut args = vec!["run"];
        args.extend(data_args(&pair, &labels));
        args.extend([
            "--mask",
            s(&mask_path),
            "--anchors",
            "12",
            "--row-normalize",
            "--out",
            s(&out),
        ]);
        ok(&args);
        let json = result_json(&out);
        assert_eq!(json["views"][1]["observed"], h[1].len());
        scores.push(json["metrics"].clone());
    }
    assert_eq!(scores[0], scores[1]);
}

#[test]
fn sweep_writes_one_row_per_value_and_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let (views, labels) = synth(dir.path(), 150, 3, 2, 1);
    let out = dir.path().join("beta");
    let mut args = vec!["sweep"];
    args.extend(data_args(&views, &labels));
    args.extend([
        "--anchors",
        "12",
        "--axis",
        "beta",
        "--values",
        "0.01,1,100",
        "--repeats",
        "2",
        "--out",
        s(&out),
    ]);
    ok(&args);
    let rows = read_csv(&out.join("sweep.csv"));
    assert_eq!(rows.len() - 1, 6);
    let (value, repeat, status) = (
        column(&rows, "value"),
        column(&rows, "repeat"),
        column(&rows, "status"),
    );
    let keys: Vec<(String, String)> = rows[1..]
        .iter()
        .map(|r| (r[value].clone(), r[repeat].clone()))
        .collect();
    assert_eq!(keys[0], ("0.01".to_string(), "0".to_string()));
    assert_eq!(keys[5], ("100".to_string(), "1".to_string()));
    assert!(rows[1..].iter().all(|r| r[status] == "ok"));
}

#[test]
fn sweep_turns_invalid_values_into_warning_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (views, labels) = synth(dir.path(), 120, 4, 2, 6);
    let out = dir.path().join("anchors");
    let mut args = vec!["sweep"];
    args.extend(data_args(&views, &labels));
    args.extend([
        "--embed-dim",
        "2",
        "--axis",
        "anchors",
        "--values",
        "2,3,12,x",
        "--repeats",
        "1",
        "--out",
        s(&out),
    ]);
    ok(&args);
    let rows = read_csv(&out.join("sweep.csv"));
    let status = column(&rows, "status");
    let statuses: Vec<&str> = rows[1..].iter().map(|r| r[status].as_str()).collect();
    assert_eq!(statuses, ["warning", "warning", "ok", "warning"]);
}

#[test]
fn missing_rate_sweep_covers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let (views, labels) = synth(dir.path(), 200, 3, 3, 3);
    let out = dir.path().join("p");
    let mut args = vec!["sweep"];
    args.extend(data_args(&views, &labels));
    args.extend([
        "--anchors",
        "15",
        "--row-normalize",
        "--axis",
        "missing-rate",
        "--values",
        "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
        "--repeats",
        "1",
        "--out",
        s(&out),
    ]);
    ok(&args);
    let rows = read_csv(&out.join("sweep.csv"));
    assert_eq!(rows.len() - 1, 9);
    let status = column(&rows, "status");
    assert!(rows[1..].iter().all(|r| r[status] == "ok"), "{rows:?}");
}

#[test]
fn ablation_reports_all_four_combinations() {
    let dir = tempfile::tempdir().unwrap();
    let (views, labels) = synth(dir.path(), 200, 3, 2, 7);
    let out = dir.path().join("ablate");
    let mut args = vec!["ablate"];
    args.extend(data_args(&views, &labels));
    args.extend([
        "--anchors",
        "15",
        "--missing-rate",
        "0.7",
        "--repeats",
        "2",
        "--out",
        s(&out),
    ]);
    ok(&args);
    let rows = read_csv(&out.join("ablation.csv"));
    assert_eq!(rows.len() - 1, 8);
    let (c, a, status) = (
        column(&rows, "completion"),
        column(&rows, "anchor_strategy"),
        column(&rows, "status"),
    );
    let mut combos: Vec<(String, String)> = rows[1..]
        .iter()
        .map(|r| (r[c].clone(), r[a].clone()))
        .collect();
    combos.sort();
    combos.dedup();
    assert_eq!(combos.len(), 4);
    assert!(rows[1..].iter().all(|r| r[status] == "ok"));
}

#[test]
fn second_order_wins_on_sign_flipped_duplicate_view() {
    let dir = tempfile::tempdir().unwrap();
    let (views, labels) = synth(dir.path(), 400, 4, 1, 11);
    let duplicated = [views[0].clone(), views[0].clone()];
    let out = dir.path().join("flipped");
    let mut args = vec!["ablate"];
    args.extend(data_args(&duplicated, &labels));
    args.extend([
        "--anchors",
        "24",
        "--missing-rate",
        "0.5",
        "--row-normalize",
        "--flip-init-view",
        "1",
        "--repeats",
        "3",
        "--out",
        s(&out),
    ]);
    ok(&args);
    let rows = read_csv(&out.join("ablation.csv"));
    let (c, a, acc) = (
        column(&rows, "completion"),
        column(&rows, "anchor_strategy"),
        column(&rows, "acc"),
    );
    let mean = |completion: &str| {
        let accs: Vec<f64> = rows[1..]
            .iter()
            .filter(|r| r[c] == completion && r[a] == "kmeans")
            .map(|r| r[acc].parse().unwrap())
            .collect();
        accs.iter().sum::<f64>() / accs.len() as f64
    };
    assert!(mean("second_order") > mean("first_order"), "{rows:?}");
}

#[test]
fn eval_scores_label_files() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.txt");
    let truth = dir.path().join("truth.txt");
    fs::write(&pred, "1\n1\n0\n0\n").unwrap();
    fs::write(&truth, "0\n0\n1\n2\n").unwrap();
    let stdout = ok(&["eval", "--pred", s(&pred), "--truth", s(&truth)]);
    let json: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(json["samples"], 4);
    assert_eq!(json["acc"], 0.75);
    assert_eq!(json["purity"], 0.75);
}

#[test]
fn invalid_thread_count_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let (views, labels) = synth(dir.path(), 60, 2, 2, 0);
    let mut args = vec!["sweep"];
    args.extend(data_args(&views, &labels));
    args.extend([
        "--anchors",
        "8",
        "--axis",
        "beta",
        "--values",
        "1",
        "--repeats",
        "1",
    ]);
    let out_dir = dir.path().join("t");
    args.extend(["--out", s(&out_dir)]);
    let out = Command::new(env!("CARGO_BIN_EXE_rise"))
        .args(&args)
        .env("RISE_THREADS", "lots")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("RISE_THREADS"));
}
