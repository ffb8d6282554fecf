use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use divtopic::corpus::{block_topics, generate_synthetic};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_divtopic"));
    c.env("RUST_LOG", "warn");
    c
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Five disjoint planted topics; small enough for debug-build test runs.
fn workspace(n_docs: usize, doc_len: usize) -> TempDir {
    let dir = TempDir::new().unwrap();
    let syn = generate_synthetic(&block_topics(5, 150, 1.0), 0.1, n_docs, doc_len, 11).unwrap();
    syn.corpus
        .save_bow(dir.path().join("docs.txt"), dir.path().join("vocab.txt"))
        .unwrap();
    dir
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn output_digests(m: &Value) -> BTreeMap<String, String> {
    m["outputs"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| {
            let name = PathBuf::from(k).file_name().unwrap().to_string_lossy().into_owned();
            (name, v.as_str().unwrap().to_string())
        })
        .collect()
}

#[test]
fn missing_vocab_is_a_usage_error() {
    let dir = workspace(50, 20);
    let out = run_in(dir.path(), &["ingest", "--docs", "docs.txt", "--out", "data"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--vocab"), "{err}");
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = workspace(50, 20);
    let out = run_in(dir.path(), &["report", "--trace", "t.csv", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_file_is_a_data_error() {
    let dir = workspace(50, 20);
    let out = run_in(
        dir.path(),
        &["train", "--model", "plsa", "--docs", "absent.txt", "--vocab", "vocab.txt", "--out", "run", "--seed", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("absent.txt"), "{err}");
    assert_eq!(err.trim().lines().count(), 1, "{err}");
}

#[test]
fn malformed_docs_are_a_data_error() {
    let dir = workspace(50, 20);
    fs::write(dir.path().join("bad.txt"), "2\n150\n1\n1 999 3\n").unwrap();
    let out = run_in(
        dir.path(),
        &["ingest", "--docs", "bad.txt", "--vocab", "vocab.txt", "--out", "data"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn options_of_another_model_conflict() {
    let dir = workspace(50, 20);
    let out = run_in(
        dir.path(),
        &["train", "--model", "plsa", "--docs", "docs.txt", "--vocab", "vocab.txt", "--out", "run", "--gamma", "1.5"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--gamma"));
}

#[test]
fn several_values_need_grid() {
    let dir = workspace(200, 30);
    let d = dir.path();
    ok(d, &["train", "--model", "plsa", "--topics", "6", "--iters", "20", "--docs", "docs.txt", "--vocab", "vocab.txt", "--out", "run", "--seed", "2"]);
    let out = run_in(d, &["select", "--model", "run/model.txt", "--method", "mmr", "--k", "3", "--lambda", "0.3,0.7", "--out", "r.csv"]);
    assert_eq!(out.status.code(), Some(1));
    ok(d, &["select", "--model", "run/model.txt", "--method", "divrank", "--k", "3", "--lambda", "0.5,0.9", "--alpha-dr", "0.1,0.25", "--grid", "--out", "grid"]);
    let files: Vec<_> = fs::read_dir(d.join("grid"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    assert_eq!(files.len(), 4, "{files:?}");
}

#[test]
fn full_pipeline() {
    let dir = workspace(300, 40);
    let d = dir.path();
    ok(d, &["ingest", "--docs", "docs.txt", "--vocab", "vocab.txt", "--holdout-docs", "30", "--seed", "5", "--out", "data"]);
    assert!(d.join("data/holdout.txt").exists());
    assert!(d.join("data/manifest.json").exists());

    ok(d, &["train", "--model", "plsa", "--topics", "8", "--iters", "40", "--docs", "data/corpus.docs", "--vocab", "data/vocab.txt", "--out", "run", "--seed", "3"]);
    let trace = csv_rows(&d.join("run/trace.csv"));
    assert_eq!(trace.len(), 41);

    for method in ["topk", "mmr", "divrank"] {
        let out = format!("{method}.csv");
        ok(d, &["select", "--model", "run/model.txt", "--method", method, "--k", "3", "--vocab", "data/vocab.txt", "--out", &out]);
        let rows = csv_rows(&d.join(&out));
        assert_eq!(rows.len(), 3);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r[0], (i + 1).to_string());
            assert_eq!(r[4].split(' ').count(), 20);
        }
    }

    ok(d, &["eval", "--metric", "perplexity", "--model", "run/model.txt", "--selection", "mmr.csv", "--holdout", "data/holdout.txt", "--out", "ppl.csv"]);
    let report = csv_rows(&d.join("ppl.csv"));
    let get = |rows: &[Vec<String>], key: &str| rows.iter().find(|r| r[0] == key).unwrap()[1].clone();
    assert_eq!(get(&report, "k_used"), "3");
    let ppl: f64 = get(&report, "perplexity").parse().unwrap();
    assert!(ppl > 1.0 && ppl.is_finite());

    let out = ok(d, &["eval", "--metric", "pmi", "--model", "run/model.txt", "--reference", "data/corpus.docs", "--reference-vocab", "data/vocab.txt", "--out", "pmi.csv"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("mean PMI"));
    let report = csv_rows(&d.join("pmi.csv"));
    let per_topic: Vec<f64> = report
        .iter()
        .filter(|r| r[0].starts_with("pmi_topic_"))
        .map(|r| r[1].parse().unwrap())
        .collect();
    assert_eq!(per_topic.len(), 8);
    let mean: f64 = get(&report, "mean_pmi").parse().unwrap();
    assert!((mean - per_topic.iter().sum::<f64>() / 8.0).abs() < 1e-9);

    ok(d, &["export-topics", "--model", "run/model.txt", "--vocab", "data/vocab.txt", "--top-words", "1", "--out", "topics.csv"]);
    let topics = csv_rows(&d.join("topics.csv"));
    assert_eq!(topics.len(), 8);
    assert!(topics.iter().all(|r| !r[3].contains(' ')));
    let total: f64 = topics.iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-6, "{total}");

    ok(d, &["export-topics", "--model", "run/model.txt", "--ranking", "divrank.csv", "--out", "picked.csv"]);
    assert_eq!(csv_rows(&d.join("picked.csv")).len(), 3);

    ok(d, &["export-network", "--model", "run/model.txt", "--vocab", "data/vocab.txt", "--out", "net"]);
    let nodes = csv_rows(&d.join("net/nodes.csv"));
    assert_eq!(nodes.len(), 8);
    assert!(nodes.iter().all(|r| r[2].split(' ').count() == 10));
    for e in csv_rows(&d.join("net/edges.csv")) {
        let w: f64 = e[2].parse().unwrap();
        assert!(w > 0.0 && w <= 1.0);
    }

    let out = ok(d, &["report", "--trace", "run/trace.csv"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().next(), Some("iteration,likelihood,active_count"));
    assert_eq!(text.lines().count(), 42);
}

#[test]
fn ranking_with_an_unknown_topic_is_rejected() {
    let dir = workspace(200, 30);
    let d = dir.path();
    ok(d, &["train", "--model", "plsa", "--topics", "4", "--iters", "10", "--docs", "docs.txt", "--vocab", "vocab.txt", "--out", "run", "--seed", "2"]);
    fs::write(d.join("r.csv"), "rank,topic_id,score,proportion,words\n1,17,0.5,0.5,a b\n").unwrap();
    let out = run_in(d, &["export-topics", "--model", "run/model.txt", "--ranking", "r.csv", "--out", "t.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("17"));
}

#[test]
fn report_rejects_a_bad_trace() {
    let dir = workspace(50, 20);
    fs::write(dir.path().join("t.csv"), "iteration,likelihood,active_count\n0,-5,3\n0,-4,3\n").unwrap();
    let out = run_in(dir.path(), &["report", "--trace", "t.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sequential_runs_reproduce_and_manifests_replay() {
    let dir = workspace(200, 30);
    let d = dir.path();
    let args = |out: &'static str| {
        vec!["train", "--model", "lda", "--topics", "5", "--sweeps", "30", "--burn-in", "10", "--docs", "docs.txt", "--vocab", "vocab.txt", "--seed", "9", "--out", out]
    };
    ok(d, &args("a"));
    ok(d, &args("b"));
    let a = manifest(&d.join("a/manifest.json"));
    let b = manifest(&d.join("b/manifest.json"));
    assert_eq!(output_digests(&a), output_digests(&b));
    assert_eq!(a["seed"], 9);
    assert_eq!(a["config"]["sweeps"], "30");
    assert_eq!(a["config"]["beta"], Value::Null);

    // Replaying a manifest with only the output redirected.
    ok(d, &["train", "--config", "a/manifest.json", "--out", "c"]);
    let c = manifest(&d.join("c/manifest.json"));
    assert_eq!(output_digests(&a), output_digests(&c));
}

#[test]
fn generated_seed_is_recorded_and_replays() {
    let dir = workspace(100, 20);
    let d = dir.path();
    ok(d, &["train", "--model", "plsa", "--topics", "3", "--iters", "5", "--docs", "docs.txt", "--vocab", "vocab.txt", "--out", "a"]);
    let a = manifest(&d.join("a/manifest.json"));
    let seed = a["seed"].as_u64().expect("seed recorded");
    assert_eq!(a["config"]["seed"], seed.to_string());
    ok(d, &["train", "--config", "a/manifest.json", "--out", "b"]);
    assert_eq!(output_digests(&a), output_digests(&manifest(&d.join("b/manifest.json"))));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = workspace(100, 20);
    let d = dir.path();
    fs::write(
        d.join("run.conf"),
        "# plsa settings\nmodel = plsa\ndocs = docs.txt\nvocab = vocab.txt\ntopics = 4\niters = 7\nseed = 1\nout = from-config\n",
    )
    .unwrap();
    ok(d, &["train", "--config", "run.conf", "--iters", "3"]);
    let m = manifest(&d.join("from-config/manifest.json"));
    assert_eq!(m["config"]["iters"], "3");
    assert_eq!(m["config"]["topics"], "4");
    assert_eq!(csv_rows(&d.join("from-config/trace.csv")).len(), 4);

    fs::write(d.join("bad.conf"), "nonsense = 3\n").unwrap();
    let out = run_in(d, &["train", "--config", "bad.conf", "--model", "plsa"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn divplsa_run_keeps_the_planted_topics() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let syn = generate_synthetic(&block_topics(5, 200, 1.0), 0.1, 600, 60, 42).unwrap();
    syn.corpus.save_bow(d.join("docs.txt"), d.join("vocab.txt")).unwrap();
    ok(d, &["train", "--model", "divplsa", "--start-topics", "20", "--gamma", "1.9", "--walk-alpha", "0.1", "--docs", "docs.txt", "--vocab", "vocab.txt", "--seed", "1", "--out", "run"]);
    let trace = csv_rows(&d.join("run/trace.csv"));
    assert_eq!(trace.first().unwrap()[2], "20");
    assert_eq!(trace.last().unwrap()[2], "5");
}
