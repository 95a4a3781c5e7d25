mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use textmix::embedding::read_store;

use common::fixture;

fn textmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_textmix"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn inspect_golden_store() {
    let o = textmix(&["inspect", fixture("golden.smtx").to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("dim=4 entries=6\n"), "{text}");
    assert!(text.contains("class alpha: 3"));
    assert!(text.contains("class beta: 3"));
    assert!(text.contains("norm min=1.000000"));
}

#[test]
fn inspect_missing_file_is_data_error() {
    let o = textmix(&["inspect", "/nonexistent/store.smtx"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn clean_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = textmix(&[
        "clean",
        "--corpus",
        fixture("newsgroups/posts.jsonl").to_str().unwrap(),
        "--seed",
        "1",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "kept=5 dropped=1");
    let cleaned = fs::read_to_string(dir.path().join("cleaned.jsonl")).unwrap();
    assert_eq!(cleaned.lines().count(), 5);
    let first: Value = serde_json::from_str(cleaned.lines().next().unwrap()).unwrap();
    assert_eq!(
        first["text"],
        fs::read_to_string(fixture("newsgroups/header.expected.txt")).unwrap()
    );
    let manifest = read_json(&dir.path().join("run_manifest.json"));
    assert_eq!(manifest["stats"]["dropped_after_cleaning"], 1);
}

#[test]
fn encode_then_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = textmix(&[
        "encode",
        "--corpus",
        fixture("tiny.jsonl").to_str().unwrap(),
        "--encoder",
        "mock",
        "--encoder-dim",
        "32",
        "--seed",
        "3",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let store_path = dir.path().join("vectors/store.smtx");
    let store = read_store(&store_path).unwrap();
    assert_eq!((store.dim(), store.len()), (32, 8));
    let o = textmix(&["inspect", store_path.to_str().unwrap()]);
    assert!(stdout(&o).contains("class A: 4"));
}

#[test]
fn augment_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        serde_json::json!({
            "corpus": fixture("tiny.jsonl"),
            "encoder_dim": 64,
            "quotas": {"A": 3, "B": 2},
            "k_neighbors": 2,
            "decoder": "mock",
            "decode_mode": "text",
            "seed": 11,
        })
        .to_string(),
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = textmix(&[
        "augment",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("A: real=4 synthetic=3"));

    let synthetic = read_store(&out.join("synthetic/synthetic.smtx")).unwrap();
    assert_eq!(synthetic.len(), 5);
    let provenance = fs::read_to_string(out.join("synthetic/provenance.jsonl")).unwrap();
    for line in provenance.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let lambda = v["lambda"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&lambda));
        assert_ne!(v["parent_a"], v["parent_b"]);
        let label = v["label"].as_str().unwrap();
        for parent in [&v["parent_a"], &v["parent_b"]] {
            assert!(parent.as_str().unwrap().to_uppercase().starts_with(label));
        }
    }
    let decoded = fs::read_to_string(out.join("synthetic/decoded.jsonl")).unwrap();
    assert_eq!(decoded.lines().count(), 5);

    let manifest = read_json(&out.join("run_manifest.json"));
    assert_eq!(manifest["command"], "augment");
    assert_eq!(manifest["config"]["seed"], 11);
    assert!(manifest["config"].get("out").is_none());
    assert_eq!(manifest["stats"]["n_synthetic"], 5);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        serde_json::json!({"corpus": fixture("tiny.jsonl"), "budget": 4, "k_neighbors": 2, "seed": 1})
            .to_string(),
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = textmix(&[
        "--config",
        config.to_str().unwrap(),
        "augment",
        "--seed",
        "99",
        "--encoder-dim",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = read_json(&out.join("run_manifest.json"));
    assert_eq!(manifest["config"]["seed"], 99);
    assert_eq!(read_store(&out.join("vectors/real.smtx")).unwrap().dim(), 16);
}

#[test]
fn eval_writes_three_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = textmix(&[
        "eval",
        "--corpus",
        fixture("clinical.jsonl").to_str().unwrap(),
        "--train-fraction",
        "0.6",
        "--balance-to-max",
        "--budget",
        "30",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    // both a budget and balance_to_max: configuration error, nothing written
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let o = textmix(&[
        "eval",
        "--corpus",
        fixture("clinical.jsonl").to_str().unwrap(),
        "--train-fraction",
        "0.6",
        "--budget",
        "30",
        "--k-neighbors",
        "3",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    assert!(table.contains("Accuracy") && table.contains("Macro F1") && table.contains("Weighted F1"));
    let mut n_test = None;
    for condition in ["real_only", "real_plus_synthetic", "synthetic_only"] {
        let report = read_json(&out.join(format!("reports/{condition}.json")));
        let keys: Vec<&String> = report.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 9, "{keys:?}");
        assert_eq!(report["condition"], condition);
        assert_eq!(report["seed"], 5);
        let n = report["n_test"].as_u64().unwrap();
        assert_eq!(*n_test.get_or_insert(n), n);
    }
    assert_eq!(n_test, Some(18));
    assert_eq!(read_store(&out.join("vectors/real.smtx")).unwrap().len(), 27);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    let tiny = fixture("tiny.jsonl");
    let tiny = tiny.to_str().unwrap();

    // missing seed
    let o = textmix(&["augment", "--corpus", tiny, "--budget", "2", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    // unknown flag value
    let o = textmix(&["augment", "--corpus", tiny, "--metric", "manhattan", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));

    // unreachable encoder service
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    let o = textmix(&[
        "augment", "--corpus", tiny, "--budget", "2", "--seed", "1", "--out", out, "--encoder", &url,
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("embed"));

    // malformed corpus
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"text\": \"ok\", \"label\": \"A\"}\n{not json}\n").unwrap();
    let o = textmix(&[
        "augment", "--corpus", bad.to_str().unwrap(), "--budget", "2", "--seed", "1", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2"), "{}", String::from_utf8_lossy(&o.stderr));
}
