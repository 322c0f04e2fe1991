//! CLI contract checks: drives the `cfgad` binary end to end on small
//! seeded graphs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cfgad::graph::{EDGES_FILE, FEATURES_FILE, LABELS_FILE};
use cfgad::harness::{CHECKPOINT_FILE, CONFIG_ECHO_FILE, METRICS_FILE, SCORES_FILE, SELECTION_FILE, TRAIN_LOG_FILE};

const SMALL: [&str; 8] = [
    "--set",
    "synthetic_n=150",
    "--set",
    "max_epochs=6",
    "--set",
    "patience=3",
    "--set",
    "synthetic_d=12",
];

fn cfgad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfgad"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = cfgad(args);
    assert!(
        out.status.success(),
        "cfgad {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn with_small<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend_from_slice(&SMALL);
    v
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn missing_graph_exits_with_code_two() {
    let out = cfgad(&["run", "--graph", "/definitely/not/here"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("graph not found"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# comment\ntau = 0.2\nno_such_key = 1\n").unwrap();
    let out = cfgad(&["run", "--graph", "synthetic", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn run_writes_every_artifact_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&with_small(&["run", "--graph", "synthetic", "--seed", "3", "--out", path(out)]));
    }
    for name in [CONFIG_ECHO_FILE, SELECTION_FILE, CHECKPOINT_FILE, TRAIN_LOG_FILE, SCORES_FILE, METRICS_FILE] {
        let x = fs::read(a.join(name)).unwrap_or_else(|_| panic!("{name} missing"));
        assert!(!x.is_empty(), "{name} empty");
        if name != TRAIN_LOG_FILE {
            // The training log records wall-clock seconds.
            assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name} differs between runs");
        }
    }
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join(METRICS_FILE)).unwrap()).unwrap();
    assert_eq!(metrics["n"], 150);
    let auc = metrics["auc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc));
}

#[test]
fn config_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&with_small(&["run", "--graph", "synthetic", "--seed", "4", "--out", path(&a)]));
    let echo = a.join(CONFIG_ECHO_FILE);
    ok(&["run", "--graph", "synthetic", "--config", path(&echo), "--out", path(&b)]);
    assert_eq!(fs::read(a.join(SCORES_FILE)).unwrap(), fs::read(b.join(SCORES_FILE)).unwrap());
}

#[test]
fn stagewise_commands_match_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let graph = d.join("graph");
    ok(&with_small(&["inject", "--graph", "synthetic", "--seed", "5", "--out", path(&graph)]));
    for name in [EDGES_FILE, FEATURES_FILE, LABELS_FILE] {
        assert!(graph.join(name).is_file(), "{name} missing");
    }

    // The injected directory already holds labels, so no second injection.
    let run = d.join("run");
    ok(&with_small(&["run", "--graph", path(&graph), "--seed", "5", "--out", path(&run)]));
    let selection = d.join("selection.csv");
    ok(&with_small(&["select", "--graph", path(&graph), "--seed", "5", "--out", path(&selection)]));
    assert_eq!(fs::read(&selection).unwrap(), fs::read(run.join(SELECTION_FILE)).unwrap());
    let rows = fs::read_to_string(&selection).unwrap();
    assert!(rows.starts_with("node_id,entropy,deviation,selected,provenance\n"));
    assert_eq!(rows.lines().count(), 1 + 150);

    let half = d.join("half.csv");
    ok(&with_small(&["select", "--graph", path(&graph), "--k-frac", "0.5", "--out", path(&half)]));
    let chosen = fs::read_to_string(&half).unwrap().lines().skip(1).filter(|l| l.split(',').nth(3) == Some("1")).count();
    assert!((1..=75).contains(&chosen), "{chosen} selected");

    let trained = d.join("trained");
    ok(&with_small(&["train", "--graph", path(&graph), "--seed", "5", "--out", path(&trained)]));
    let model = trained.join(CHECKPOINT_FILE);
    assert_eq!(fs::read(&model).unwrap(), fs::read(run.join(CHECKPOINT_FILE)).unwrap());
    assert!(trained.join(TRAIN_LOG_FILE).is_file());

    let scores = d.join("scores.csv");
    ok(&with_small(&[
        "score",
        "--graph",
        path(&graph),
        "--model",
        path(&model),
        "--out",
        path(&scores),
    ]));
    assert_eq!(fs::read(&scores).unwrap(), fs::read(run.join(SCORES_FILE)).unwrap());

    let labels = graph.join(LABELS_FILE);
    let out = ok(&["evaluate", "--scores", path(&scores), "--labels", path(&labels)]);
    let evaluated: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let piped: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join(METRICS_FILE)).unwrap()).unwrap();
    assert_eq!(evaluated, piped);
}

#[test]
fn benchmark_commands_emit_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = d.join("run");
    ok(&with_small(&["run", "--graph", "synthetic", "--out", path(&run)]));

    let out = ok(&with_small(&["oracle", "--graph", "synthetic", "--subgraphs", "5", "--max-nodes", "30"]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("sample,node_id,mode,polarity,method,success,cost,ratio"));

    let model = run.join(CHECKPOINT_FILE);
    let out = ok(&with_small(&["bench-quality", "--graph", "synthetic", "--model", path(&model), "--seeds", "2"]));
    let text = String::from_utf8(out.stdout).unwrap();
    // Counterfactual row plus three baselines per seed.
    assert_eq!(text.lines().count(), 1 + 1 + 3 * 2);

    let out = ok(&with_small(&["bench-efficiency", "--graph", "synthetic"]));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);

    let out = ok(&with_small(&[
        "ablate",
        "--graph",
        "synthetic",
        "--variants",
        "full,random-aug",
        "--seeds",
        "2",
    ]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("variant,seed,auc,f1"));
    assert!(text.lines().count() >= 1 + 4);
}

#[test]
fn bad_variant_is_a_usage_error() {
    let out = cfgad(&["ablate", "--graph", "synthetic", "--variants", "bogus"]);
    assert_eq!(out.status.code(), Some(1));
}
