//! End-to-end CLI behavior: exit codes, diagnostics, file emission, and
//! byte-reproducibility of whole invocations.

use std::path::Path;
use std::process::{Command, Output};

fn trilab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trilab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

const C5_GRAPH: &str = "# C5 fixture\n5 relay relay relay relay relay\n\
                        0 1 50 1000000\n1 2 50 1000000\n2 3 50 1000000\n3 4 50 1000000\n0 4 50 1000000\n";

#[test]
fn graph_metrics_on_c5_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "c5.graph", C5_GRAPH);
    let out = trilab(
        &["graph-metrics", &graph, "--out-dir", "metrics"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("graph_metrics,7,5,5,2,2,2,1.5,2"),
        "kappa=2 lambda=2 mean_path=1.5 expected, got: {stdout}"
    );
    assert!(dir.path().join("metrics/graph_metrics_seed7.json").exists());
    assert!(dir
        .path()
        .join("metrics/graph_metrics_summary.csv")
        .exists());
}

#[test]
fn malformed_scenario_exits_two_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "bad.json", "{ \"schema_version\": 1, }");
    let out = trilab(
        &["trilemma", &scenario, "--out-dir", "should_not_exist"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("error"), "diagnostic expected: {stderr}");
    assert!(
        !dir.path().join("should_not_exist").exists(),
        "no partial outputs on config errors"
    );
}

#[test]
fn unknown_field_diagnostic_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(
        dir.path(),
        "typo.json",
        r#"{ "schema_version": 1, "graph_metrics": { "graph_text": "x", "bogus": 3 } }"#,
    );
    let out = trilab(&["graph-metrics", &scenario], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn missing_scenario_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = trilab(&["trilemma", "no_such_file.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn completed_evaluation_with_failing_predicates_exits_zero() {
    // Exit code reports completion, not verdicts.
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(
        dir.path(),
        "majority.json",
        &serde_json::json!({
            "schema_version": 1,
            "trilemma": {
                "topology": { "kind": { "star": { "leaves": 9 } } },
                "relay": { "unicast_gossip": { "fanout": 2 } },
                "partitions": 2,
                "block_interval_ms": 600000.0,
                "block_size_policy": "unbounded",
                "adversary": { "alpha": 0.6, "reorg_depth": 2, "unit_cost": 1.0, "resource_bound": 1e12 },
                "s3_thresholds": { "k": 2, "l": 2, "max_mean_path": 4.0 },
                "security_threshold": 0.01,
                "mc_trials": 500,
                "s2_n_grid": [100, 200, 300],
                "seeds": [3]
            }
        })
        .to_string(),
    );
    let out = trilab(&["trilemma", &scenario, "--out-dir", "rep"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("false"),
        "verdicts belong in the report: {stdout}"
    );
}

#[test]
fn merkle_vectors_emit_then_check_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = trilab(
        &[
            "merkle-vectors",
            "emit",
            "--max-leaves",
            "9",
            "--out-dir",
            "vectors",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let file = dir.path().join("vectors/merkle_vectors.txt");
    let check = trilab(
        &["merkle-vectors", "check", &file.to_string_lossy()],
        dir.path(),
    );
    assert!(check.status.success());
    assert!(String::from_utf8_lossy(&check.stdout).contains("all verify"));

    // A corrupted vector is a runtime failure: exit 1.
    let text = std::fs::read_to_string(&file).unwrap();
    let corrupted: Vec<String> = text
        .lines()
        .map(|line| {
            if !line.starts_with('#') && line.contains("R:") {
                line.replacen("R:", "L:", 1)
            } else {
                line.to_string()
            }
        })
        .collect();
    std::fs::write(&file, corrupted.join("\n")).unwrap();
    let recheck = trilab(
        &["merkle-vectors", "check", &file.to_string_lossy()],
        dir.path(),
    );
    assert_eq!(recheck.status.code(), Some(1));
}

#[test]
fn quiet_suppresses_stdout_but_not_files() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "c5.graph", C5_GRAPH);
    let out = trilab(
        &["graph-metrics", &graph, "--quiet", "--out-dir", "q"],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(dir.path().join("q/graph_metrics_summary.csv").exists());
}

#[test]
fn json_format_prints_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "c5.graph", C5_GRAPH);
    let out = trilab(&["graph-metrics", &graph, "--format", "json"], dir.path());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let line = stdout.lines().next().unwrap();
    let value: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(value["kappa"], 2);
}

fn dir_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn invocations_are_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(
        dir.path(),
        "prop.json",
        &serde_json::json!({
            "schema_version": 1,
            "propagation": {
                "topology": { "kind": { "random_regular": { "n": 32, "degree": 4 } } },
                "source": 0,
                "relay": { "unicast_gossip": { "fanout": 2 } },
                "message": { "kind": "full_block", "size": 50000 }
            },
            "seeds": [1, 2, 3]
        })
        .to_string(),
    );
    let run = |out_dir: &str| {
        let out = trilab(&["propagate", &scenario, "--out-dir", out_dir], dir.path());
        assert!(out.status.success());
        out.stdout
    };
    let stdout_a = run("a");
    let stdout_b = run("b");
    assert_eq!(stdout_a, stdout_b, "stdout must be byte-identical");
    assert_eq!(
        dir_snapshot(&dir.path().join("a")),
        dir_snapshot(&dir.path().join("b")),
        "emitted files must be byte-identical"
    );
}

#[test]
fn seed_flag_overrides_scenario_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "c5.graph", C5_GRAPH);
    let out = trilab(
        &["graph-metrics", &graph, "--seed", "42", "--out-dir", "s"],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(dir.path().join("s/graph_metrics_seed42.json").exists());
}
