//! The binary's exit codes and output files.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TEN_ACTIONS: &str = r#"{"seq":1,"user":"u1","parent":null}
{"seq":2,"user":"u2","parent":1}
{"seq":3,"user":"u3","parent":null}
{"seq":4,"user":"u3","parent":1}
{"seq":5,"user":"u4","parent":3}
{"seq":6,"user":"u1","parent":3}
{"seq":7,"user":"u5","parent":3}
{"seq":8,"user":"u2","parent":null}
{"seq":9,"user":"u6","parent":8}
{"seq":10,"user":"u6","parent":9}
"#;

fn simstream(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simstream")).args(args).output().unwrap()
}

fn ten_action_file(dir: &Path) -> String {
    let path = dir.join("ten.ndjson");
    fs::write(&path, TEN_ACTIONS).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn runs_the_ten_action_stream_and_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let input = ten_action_file(dir.path());
    let results = dir.path().join("results.csv");
    let metrics = dir.path().join("metrics.csv");
    let out = simstream(&[
        "run", "--engine", "exact", "--input", &input, "--n", "8", "--l", "1", "--k", "2", "--beta", "0.3",
        "--out-results", results.to_str().unwrap(), "--out-metrics", metrics.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["slides"], 10);

    let text = fs::read_to_string(&results).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "seq,engine,k,value,seeds,checkpoints,update_micros");
    assert_eq!(rows.len(), 11);
    assert!(rows[8].starts_with("8,exact,2,5.0,"), "{}", rows[8]);
    assert!(rows[10].starts_with("10,exact,2,6.0,"), "{}", rows[10]);
    assert_eq!(fs::read_to_string(&metrics).unwrap().lines().count(), 11);
}

#[test]
fn bad_configuration_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = ten_action_file(dir.path());
    for args in [
        vec!["run", "--engine", "sic", "--input", &input, "--l", "0"],
        vec!["run", "--engine", "sic", "--input", &input, "--n", "8", "--l", "1", "--beta", "1.5"],
        vec!["run", "--engine", "sic", "--input", &input, "--n", "8", "--l", "1", "--filter-box", "1,1,0,0"],
        vec!["run", "--engine", "nope", "--input", &input],
    ] {
        let out = simstream(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn malformed_input_exits_3_in_strict_mode_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ndjson");
    fs::write(&path, format!("{TEN_ACTIONS}{{oops\n")).unwrap();
    let path = path.to_str().unwrap();
    let base = ["run", "--engine", "ic", "--input", path, "--n", "8", "--l", "1", "--k", "2"];

    let out = simstream(&[&base[..], &["--strict"]].concat());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 11"));

    let out = simstream(&base);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["skipped_records"], 1);
}

#[test]
fn missing_input_exits_4() {
    let out = simstream(&["run", "--engine", "ic", "--input", "/nonexistent/stream.ndjson"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let gen = |name: &str, seed: &str| {
        let path = dir.path().join(name);
        let manifest = dir.path().join(format!("{name}.json"));
        let out = simstream(&[
            "gen", "--preset", "syn-o", "--actions", "2000", "--seed", seed,
            "--out", path.to_str().unwrap(), "--manifest", manifest.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(manifest).unwrap()).unwrap();
        assert_eq!(m["summary"]["actions"], 2000);
        fs::read(path).unwrap()
    };
    let a = gen("a.ndjson", "5");
    assert_eq!(a, gen("b.ndjson", "5"));
    assert_ne!(a, gen("c.ndjson", "6"));
    assert_eq!(a.iter().filter(|&&b| b == b'\n').count(), 2000);
}

#[test]
fn generated_runs_report_the_generator() {
    let out = simstream(&[
        "run", "--engine", "sic", "--gen", "--actions", "3000", "--seed", "1", "--n", "1000", "--l", "100",
        "--k", "5", "--query-every", "10",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["slides"], 30);
    assert_eq!(summary["queries"], 3);
    assert_eq!(summary["generator"]["actions"], 3000);
}
