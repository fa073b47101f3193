use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cavgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavgraph")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn validate_named_delta() {
    let o = cavgraph(&["validate", "--named", "delta"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["ok"], true);
}

#[test]
fn positively_oriented_triangle_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(
        dir.path(),
        "tri.json",
        r#"{"vertices":[1,2,3],"edges":[{"from":2,"to":1},{"from":3,"to":2},{"from":1,"to":3}]}"#,
    );
    let o = cavgraph(&["validate", "--graph", &g]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(!v["violations"].as_array().unwrap().is_empty());
    // Other commands refuse the graph with the invalid-graph code.
    assert_eq!(cavgraph(&["blocks", "--graph", &g]).status.code(), Some(5));
}

#[test]
fn error_exit_codes() {
    assert_eq!(cavgraph(&["validate", "--graph", "/definitely/missing.json"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{ not json");
    let o = cavgraph(&["validate", "--graph", &bad]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert_eq!(cavgraph(&["validate", "--named", "petersen"]).status.code(), Some(5));
    assert_eq!(cavgraph(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn k2_block_dimensions() {
    let o = cavgraph(&["blocks", "--named", "K2", "--hmax", "3", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let dims: Vec<String> = stdout(&o).lines().skip(1).map(|l| l.rsplit(',').next().unwrap().to_string()).collect();
    assert_eq!(dims, ["1", "2", "2", "2"]);

    let o = cavgraph(&["blocks", "--named", "K2", "--hmax", "3"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("blocks.csv");
    let o =
        cavgraph(&["blocks", "--named", "cascade", "--hmax", "2", "--format", "csv", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(out).unwrap().starts_with("label,h,dim"));
}

#[test]
fn bare_h0_spectrum_is_photon_counting() {
    let o = cavgraph(&["spectrum", "--named", "K2", "--hmax", "3", "--op", "h0"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for block in v.as_array().unwrap() {
        let h = block["h"].as_i64().unwrap() as f64;
        let ev: Vec<f64> = block["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        // K2 block h holds |1, h-1⟩ and |0, h⟩ (only the second for h = 0).
        let expect: Vec<f64> = if h == 0.0 { vec![0.0] } else { vec![h - 1.0, h] };
        assert_eq!(ev, expect);
    }
}

#[test]
fn controlled_spectrum_is_global() {
    let o = cavgraph(&["spectrum", "--named", "K2", "--hmax", "3", "--op", "hxy", "--x", "e1=0.3", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().skip(1).all(|l| l.starts_with("\"global\"")));
    assert_eq!(text.lines().count(), 1 + 7);
    assert_eq!(cavgraph(&["spectrum", "--named", "K2", "--op", "hd", "--x", "e1=1"]).status.code(), Some(2));
    assert_eq!(cavgraph(&["spectrum", "--named", "K2", "--op", "hxy", "--x", "e7=1"]).status.code(), Some(5));
}

#[test]
fn evolve_emits_tidy_rows() {
    let dir = tempfile::tempdir().unwrap();
    let sched = write(dir.path(), "s.json", r#"{"segments":[{"dt":0.5,"x":{"e1":0.3}},{"dt":1.0}]}"#);
    let state = write(dir.path(), "psi.json", r#"[{"v":"1","re":1}]"#);
    let args = ["evolve", "--named", "K2", "--hmax", "4", "--schedule", &sched, "--state", &state, "--format", "csv"];
    let o = cavgraph(&args);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("segment,t,norm,leakage,label,population"));
    // Three time points (initial plus two segments) times five blocks.
    assert_eq!(lines.count(), 15);
    assert_eq!(text, stdout(&cavgraph(&args)), "output is deterministic");
}

#[test]
fn preparing_the_ground_state_needs_no_steps() {
    let dir = tempfile::tempdir().unwrap();
    let state = write(dir.path(), "g.json", r#"[{"v":"1","re":1}]"#);
    let o = cavgraph(&["prepare", "--named", "cascade", "--state", &state]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["steps"].as_array().unwrap().is_empty());
    assert!((v["achieved_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn preparing_a_two_block_target() {
    let dir = tempfile::tempdir().unwrap();
    let state = write(dir.path(), "t.json", r#"[{"v":"2","photons":{"e1":1},"re":0.6},{"v":"1","im":0.8}]"#);
    let o = cavgraph(&["prepare", "--named", "cascade", "--state", &state, "--eps", "1e-8"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(!v["steps"].as_array().unwrap().is_empty());
    assert!(v["achieved_fidelity"].as_f64().unwrap() > 1.0 - 1e-8);
    assert_eq!(v["h_max"], 4);
}

#[test]
fn verify_tables_suite() {
    let o = cavgraph(&["verify", "--suite", "tables"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS"));
    assert_eq!(cavgraph(&["verify", "--suite", "nonsense"]).status.code(), Some(5));
}
