use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(rel: &str) -> String {
    repo().join("fixtures").join(rel).display().to_string()
}

fn modcc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modcc"))
        .args(args)
        .current_dir(repo())
        .output()
        .expect("running modcc")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_system_is_a_usage_error() {
    assert_eq!(code(&modcc(&["compile", "--bench", "ghz:8"])), 1);
}

#[test]
fn invalid_weight_is_a_usage_error() {
    let sys = fixture("almaden2x1link.json");
    assert_eq!(code(&modcc(&["compile", "--bench", "ghz:8", "--system", &sys, "--alpha", "-1"])), 1);
}

#[test]
fn oversized_circuit_is_infeasible() {
    let sys = fixture("almaden2x1link.json");
    assert_eq!(code(&modcc(&["compile", "--bench", "ghz:78", "--system", &sys])), 3);
}

#[test]
fn tag_mismatch_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let qasm = std::fs::read_to_string(fixture("hand_oracle/circuit.qasm")).unwrap();
    let bad = dir.path().join("bad.qasm");
    std::fs::write(&bad, qasm.replacen("// @chip:h0", "// @chip:h1", 1)).unwrap();
    let o = modcc(&[
        "cost",
        "--circuit",
        path_str(&bad),
        "--mapping",
        &fixture("hand_oracle/circuit.json"),
        "--system",
        &fixture("hand_oracle/system.json"),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn ghz40_report_has_one_inter_chip_operation() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = modcc(&[
        "compile",
        "--bench",
        "ghz:40",
        "--system",
        &fixture("almaden2x1link.json"),
        "--report",
        path_str(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["metrics"]["s_inter"], 1);
    assert_eq!(r["k"], 2);
    assert!(r["transpile_time_s"].as_f64().unwrap() > 0.0);
    let trace: Vec<f64> = r["trace"].as_array().unwrap().iter().filter_map(Value::as_f64).collect();
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn hand_oracle_cost_is_stable() {
    let args = [
        "cost",
        "--circuit",
        &fixture("hand_oracle/circuit.qasm"),
        "--system",
        &fixture("hand_oracle/system.json"),
    ];
    let a = modcc(&args);
    let b = modcc(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert!((v["total"].as_f64().unwrap() - 37.32666666666667).abs() < 1e-12);
    assert_eq!(v["s_on"], 3);
    assert_eq!(v["s_inter"], 2);
}

#[test]
fn empty_circuit_costs_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let qasm = dir.path().join("empty.qasm");
    std::fs::write(&qasm, "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[8];\n").unwrap();
    std::fs::write(
        dir.path().join("empty.json"),
        r#"{"initial_mapping": [0, 1, 2, 3, 4, 5, 6, 7], "final_mapping": [0, 1, 2, 3, 4, 5, 6, 7], "tags": []}"#,
    )
    .unwrap();
    let v = json(&modcc(&["cost", "--circuit", path_str(&qasm), "--system", &fixture("hand_oracle/system.json")]));
    assert_eq!(v["total"].as_f64(), Some(0.0));
}

#[test]
fn compiled_artifact_is_priced_identically_by_cost() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.qasm");
    let report = dir.path().join("report.json");
    let sys = fixture("auckland3x1link.json");
    let o = modcc(&[
        "compile",
        "--bench",
        "wstate:30",
        "--system",
        &sys,
        "--out",
        path_str(&out),
        "--report",
        path_str(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("w.json").exists());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let v = json(&modcc(&["cost", "--circuit", path_str(&out), "--system", &sys]));
    assert_eq!(v["s_on"], r["cost"]["s_on"]);
    assert_eq!(v["s_inter"], r["cost"]["s_inter"]);
    let (a, b) = (v["total"].as_f64().unwrap(), r["cost"]["total"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
}

#[test]
fn partition_reports_capacity_respecting_fragments() {
    let v = json(&modcc(&["partition", "--bench", "ising:34", "--system", &fixture("almaden2x1link.json")]));
    assert_eq!(v["k"], 2);
    let frags = v["fragments"].as_array().unwrap();
    let caps = v["capacities"].as_array().unwrap();
    let total: usize = frags.iter().map(|f| f.as_array().unwrap().len()).sum();
    assert_eq!(total, 34);
    for (f, c) in frags.iter().zip(caps) {
        assert!(f.as_array().unwrap().len() as u64 <= c.as_u64().unwrap());
    }
}

#[test]
fn emitted_systems_match_shipped_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let o = modcc(&["emit-system", "--all", path_str(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut n = 0;
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().into_string().unwrap();
        let shipped = std::fs::read_to_string(fixture(&name)).unwrap();
        assert_eq!(std::fs::read_to_string(entry.path()).unwrap(), shipped, "{name}");
        n += 1;
    }
    assert_eq!(n, 10);
}

#[test]
fn bench_writes_parseable_qasm() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("adder.qasm");
    let o = modcc(&["bench", "adder:10", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let c = modcc_core::circuit::parse_qasm(&text).unwrap();
    assert_eq!(c.num_qubits, 10);
}

#[test]
fn reproduce_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.csv");
    let o = modcc(&["reproduce", "--suite", "all", "--seeds", "0,1", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("system,circuit,inter,on,depth,cost,runtime_s,pass\n"));
    assert_eq!(csv.lines().count(), 19);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",pass")));
}

#[test]
fn external_local_compiler_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let adapter = format!("{} route-fragment", env!("CARGO_BIN_EXE_modcc"));
    let o = modcc(&[
        "compile",
        "--bench",
        "ghz:30",
        "--system",
        &fixture("almaden2x1link.json"),
        "--local-compiler",
        &adapter,
        "--max-iter",
        "5",
        "--report",
        path_str(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["metrics"]["s_inter"], 1);
    assert_eq!(r["config"]["local_compiler"], adapter.as_str());
}

#[test]
fn failing_external_compiler_is_reported() {
    let o = modcc(&[
        "compile",
        "--bench",
        "ghz:10",
        "--system",
        &fixture("almaden2x1link.json"),
        "--local-compiler",
        "false",
    ]);
    assert_ne!(code(&o), 0);
    assert!(!o.stderr.is_empty());
}
