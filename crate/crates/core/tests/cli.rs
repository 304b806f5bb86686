use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BELL: &str = "qubits 2\nh 0\ncnot 0 1\nmeasure 0 -> a\nmeasure 1 -> b\n";

fn tnqsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tnqsim")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn analyze_reports_profile() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "long.qc", "qubits 4\ncnot 0 3\nh 1\nh 1\n");
    let v = json(&tnqsim(&["analyze", &f]));
    assert_eq!(v["D"], 1);
    assert_eq!(v["per_line"], serde_json::json!([1, 1, 1, 1]));
    assert_eq!(v["gate_count"], 3);
    assert_eq!(v["adaptive"], false);

    let v = json(&tnqsim(&["analyze", &f, "--stage", "lowered"]));
    assert_eq!(v["two_qubit_gate_count"], 5);
    assert_eq!(v["gate_count"], 6);
}

#[test]
fn reduce_and_lower_write_parseable_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "in.qc", "qubits 3\nh 0\nh 0\ncz 0 2\ncz 0 2\nswap 0 2\n");
    let reduced = dir.path().join("r.qc");
    assert!(tnqsim(&["reduce", &f, "-o", reduced.to_str().unwrap()]).status.success());
    let r = tnqsim::parse_circuit(&std::fs::read_to_string(&reduced).unwrap()).unwrap();
    assert_eq!(r.two_qubit_gate_count(), 1);
    assert_eq!(r.gate_count(), 1);

    let lowered = dir.path().join("l.qc");
    assert!(tnqsim(&["lower", reduced.to_str().unwrap(), "-o", lowered.to_str().unwrap()]).status.success());
    let l = tnqsim::parse_circuit(&std::fs::read_to_string(&lowered).unwrap()).unwrap();
    assert_eq!(l.two_qubit_gate_count(), 3);
}

#[test]
fn run_is_reproducible_across_backends() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bell.qc", BELL);
    let mut samples = Vec::new();
    for backend in ["mps", "net", "dense"] {
        let v = json(&tnqsim(&["run", &f, "--backend", backend, "--shots", "50", "--seed", "9", "--exact"]));
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["rng_algorithm"], "chacha20");
        let p = &v["exact_probs"];
        assert!((p["00"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert!((p["11"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        samples.push(v["samples"].clone());
    }
    assert_eq!(samples[0], samples[1]);
    assert_eq!(samples[1], samples[2]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.qc", "qubits 2\ncnot 0 0\n");
    assert_eq!(tnqsim(&["analyze", &bad]).status.code(), Some(2));
    assert_eq!(tnqsim(&["analyze", "/nonexistent/x.qc"]).status.code(), Some(2));

    let mut text = String::from("qubits 6\n");
    for i in 0..3 {
        text.push_str(&format!("h {i}\ncnot {i} {}\n", i + 3));
    }
    let f = write(dir.path(), "wide.qc", &text);
    let out = tnqsim(&["run", &f, "--backend", "mps", "--max-chi", "4"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let out = tnqsim(&["run", &f, "--backend", "dense", "--max-dense-qubits", "4"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(tnqsim(&["run", &f, "--backend", "mps", "--max-chi", "8"]).status.success());
}

#[test]
fn bench_table() {
    let v = json(&tnqsim(&["bench", "--family", "ladder", "--n", "8,16"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(row["status"], "ok");
        assert!(row["peak_width"].as_u64().unwrap() <= 4);
    }
    let v = json(&tnqsim(&["bench", "--family", "crossing", "--n", "24", "--max-chi", "64"]));
    assert_eq!(v["rows"][0]["exit_code"], 3);
    let v = json(&tnqsim(&["bench", "--family", "cluster", "--n", "2", "--m", "3", "--backend", "net"]));
    assert_eq!(v["rows"][0]["n_qubits"], 6);
    assert_eq!(v["rows"][0]["status"], "ok");
}
