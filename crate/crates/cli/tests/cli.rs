use std::path::Path;
use std::process::{Command, Output};

use mleqc::gates::{pauli_class, PauliAxis};
use mleqc::io::write_matrix;
use mleqc::linalg::{hermitian_exp, identity, kron, random_hermitian, random_unitary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn mleqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mleqc")).args(args).env_remove("MLEQC_THREADS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn equiv_verdicts_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = pauli_class(PauliAxis::X, 2).unwrap().sample(3);
    let v0 = kron(&identity(2), &random_unitary(2, &mut rng));
    let v = random_unitary(2, &mut rng);
    let (a, b, x, z, bad) = ["a", "b", "x", "z", "bad"].map(|n| dir.path().join(format!("{n}.json"))).into();
    write_matrix(&a, &u).unwrap();
    write_matrix(&b, &(&v0 * &u)).unwrap();
    write_matrix(&x, &kron(&mleqc::linalg::pauli_x(), &v)).unwrap();
    write_matrix(&z, &kron(&mleqc::linalg::pauli_z(), &v)).unwrap();
    std::fs::write(&bad, "{\"rows\": 4, ").unwrap();

    let same = mleqc(&["equiv", s(&a), s(&b), "--n", "2"]);
    assert_eq!(code(&same), 0, "{}", String::from_utf8_lossy(&same.stderr));
    let j = stdout_json(&same);
    assert_eq!(j["equivalent"], true);
    assert!(j["max_deviation"].as_f64().unwrap() <= 1e-9);
    assert!(j["weak_identity_residual"].as_f64().unwrap() <= 1e-10);

    let differ = mleqc(&["equiv", s(&x), s(&z), "--n", "2"]);
    assert_eq!(code(&differ), 1);
    assert_eq!(stdout_json(&differ)["equivalent"], false);

    assert_eq!(code(&mleqc(&["equiv", s(&a), s(&bad), "--n", "2"])), 2);
    assert_eq!(code(&mleqc(&["equiv", s(&a), s(&b), "--n", "3"])), 2);
}

#[test]
fn gate_sample_member_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    let o = mleqc(&["gate", "sample", "--class", "h", "--n", "3", "--seed", "4", "--out", s(&path)]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&mleqc(&["gate", "member", s(&path), "--class", "h", "--n", "3"])), 0);
    let wrong = mleqc(&["gate", "member", s(&path), "--class", "x", "--n", "3"]);
    assert_eq!(code(&wrong), 1);
    assert!(stdout_json(&wrong)["residual"].as_f64().unwrap() > 0.1);
    assert_eq!(code(&mleqc(&["gate", "sample", "--class", "q", "--n", "2"])), 2);

    let cnot = dir.path().join("cnot.json");
    assert_eq!(code(&mleqc(&["gate", "sample", "--class", "cnot", "--n", "2", "--qubits", "2", "--out", s(&cnot)])), 0);
    assert_eq!(code(&mleqc(&["gate", "member", s(&cnot), "--class", "cnot", "--n", "2", "--qubits", "2"])), 0);

    let x = dir.path().join("x.json");
    mleqc(&["gate", "sample", "--class", "x", "--n", "2", "--seed", "1", "--out", s(&x)]);
    let e = mleqc(&["evaluate", s(&x), "--target", "mle-x"]);
    assert_eq!(code(&e), 0);
    assert!((stdout_json(&e)["fidelity"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    let p = mleqc(&["evaluate", s(&x), "--target", "padded", "--class", "x", "--n", "2"]);
    assert!((stdout_json(&p)["fidelity"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    assert_eq!(code(&mleqc(&["evaluate", s(&x), "--target", "generic-norm"])), 2);
}

#[test]
fn exact_sweep_matches_oracle_and_single_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = mleqc(&["sweep", "--exact", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("sweep.json"));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 26);
    for r in rows {
        let (e, oracle) = (r["eps_sle"].as_f64().unwrap(), r["eps_sle_oracle"].as_f64().unwrap());
        assert!((e - oracle).abs() <= 1e-12);
        assert!(r["eps_mle"].as_f64().unwrap().abs() <= 1e-12);
    }
    assert!(report["crossover_kelvin"].is_null());
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 27);
    assert!(out.join("manifest.json").exists());

    let one = dir.path().join("one");
    assert_eq!(code(&mleqc(&["sweep", "--exact", "--steps", "1", "--out", s(&one)])), 0);
    let rows = read_json(&one.join("sweep.json"))["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["t_kelvin"].as_f64().unwrap(), 70.0);

    assert_eq!(code(&mleqc(&["sweep", "--out", s(&one)])), 2);
}

#[test]
fn dephase_exact_noisy_and_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exact");
    let o = mleqc(&["dephase", "--exact", "--samples", "100", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read_json(&out.join("dephase.json"));
    assert!(summary["mean_pure"].as_f64().unwrap() <= 1e-12);
    assert!(summary["mean_dephased"].as_f64().unwrap() <= 1e-12);
    assert_eq!(code(&mleqc(&["dephase", "--exact", "--samples", "0", "--out", s(&out)])), 2);

    // A slightly wrong gate: two seeds agree within three combined standard errors.
    let cls = pauli_class(PauliAxis::X, 2).unwrap();
    let kick = hermitian_exp(&random_hermitian(4, &mut ChaCha8Rng::seed_from_u64(5)), 0.05);
    let gate = dir.path().join("gate.json");
    write_matrix(&gate, &(cls.sample(2) * kick)).unwrap();
    let means: Vec<(f64, f64)> = ["1", "2"]
        .iter()
        .map(|seed| {
            let o = dir.path().join(format!("s{seed}"));
            let r = mleqc(&["dephase", "--gate", s(&gate), "--class", "x", "--samples", "2000", "--seed", seed, "--out", s(&o)]);
            assert_eq!(code(&r), 0);
            let j = read_json(&o.join("dephase.json"));
            (j["mean_pure"].as_f64().unwrap(), j["stderr_pure"].as_f64().unwrap())
        })
        .collect();
    let combined = (means[0].1.powi(2) + means[1].1.powi(2)).sqrt();
    assert!((means[0].0 - means[1].0).abs() <= 3.0 * combined);
    assert_eq!(code(&mleqc(&["dephase", "--gate", s(&gate), "--samples", "10", "--out", s(&out)])), 2);
}

#[test]
fn optimize_is_deterministic_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"model": {"preset": "na2"}, "field": {"t_final": 2000.0},
            "ga": {"population_size": 8, "generations": 3, "t_final_range": [2000.0, 3000.0]}}"#,
    )
    .unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = mleqc(&["--threads", threads, "optimize", "--config", s(&cfg), "--seed", "5", "--target", "sle-z", "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("final fidelity"));
        out
    };
    let (a, b) = (run("a", "1"), run("b", "2"));
    for f in ["record.json", "field.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    // manifests differ only in where they were written
    let mut manifest = read_json(&a.join("manifest.json"));
    let mut other = read_json(&b.join("manifest.json"));
    manifest["config"]["output"].take();
    other["config"]["output"].take();
    assert_eq!(manifest, other);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["config"]["ga"]["seed"], 5);
    assert_eq!(manifest["config"]["ga"]["crossover_rate"], 0.3);
    assert_eq!(read_json(&a.join("record.json"))["target"], "sle_z");
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("nomodel.json");
    std::fs::write(&cfg, r#"{"ga": {"population_size": 8}}"#).unwrap();
    let o = mleqc(&["optimize", "--config", s(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("model"));

    std::fs::write(&cfg, "{\"model\": {\"preset\": \"na2\"},\n\"ga\": {\"crossover_rate\": 1.5}}").unwrap();
    let o = mleqc(&["optimize", "--config", s(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("crossover_rate"));

    let o = Command::new(env!("CARGO_BIN_EXE_mleqc"))
        .args(["sweep", "--exact", "--out", s(dir.path())])
        .env("MLEQC_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert_eq!(code(&mleqc(&["frobnicate"])), 2);
}
