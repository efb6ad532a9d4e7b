//! Integration tests of the command-line surface: JSON round trips, the
//! exit-code contract, and tolerance overrides.

use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_defectkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_defectkit"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn tmp(name: &str) -> String {
    let dir = std::env::temp_dir().join("defectkit-cli-tests");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn gen_emits_reparsable_documents() {
    let path = tmp("jordan4.json");
    let out = run(&["gen", "jordan", "--order", "4", "--out", &path]);
    assert!(out.status.success());
    // stdout and the file carry the same document, both parse back
    let from_file: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    let from_stdout: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(from_file, from_stdout);
    assert_eq!(from_file["rows"], 4);
}

#[test]
fn analyze_jordan_reports_degree_and_defects() {
    let path = tmp("jordan3.json");
    assert!(run(&["gen", "jordan", "--order", "3", "--out", &path])
        .status
        .success());
    let out = run(&["analyze", &path]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["results"]["degree"]["kind"], "degree");
    assert_eq!(doc["results"]["degree"]["value"], 3);
    assert_eq!(doc["results"]["dimDefect"], 1);
    assert_eq!(doc["results"]["dimDefectStar"], 1);
}

#[test]
fn analyze_scalar_half_is_not_polynomial() {
    let path = tmp("half.json");
    fs::write(&path, r#"{"rows":1,"cols":1,"entries":[[0.5,0.0]]}"#).unwrap();
    let out = run(&["analyze", &path, "--pmax", "8"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["results"]["degree"]["kind"], "notPolynomialUpTo");
    assert_eq!(doc["results"]["degree"]["value"], 8);
}

#[test]
fn factorize_block3_seed5_accepted() {
    let path = tmp("b3.json");
    assert!(
        run(&["gen", "block3", "--dims", "2,2,2", "--seed", "5", "--out", &path])
            .status
            .success()
    );
    let out = run(&["factorize", &path, "--split", "2,2,2", "--mode", "three"]);
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["results"]["accepted"], true);
}

#[test]
fn factorize_two_block_file_accepted() {
    // a 3x3 generator with an empty middle is a 2-block triangular file
    let path = tmp("b2.json");
    assert!(run(&[
        "gen", "block3", "--dims", "2,0,1", "--seed", "9", "--out", &path
    ])
    .status
    .success());
    let out = run(&["factorize", &path, "--split", "2,1", "--mode", "two"]);
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["results"]["accepted"], true);
    for key in ["J", "tau", "tauStar", "residual", "dims"] {
        assert!(
            doc["results"]["bundle"].get(key).is_some(),
            "bundle missing {key}"
        );
    }
}

#[test]
fn factorize_structured_both_emits_dim_report() {
    let path = tmp("s13.json");
    assert!(run(&[
        "gen",
        "structured",
        "--dims",
        "1,2,1",
        "--seed",
        "13",
        "--out",
        &path
    ])
    .status
    .success());
    let out = run(&["factorize", &path, "--mode", "both"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let report = &doc["results"]["bundle"]["dimReport"];
    assert!(report["M"].is_u64());
    assert!(report["Mtilde"].is_u64());
    assert!(report["equal"].is_boolean());
}

#[test]
fn structured_file_round_trips_through_gen_and_factorize() {
    // generated JSON reparses to the same operator: factorizing the
    // regenerated file gives the byte-identical bundle
    let path = tmp("s7.json");
    assert!(run(&[
        "gen",
        "structured",
        "--dims",
        "2,1,1",
        "--seed",
        "7",
        "--out",
        &path
    ])
    .status
    .success());
    let a = run(&["factorize", &path, "--mode", "corollary"]);
    let b = run(&["factorize", &path, "--mode", "corollary"]);
    assert!(a.status.success());
    let da: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let db: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    // bundles agree exactly; wall time may differ
    assert_eq!(da["results"], db["results"]);
}

#[test]
fn exit_code_contract() {
    // 2: parse error
    let bad = tmp("bad.json");
    fs::write(&bad, "no json here").unwrap();
    assert_eq!(run(&["analyze", &bad]).status.code(), Some(2));

    // 3: not a contraction
    let big = tmp("big.json");
    fs::write(&big, r#"{"rows":1,"cols":1,"entries":[[1.5,0.0]]}"#).unwrap();
    assert_eq!(run(&["analyze", &big]).status.code(), Some(3));

    // 3: non-triangular split
    let full = tmp("full.json");
    fs::write(
        &full,
        r#"{"rows":2,"cols":2,"entries":[[0.1,0.0],[0.1,0.0],[0.1,0.0],[0.1,0.0]]}"#,
    )
    .unwrap();
    assert_eq!(
        run(&["factorize", &full, "--split", "1,1", "--mode", "two"])
            .status
            .code(),
        Some(3)
    );

    // 3: wrong operator kind for the mode
    let dense = tmp("dense.json");
    fs::write(&dense, r#"{"rows":1,"cols":1,"entries":[[0.5,0.0]]}"#).unwrap();
    assert_eq!(
        run(&["factorize", &dense, "--mode", "corollary"])
            .status
            .code(),
        Some(3)
    );

    // 1: suite property failure (injected)
    let out = run(&[
        "suite",
        "--seeds",
        "2",
        "--max-dim",
        "2",
        "--shapes",
        "1:1:1",
        "--fault",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("replay:"), "replay line missing: {err}");
}

#[test]
fn suite_small_run_passes_and_is_deterministic() {
    let args = [
        "suite",
        "--seeds",
        "10",
        "--max-dim",
        "3",
        "--shapes",
        "1:1:1,1:2:1",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "exit {:?}", a.status.code());
    assert_eq!(a.stdout, b.stdout, "suite output must be byte-identical");
}

#[test]
fn defectkit_tol_env_var_overrides_default() {
    let path = tmp("half2.json");
    fs::write(&path, r#"{"rows":1,"cols":1,"entries":[[0.5,0.0]]}"#).unwrap();
    let strict = run_env(&["analyze", &path], "DEFECTKIT_TOL", "1e-9");
    let doc: serde_json::Value = serde_json::from_slice(&strict.stdout).unwrap();
    assert_eq!(doc["tolerances"]["degreeTol"], 1e-9);
    // a huge tolerance flattens every coefficient below threshold: the
    // Moebius function then counts as a degree-0 polynomial
    let loose = run_env(&["analyze", &path], "DEFECTKIT_TOL", "10.0");
    let doc: serde_json::Value = serde_json::from_slice(&loose.stdout).unwrap();
    assert_eq!(doc["tolerances"]["degreeTol"], 10.0);
    assert_eq!(doc["results"]["degree"]["kind"], "degree");
    // and the explicit flag wins over the environment
    let flag = run_env(
        &["analyze", &path, "--tol", "1e-9"],
        "DEFECTKIT_TOL",
        "10.0",
    );
    let doc: serde_json::Value = serde_json::from_slice(&flag.stdout).unwrap();
    assert_eq!(doc["tolerances"]["degreeTol"], 1e-9);
}

#[test]
fn analyze_structured_reports_exact_degree() {
    let path = tmp("s13a.json");
    assert!(run(&[
        "gen",
        "structured",
        "--dims",
        "1,2,1",
        "--seed",
        "13",
        "--out",
        &path
    ])
    .status
    .success());
    let out = run(&["analyze", &path]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["results"]["degree"]["kind"], "degree");
    assert_eq!(doc["results"]["degree"]["value"], 2);
    assert_eq!(doc["results"]["exactExpansion"], true);
    assert_eq!(doc["results"]["purelyContractive"], true);
}

#[test]
fn analyze_reports_unitary_part_of_mixed_operator() {
    // rotation block (unitary) direct-summed with a strict contraction:
    // the heuristic finds the 2-dimensional unitary part
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let path = tmp("mixed.json");
    let doc = serde_json::json!({
        "rows": 3, "cols": 3,
        "entries": [
            [c, 0.0], [-c, 0.0], [0.0, 0.0],
            [c, 0.0], [c, 0.0],  [0.0, 0.0],
            [0.0, 0.0], [0.0, 0.0], [0.5, 0.0],
        ],
    });
    fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(&["analyze", &path]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["results"]["unitaryPartDim"], 2);
    assert_eq!(doc["results"]["dimDefect"], 1);
}

#[test]
fn gen_counterexample_bundle_shape() {
    let out = run(&[
        "gen",
        "counterexample",
        "--defects",
        "1,1",
        "--order",
        "2",
        "--mdim",
        "2",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["N", "V1", "V2", "M"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert_eq!(doc["N"]["rows"], 2);
}
