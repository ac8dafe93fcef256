use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn critfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critfield"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn rows(record: &Value) -> &Vec<Value> {
    record["rows"].as_array().expect("rows")
}

#[test]
fn check_passes_for_gaussian_model() {
    let out = critfield(&["check", "--model", "gaussian:a=1", "--N", "2"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let record = json(&out);
    assert_eq!(record["schema"], 1);
    assert_eq!(record["op"], "check");
    assert_eq!(record["details"]["report"]["overall_pass"], true);
    assert!(rows(&record).iter().all(|r| r["passed"] == true));
    assert!(rows(&record).iter().any(|r| r["check"] == "gc2"));
}

#[test]
fn missing_model_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"sweep": {"r": [0.1], "u": [1.0]}}"#).unwrap();
    let out = critfield(&["check", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no model"));
}

#[test]
fn malformed_inputs_exit_with_two() {
    assert_eq!(critfield(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        critfield(&["check", "--model", "matern:nu=1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        critfield(&["sigma", "--model", "gaussian", "--r", "-0.5"])
            .status
            .code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"model": {"family": "gaussian", "N": 2}, "bogus": 1}"#,
    )
    .unwrap();
    assert_eq!(
        critfield(&["check", "--config", config.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sigma_verify_agrees_with_oracle() {
    let out = critfield(&[
        "sigma", "--model", "gaussian", "--N", "3", "--r", "0.5", "--verify",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let record = json(&out);
    let row = &rows(&record)[0];
    assert_eq!(row["L"], 8);
    assert!(row["max_abs_diff"].as_f64().unwrap() < 1e-8);
    assert_eq!(
        record["details"]["sigma"][0]["sigma"]
            .as_array()
            .unwrap()
            .len(),
        8
    );
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"model": {"family": "cauchy", "params": {"ell": 1.0, "nu": 2.0}, "N": 2},
            "sweep": {"r": [0.3], "u": [0.0]}, "mc": {"n": 4096, "seed": 5}}"#,
    )
    .unwrap();
    let out = critfield(&[
        "psi",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "9",
        "--u",
        "-1,0",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let record = json(&out);
    assert_eq!(record["config"]["model"]["family"], "cauchy");
    assert_eq!(record["config"]["mc"]["seed"], 9);
    let rows = rows(&record);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["u"], -1.0);
    assert_eq!(rows[0]["r"], 0.3);
}

#[test]
fn sweeps_are_reproducible_across_shards_and_replays() {
    let args = [
        "ratio", "--model", "gaussian", "--r", "0.1,0.05", "--u", "1", "--n", "20000", "--seed",
        "3",
    ];
    let one = json(&critfield(&[&args[..], &["--shards", "1"]].concat()));
    let two = json(&critfield(&[&args[..], &["--shards", "2"]].concat()));
    assert_eq!(rows(&one), rows(&two));

    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("ratio.json");
    std::fs::write(&saved, serde_json::to_string(&one).unwrap()).unwrap();
    let replay = json(&critfield(&["ratio", "--config", saved.to_str().unwrap()]));
    assert_eq!(rows(&replay), rows(&one));
}

#[test]
fn spectrum_and_hpoly_report_structure() {
    let out = critfield(&["spectrum", "--model", "gaussian", "--N", "3"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let record = json(&out);
    let multiplicities: Vec<u64> = rows(&record)
        .iter()
        .map(|r| r["multiplicity"].as_u64().unwrap())
        .collect();
    assert_eq!(multiplicities, vec![1, 1, 1, 1, 4]);

    let out = critfield(&["hpoly", "--model", "gaussian", "--N", "2"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let record = json(&out);
    assert!(record["details"]["antisymmetry_residual"].as_f64().unwrap() < 1e-8);
    assert!(!rows(&record).is_empty());
}

#[test]
fn simulate_writes_tables_and_report_merges_them() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sim");
    let out = critfield(&[
        "simulate",
        "--model",
        "gaussian",
        "--grid",
        "64",
        "--spacing",
        "0.25",
        "--realizations",
        "2",
        "--u",
        "1,2.5",
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "csv",
        "--save-fields",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for file in [
        "simulate.json",
        "simulate.csv",
        "pairs_u1.csv",
        "pairs_u2.5.csv",
        "field_0001.bin",
        "field_0001.bin.json",
        "points_0000.csv",
    ] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
    let record: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("simulate.json")).unwrap())
            .unwrap();
    assert_eq!(rows(&record).len(), 4);
    assert!(rows(&record).iter().all(|r| r["euler_all"] == 0));
    assert_eq!(record["details"]["euler_nonzero_realizations"], 0);

    let ratio_dir = dir.path().join("ratio");
    let out = critfield(&[
        "share",
        "--model",
        "gaussian",
        "--r",
        "0.1",
        "--u",
        "2",
        "--n",
        "4096",
        "--out",
        ratio_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let inputs = [out_dir.join("simulate.json"), ratio_dir.join("share.json")];
    let paths: Vec<&str> = inputs.iter().map(|p| p.to_str().unwrap()).collect();
    let out = critfield(&[
        "report", "--input", paths[0], "--input", paths[1], "--format", "csv",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 + 1);
    assert!(text.lines().next().unwrap().contains("op"));

    let missing = critfield(&[
        "report",
        "--input",
        Path::new("/nonexistent.json").to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(2));
}
