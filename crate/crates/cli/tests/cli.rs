use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sievecast"));
    cmd.env_remove("SIEVECAST_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn sievecast")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(report: &Value) {
    let v = schema();
    let errors: Vec<String> = v.iter_errors(report).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

/// `y` depends on x0 and x2 strongly; the rest is noise. Header `y,x0,x1,...`.
fn write_csv(dir: &Path, n: usize, p: usize, seed: u64) -> PathBuf {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::from("y");
    for j in 0..p {
        text.push_str(&format!(",x{j}"));
    }
    text.push('\n');
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|_| rng.random::<f64>() - 0.5).collect();
        let y = 3.0 * row[0] - 2.0 * row[2] + 0.1 * (rng.random::<f64>() - 0.5);
        text.push_str(&format!("{y}"));
        for v in row {
            text.push_str(&format!(",{v}"));
        }
        text.push('\n');
    }
    let path = dir.join("data.csv");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn screen_finds_planted_columns_and_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), 80, 40, 1);
    let out = run(&["screen", "--input", csv.to_str().unwrap(), "--response", "y", "--alpha", "0.5", "--seed", "7"]);
    let report = stdout_json(&out);
    assert_valid(&report);
    assert_eq!(report["algorithm"], "basic");
    assert_eq!(report["response"]["name"], "y");
    let names: Vec<&str> = report["selected_names"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(names.contains(&"x0") && names.contains(&"x2"), "{names:?}");
    // predictor index 0 is file column 1 because the response sits in column 0
    let idx = report["selected_indices"].as_array().unwrap();
    let cols = report["selected_columns"].as_array().unwrap();
    for (i, c) in idx.iter().zip(cols) {
        assert_eq!(i.as_u64().unwrap() + 1, c.as_u64().unwrap());
    }
    assert!(report.get("wall_time_ms").is_none());
}

#[test]
fn screen_output_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), 60, 30, 2);
    let args = |threads: &str| {
        vec![
            "screen".to_string(),
            "--input".into(),
            csv.to_str().unwrap().into(),
            "--response".into(),
            "y".into(),
            "--threshold".into(),
            "bootstrap".into(),
            "--seed".into(),
            "11".into(),
            "--threads".into(),
            threads.into(),
        ]
    };
    let a = bin().args(args("1")).output().unwrap();
    let b = bin().args(args("1")).output().unwrap();
    let c = bin().args(args("4")).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), 60, 30, 3);
    let base = ["screen", "--input", csv.to_str().unwrap(), "--response", "y", "--threshold", "bootstrap"];
    let with_flag = run(&[&base[..], &["--seed", "42"]].concat());
    let with_env = bin().args(base).env("SIEVECAST_SEED", "42").output().unwrap();
    assert_eq!(with_flag.stdout, with_env.stdout);
    assert_eq!(stdout_json(&with_env)["config"]["seed"], 42);
}

#[test]
fn two_stage_forced_on_small_input() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), 30, 60, 4);
    let out = run(&[
        "screen",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "0",
        "--algorithm",
        "two-stage",
        "--T",
        "3",
        "--delta",
        "1.0",
    ]);
    let report = stdout_json(&out);
    assert_valid(&report);
    assert_eq!(report["algorithm"], "two-stage");
    assert_eq!(report["result"]["runs"].as_array().unwrap().len(), 3);
    // floor(30^1) = 30 columns per group, 60 predictors -> 2 groups
    assert_eq!(report["partition_k"], 2);
}

#[test]
fn svm1_input_uses_index_selector() {
    let dir = tempfile::tempdir().unwrap();
    let n = 50;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut cols: Vec<Vec<f64>> = (0..6).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
    cols[4] = cols[1].iter().map(|v| 2.0 * v + 1.0).collect();
    let x = sievecast::DataMatrix::from_columns(cols).unwrap();
    let path = dir.path().join("m.svm1");
    x.write_svm1(std::fs::File::create(&path).unwrap()).unwrap();
    let report = stdout_json(&run(&["screen", "--input", path.to_str().unwrap(), "--response", "4", "--threshold", "normal"]));
    assert_valid(&report);
    assert_eq!(report["response"]["name"], Value::Null);
    assert!(report["selected_names"].as_array().unwrap().contains(&Value::from("x1")));
}

#[test]
fn missing_response_column_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), 20, 5, 6);
    let out = run(&["screen", "--input", csv.to_str().unwrap(), "--response", "target"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("target"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);
}

#[test]
fn degenerate_response_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.csv");
    std::fs::write(&path, "y,a,b\n1,0.1,3\n1,0.5,2\n1,0.2,9\n1,0.7,1\n").unwrap();
    let out = run(&["screen", "--input", path.to_str().unwrap(), "--response", "y"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_input_and_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "y,a\n1,2\n3\n4,5\n").unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(run(&["screen", "--input", p, "--response", "y"]).status.code(), Some(2));
    assert_eq!(run(&["screen", "--input", "/nonexistent.csv", "--response", "y"]).status.code(), Some(2));
    assert_eq!(run(&["screen", "--input", p, "--response", "y", "--alpha", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["screen", "--input", p]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn theory_reports_poisson_limit() {
    let report = stdout_json(&run(&["theory", "--n", "300", "--p", "2000", "--alpha", "0.5", "--seed", "1"]));
    assert_valid(&report);
    assert!((report["lambda0"].as_f64().unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    let report = stdout_json(&run(&["theory", "--alpha", "0.95", "--mc-reps", "1000"]));
    assert!((report["lambda0"].as_f64().unwrap() - 2.9957).abs() < 1e-4);
    assert_eq!(run(&["theory", "--alpha", "1.0"]).status.code(), Some(2));
}

#[test]
fn simulate_csv_and_json() {
    let out = run(&["simulate", "--preset", "table1", "--reps", "2", "--n", "40", "--p", "200", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 9);
    assert!(lines[0].contains("mean_accuracy") && lines[0].contains("median_selected") && lines[0].ends_with("reps"));

    let json_args = ["simulate", "--preset", "table3", "--reps", "2", "--n", "40", "--p", "200", "--emit", "json"];
    let report = stdout_json(&run(&json_args));
    assert_valid(&report);
    assert_eq!(report["rows"].as_array().unwrap().len(), 10);
    assert_eq!(run(&json_args).stdout, run(&json_args).stdout);
}

#[test]
fn simulate_rejects_bad_grids() {
    assert_eq!(run(&["simulate", "--preset", "table1", "--reps", "0"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--preset", "table9", "--reps", "2"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--preset", "table2", "--reps", "2", "--T", "1", "--n", "30", "--p", "100"]).status.code(), Some(2));
}

#[test]
fn bench_guard_and_report() {
    let out = run(&["bench", "--n", "200", "--p", "1000000", "--mem-cap-gib", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
    let report = stdout_json(&run(&["bench", "--n", "50", "--p", "2000"]));
    assert_valid(&report);
    assert_eq!(report["p"], 2000);
    assert!(report["columns_per_second"].as_f64().unwrap() > 0.0);
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("theory.json");
    let out = run(&["theory", "--mc-reps", "1000", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_valid(&report);
}
