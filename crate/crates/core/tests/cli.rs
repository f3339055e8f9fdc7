use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use couplekit::manifest::RunManifest;
use serde_json::Value;

const SPACE: &str = r#"{
  "variables": [
    { "name": "a", "lower": -1.0, "upper": 1.0, "nominal": 0.0, "role": "plant" },
    { "name": "b", "lower": -1.0, "upper": 1.0, "nominal": 0.0, "role": "plant" },
    { "name": "c", "lower": 0.0, "upper": 2.0, "nominal": 1.0, "role": "plant" }
  ]
}"#;

fn couplekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_couplekit"))
        .args(args)
        .env("COUPLEKIT_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = couplekit(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "couplekit {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Exit code 2 plus a single JSON object on stderr.
fn rejected(out: Output) -> Value {
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.trim_end();
    assert!(!line.contains('\n'), "multi-line error: {line}");
    let v: Value = serde_json::from_str(line).unwrap();
    assert!(v["error"].is_string() && v["message"].is_string());
    v
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Sample the space and attach two smooth response channels.
fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let space = dir.join("space.json");
    std::fs::write(&space, SPACE).unwrap();
    let samples = dir.join("samples.csv");
    ok(&["sample", &s(&space), "--n", "40", "--seed", "3", "--out", &s(&samples)]);

    let text = std::fs::read_to_string(&samples).unwrap();
    let mut lines = text.lines();
    let mut data = format!("{},f,g\n", lines.next().unwrap());
    for row in lines {
        let x: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        let f = (x[0] - 0.3).powi(2) + x[1] * x[1] + 0.6 * x[0] * x[1] + 0.2 * (x[2] - 1.2).powi(2);
        let g = x[0] + x[1];
        data.push_str(&format!("{row},{f},{g}\n"));
    }
    let path = dir.join("data.csv");
    std::fs::write(&path, data).unwrap();
    (space, path)
}

fn trained(dir: &Path) -> PathBuf {
    let (space, data) = fixture(dir);
    let models = dir.join("models");
    ok(&[
        "train",
        &s(&space),
        &s(&data),
        "--seed",
        "1",
        "--out",
        &s(&models),
        "--objective",
        "f",
        "--constraint",
        "g<=0.5",
    ]);
    models
}

fn verified(manifest: &Path) -> RunManifest {
    let m = RunManifest::load(manifest).unwrap();
    assert!(!m.outputs.is_empty());
    assert!(m.verify_outputs().unwrap(), "{} digests differ", manifest.display());
    m
}

#[test]
fn sample_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _) = fixture(dir.path());
    let csv = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "a,b,c");
    assert_eq!(csv.lines().count(), 41);
    verified(&dir.path().join("samples.csv.manifest.json"));

    // same seed, same bytes
    let again = dir.path().join("again.csv");
    let space = s(&dir.path().join("space.json"));
    ok(&["sample", &space, "--n", "40", "--seed", "3", "--out", &s(&again)]);
    assert_eq!(std::fs::read(&again).unwrap(), csv.as_bytes());
}

#[test]
fn full_pipeline_on_a_small_problem() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let models = trained(d);
    for f in ["f.json", "g.json", "training_report.json", "problem.json", "space.json"] {
        assert!(models.join(f).is_file(), "missing {f}");
    }
    verified(&models.join("manifest.json"));
    // m defaults to N for 40 samples, so every channel is checked against the exact GP
    let report: Value = serde_json::from_str(&std::fs::read_to_string(models.join("training_report.json")).unwrap()).unwrap();
    let text = report.to_string();
    assert!(text.contains("exact_gp_self_check"));
    assert!(!text.contains("\"pass\":false"));

    let problem = s(&models.join("problem.json"));
    let dca = d.join("dca");
    ok(&["dca", &problem, "--ns", "5", "--starts", "2", "--seed", "1", "--out", &s(&dca)]);
    verified(&dca.join("manifest.json"));
    let first = std::fs::read(dca.join("report.json")).unwrap();
    let dca2 = d.join("dca2");
    ok(&["dca", &problem, "--ns", "5", "--starts", "2", "--seed", "1", "--out", &s(&dca2)]);
    assert_eq!(std::fs::read(dca2.join("report.json")).unwrap(), first, "dca is not reproducible");

    let report = s(&dca.join("report.json"));
    let plan = d.join("plan.json");
    ok(&["plan", &report, "--out", &s(&plan)]);
    verified(&d.join("plan.json.manifest.json"));
    let subset = d.join("subset.json");
    ok(&["subset", &report, "--k", "2", "--out", &s(&subset)]);
    verified(&d.join("subset.json.manifest.json"));

    // results go to stdout without --out
    let out = ok(&["run-sequence", &problem, &s(&plan), "--starts", "3"]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!doc["stages"].as_array().unwrap().is_empty());
    let result = &doc["result"];
    assert_eq!(result["objective_channel"], "f");
    assert_eq!(result["x"].as_array().unwrap().len(), 3);
    assert!(result["objective"].is_f64());

    let out = ok(&["optimize", &problem, "--free", "a,b", "--starts", "3"]);
    let result: Value = serde_json::from_slice(&out.stdout).unwrap();
    // c is held at its nominal value
    assert_eq!(result["x"][2]["name"], "c");
    assert_eq!(result["x"][2]["value"], 1.0);

    let table = d.join("table.csv");
    ok(&[
        "compare", &problem, "--plans", &s(&plan), "--subsets", &s(&subset), "--random", "3", "--starts", "3", "--out",
        &s(&table),
    ]);
    let csv = std::fs::read_to_string(&table).unwrap();
    let labels: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(&labels[..4], ["baseline", "simultaneous", "plan_1", "subset_1"]);
    assert!(labels.contains(&"random_003"));
    verified(&d.join("table.csv.manifest.json"));
}

#[test]
fn validation_errors_exit_two_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (space, data) = fixture(d);
    let (space, data) = (s(&space), s(&data));
    let out = s(&d.join("m"));

    let v = rejected(couplekit(&["sample", &s(&d.join("missing.json")), "--n", "5", "--out", &out]));
    assert!(v["message"].as_str().unwrap().contains("missing.json"));
    rejected(couplekit(&["train", &space, &data, "--channels", "nope", "--out", &out]));
    rejected(couplekit(&["train", &space, &data, "--out", &out, "--objective", "f", "--constraint", "g=1"]));
    rejected(couplekit(&["sample", &space, "--n", "not-a-number", "--out", &out]));
    rejected(couplekit(&["no-such-command"]));
}

#[test]
fn dca_rejects_bad_sweep_settings() {
    let dir = tempfile::tempdir().unwrap();
    let models = trained(dir.path());
    let problem = s(&models.join("problem.json"));
    let out = s(&dir.path().join("dca"));
    rejected(couplekit(&["dca", &problem, "--ns", "2", "--out", &out]));
    rejected(couplekit(&["dca", &problem, "--norm", "l7", "--out", &out]));
    rejected(couplekit(&["dca", &problem, "--scheme", "sideways", "--out", &out]));
}

#[test]
fn thread_count_must_be_an_integer() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("space.json");
    std::fs::write(&space, SPACE).unwrap();
    let args = ["sample", &s(&space), "--n", "4", "--out", &s(&dir.path().join("x.csv"))];
    let bad = Command::new(env!("CARGO_BIN_EXE_couplekit"))
        .args(args)
        .env("COUPLEKIT_THREADS", "many")
        .output()
        .unwrap();
    let v = rejected(bad);
    assert!(v["message"].as_str().unwrap().contains("COUPLEKIT_THREADS"));
    let zero = Command::new(env!("CARGO_BIN_EXE_couplekit"))
        .args(args)
        .env("COUPLEKIT_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(zero.status.code(), Some(0));
}

#[test]
fn help_exits_zero() {
    let out = ok(&["--help"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["sample", "train", "dca", "plan", "subset", "run-sequence", "optimize", "compare"] {
        assert!(text.contains(sub), "help lacks {sub}");
    }
}
