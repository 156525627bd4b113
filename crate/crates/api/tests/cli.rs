use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn approx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_approx"))
        .args(args)
        .output()
        .unwrap()
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn inner_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.json");
    let sdpa = dir.path().join("run.dat-s");
    let problem = data("instance_r.json");
    let region = data("interval.json");
    let o = approx(&[
        "inner",
        "--problem",
        s(&problem),
        "--region",
        s(&region),
        "--degree",
        "2",
        "--export-sdpa",
        s(&sdpa),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let result = read(&out);
    assert_eq!(result["v"], 1);
    assert_eq!(result["status"], "success");
    assert_eq!(result["plan"]["method"], "poly-interval-sdp");
    let head = std::fs::read_to_string(&sdpa).unwrap();
    assert!(head
        .lines()
        .any(|l| !l.starts_with('*') && !l.starts_with('"')));

    let o = approx(&["eval", "--result", s(&out), "--grid", "3", "--oracle"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mesh: Value = serde_json::from_slice(&o.stdout).unwrap();
    let points = mesh["points"].as_array().unwrap();
    assert_eq!(points.len(), 3);
    for p in points {
        assert!(p["fk"].as_f64().unwrap() >= p["oracle"].as_f64().unwrap() - 1e-6);
    }
}

#[test]
fn oracle_on_ranges() {
    let o = approx(&[
        "oracle",
        "--problem",
        s(&data("instance_r.json")),
        "--grid=-1:0:5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let front: Value = serde_json::from_slice(&o.stdout).unwrap();
    let fk: Vec<f64> = front
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["fk"].as_f64().unwrap())
        .collect();
    for (a, b) in fk.iter().zip([0.0, -0.25, -0.5, -0.625, -0.75]) {
        assert!((a - b).abs() < 1e-6, "{fk:?}");
    }
}

#[test]
fn certify_exit_codes() {
    let problem = data("instance_r.json");
    let bound = data("bound_zero.json");
    let o = approx(&[
        "certify",
        "--problem",
        s(&problem),
        "--region",
        s(&data("left_end.json")),
        "--bound",
        s(&bound),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let result: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(result["output"]["verdict"]["verdict"], "certified");

    // -1 lies below the whole front.
    let dir = tempfile::tempdir().unwrap();
    let low = dir.path().join("low.json");
    std::fs::write(
        &low,
        r#"{"vars": 1, "terms": [{"exponent": [0], "coef": -1.0}]}"#,
    )
    .unwrap();
    let o = approx(&[
        "certify",
        "--problem",
        s(&problem),
        "--region",
        s(&data("interval.json")),
        "--bound",
        s(&low),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let result: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(result["status"], "no_certificate");
}

#[test]
fn bad_arguments_fail() {
    let problem = data("instance_r.json");
    let region = data("interval.json");
    let o = approx(&["inner", "--problem", s(&problem)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let o = approx(&[
        "inner",
        "--problem",
        s(&problem),
        "--region",
        s(&region),
        "--objective",
        "sampled:x:1",
    ]);
    assert!(!o.status.success());

    let o = approx(&["certify", "--problem", s(&problem), "--region", s(&region)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let o = approx(&[
        "inner",
        "--problem",
        "/nonexistent.json",
        "--region",
        s(&region),
    ]);
    assert_eq!(o.status.code(), Some(1));

    let o = approx(&["oracle", "--problem", s(&problem), "--grid", "4"]);
    assert_eq!(o.status.code(), Some(1));
}
