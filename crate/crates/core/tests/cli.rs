mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;
use madogram::ingest::{import_grid, FileFormat};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn madogram<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_madogram"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analytic_cell_of_first_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let r = madogram([
        "analytic",
        "--spec",
        s(&data("example_4_1.json")),
        "--region-x",
        "(2,1);(2,2)",
        "--region-y",
        "(3,3);(3,4)",
        "--alpha",
        "1",
        "--beta",
        "1",
        "--out",
        s(&out),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let g = import_grid(&out, FileFormat::Csv).unwrap();
    assert!((g.values[0][0] - 1.0 / 36.0).abs() < 1e-12);
    assert_eq!(g.seed, None);
}

#[test]
fn simulate_and_estimate_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut panels = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let r = madogram([
            "simulate",
            "--spec",
            s(&data("example_4_2.json")),
            "--locations",
            "(1,1);(3,2);(3,3);(4,3)",
            "-T",
            "300",
            "--seed",
            "42",
            "--out",
            s(&out),
        ]);
        assert!(r.status.success());
        panels.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(panels[0], panels[1]);
    assert_eq!(String::from_utf8_lossy(&panels[0]).lines().count(), 301);

    let panel = dir.path().join("a.csv");
    for estimator in ["known-margins", "empirical-margins"] {
        let grid = dir.path().join(format!("{estimator}.json"));
        let lam = dir.path().join(format!("{estimator}-lambda.json"));
        let base = [
            "--format",
            "json",
            "estimate",
            "--panel",
            s(&panel),
            "--region-x",
            "(1,1)",
            "--region-y",
            "(3,2)",
            "--estimator",
            estimator,
        ];
        let r = madogram(base.iter().copied().chain(["--alphas", "0.5", "--betas", "0.5", "--out", s(&grid)]));
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        let r = madogram(base.iter().copied().chain(["--lambda", "0.5", "--out", s(&lam)]));
        assert!(r.status.success());
        let g = import_grid(&grid, FileFormat::Json).unwrap();
        let l: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&lam).unwrap()).unwrap();
        assert_eq!(g.values[0][0], l["values"][0].as_f64().unwrap());
        assert_eq!(g.t, Some(300));
    }
}

#[test]
fn study_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let r = madogram([
        "--format",
        "json",
        "--threads",
        "2",
        "study",
        "--config",
        s(&data("study_example_4_3.json")),
        "--seed",
        "3",
        "--out",
        s(&out),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["seed"], 3);
    assert_eq!(v["R"], 50);
    let max_mse = v["mse"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|row| row.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()))
        .fold(0.0, f64::max);
    assert!(max_mse < 0.005);

    let csv = dir.path().join("report.csv");
    let r = madogram(["study", "--config", s(&data("study_example_4_3.json")), "--out", s(&csv)]);
    assert!(r.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("alpha,beta,truth,mean,bias,mse,sd"));
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn analyze_runs_on_station_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_fixture(dir.path(), 11);
    let out = dir.path().join("grid.csv");
    let r = madogram([
        "analyze",
        "--data",
        s(&csv),
        "--region-x",
        "FAJAO,LCOMP",
        "--region-y",
        "CFELG",
        "--alphas",
        "0.5,1,2",
        "--betas",
        "0.2:1:0.4",
        "--policy",
        "fail-on-missing",
        "--out",
        s(&out),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let g = import_grid(&out, FileFormat::Csv).unwrap();
    assert_eq!(g.betas, vec![0.2, 0.6, 1.0]);
    assert_eq!(g.region_y.label(), Some("CFELG"));
}

#[test]
fn exit_codes_separate_usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let spec = data("example_4_1.json");
    let analytic = |x: &str, y: &str, extra: &[&str]| {
        let mut args = vec!["analytic", "--spec", s(&spec), "--region-x", x, "--region-y", y, "--out", s(&out)];
        args.extend_from_slice(extra);
        madogram(args).status.code()
    };
    assert_eq!(analytic("(2,1)", "(3,3)", &["--alpha", "0"]), Some(2));
    assert_eq!(analytic("(2,1", "(3,3)", &[]), Some(2));
    assert_eq!(analytic("(2,1)", "(2,1)", &[]), Some(3));
    assert_eq!(analytic("(2,1)", "(9,9)", &[]), Some(3));
    assert_eq!(madogram(["frobnicate"]).status.code(), Some(2));

    let missing = madogram(["analytic", "--spec", "/no/such/spec.json", "--region-x", "(0,0)", "--region-y", "(1,1)", "--out", s(&out)]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/spec.json"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "station_id,station_name,year,value\nA,a,1950,-1\n").unwrap();
    let r = madogram(["analyze", "--data", s(&bad), "--region-x", "A", "--region-y", "B", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 2"));
}
