use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gibbslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibbslab")).args(args).env_remove("GIBBSLAB_ENUM_CAP").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = gibbslab(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

/// Parses a CSV produced by the tool into rows of cells.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    (header, lines.map(|l| l.split(',').map(str::to_string).collect()).collect())
}

#[test]
fn analyze_reports_builtin_pressures() {
    let ising = json(&["analyze", "--builtin", "ising", "--beta", "1"]);
    assert!((f(&ising["eigendata"]["pressure"]) - 1.1270).abs() < 1e-3);
    assert!((f(&ising["gap"]["ratio"]) - 1f64.tanh()).abs() < 1e-12);
    assert_eq!(ising["constants"]["eta"], Value::Null);
    let bern = json(&["analyze", "--builtin", "bernoulli", "--p", "0.7"]);
    assert!(f(&bern["eigendata"]["pressure"]).abs() < 1e-12);
    assert!((f(&bern["entropy"]) - 0.6108643020548935).abs() < 1e-12);
    let golden = json(&["analyze", "--builtin", "golden-mean", "--a", "0"]);
    assert!((f(&golden["eigendata"]["pressure"]) - 0.4812).abs() < 5e-4);
    assert_eq!(golden["gibbs_scan"]["band_stable"], Value::Bool(true));
}

#[test]
fn model_files_round_trip_through_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let models = dir.path().join("models");
    ok(&["examples", "--out", models.to_str().unwrap()]);
    for name in ["bernoulli", "ising", "golden-mean"] {
        let input = models.join(format!("{name}.json"));
        let out = dir.path().join(name);
        ok(&["analyze", "--model", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(fs::read(&input).unwrap(), fs::read(out.join("model.json")).unwrap(), "{name}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(gibbslab(&["analyze", "--builtin", "ising"]).status.code(), Some(0));
    // validation
    assert_eq!(gibbslab(&["analyze"]).status.code(), Some(1));
    assert_eq!(gibbslab(&["analyze", "--builtin", "potts"]).status.code(), Some(1));
    assert_eq!(gibbslab(&["analyze", "--model", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(gibbslab(&["analyze", "--builtin", "bernoulli", "--p", "1.5"]).status.code(), Some(1));
    assert_eq!(gibbslab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(gibbslab(&["pressure-curve", "--builtin", "ising", "--grid", "0:1:0"]).status.code(), Some(1));
    assert_eq!(gibbslab(&["verify", "--builtin", "ising", "--inject", "nonsense"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("periodic.json");
    fs::write(
        &bad,
        r#"{"alphabet": 2, "transitions": [[0, 1], [1, 0]], "potential": {"memory": 1, "values": {"1": 0, "2": 0}}}"#,
    )
    .unwrap();
    assert_eq!(gibbslab(&["analyze", "--model", bad.to_str().unwrap()]).status.code(), Some(1));
    // numerical non-convergence: a residual target below machine precision
    assert_eq!(gibbslab(&["analyze", "--builtin", "golden-mean", "--tol", "1e-30"]).status.code(), Some(2));
    assert_eq!(gibbslab(&["--help"]).status.code(), Some(0));
}

#[test]
fn enumeration_cap_from_environment() {
    let run = |cap: &str| {
        Command::new(env!("CARGO_BIN_EXE_gibbslab"))
            .args(["analyze", "--builtin", "ising", "--nmax", "12"])
            .env("GIBBSLAB_ENUM_CAP", cap)
            .output()
            .unwrap()
    };
    assert_eq!(run("100").status.code(), Some(1));
    assert_eq!(run("100000").status.code(), Some(0));
    assert_eq!(run("lots").status.code(), Some(1));
}

#[test]
fn verify_builtins_and_injections() {
    for args in [
        &["verify", "--builtin", "bernoulli"][..],
        &["verify", "--builtin", "ising"],
        &["verify", "--builtin", "golden-mean"],
    ] {
        let r = json(args);
        assert_eq!(r["pass"], Value::Bool(true), "{args:?}");
        assert_eq!(r["checks"].as_array().unwrap().len(), 5);
    }
    let failed = |r: &Value| -> Vec<String> {
        r["checks"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|c| c["pass"] == Value::Bool(false))
            .map(|c| c["name"].as_str().unwrap().to_string())
            .collect()
    };
    let r = json(&["verify", "--builtin", "bernoulli", "--p", "0.7", "--inject", "uniform-measure"]);
    assert_eq!(failed(&r), ["variational"]);
    let defect = f(&r["checks"][3]["detail"]["defect"]);
    assert!((defect - (-(2f64.ln()) - 0.5 * 0.21f64.ln())).abs() < 1e-12);
    let r = json(&["verify", "--builtin", "bernoulli", "--inject", "perturbed-nu"]);
    assert_eq!(failed(&r), ["eigendata"]);
    assert!(f(&r["checks"][2]["metric"]) > 1e-3);
}

#[test]
fn golden_mean_pressure_curve_matches_characteristic_root() {
    let (header, rows) = csv_rows(&ok(&["pressure-curve", "--builtin", "golden-mean", "--grid", "-3:3:0.25"]));
    assert_eq!(header[..2], ["s", "pressure"]);
    assert_eq!(rows.len(), 25);
    let mut prev = f64::NEG_INFINITY;
    for row in rows {
        let a: f64 = row[0].parse().unwrap();
        assert!(a > prev);
        prev = a;
        let p: f64 = row[1].parse().unwrap();
        // λ² = e^a (λ + 1) for φ = a·1[symbol 1] on the golden mean shift
        let e = a.exp();
        let closed = ((e + (e * e + 4.0 * e).sqrt()) / 2.0).ln();
        assert!((p - closed).abs() < 1e-9, "a={a}: {p} vs {closed}");
        assert!(row.last().unwrap().is_empty());
    }
}

#[test]
fn ising_cumulant_matches_transfer_matrix_closed_form() {
    let (_, rows) = csv_rows(&ok(&["pressure-curve", "--builtin", "ising", "--grid", "-2:2:0.5"]));
    let c1 = 1f64.cosh();
    for row in rows {
        let s: f64 = row[0].parse().unwrap();
        let lam: f64 = row[2].parse().unwrap();
        let e = 1f64.exp();
        let closed = ((e * s.cosh() + (e * e * s.sinh().powi(2) + 1.0 / (e * e)).sqrt()) / (2.0 * c1)).ln();
        assert!((lam - closed).abs() < 1e-9, "s={s}");
    }
}

#[test]
fn empty_grid_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["pressure-curve", "--builtin", "ising", "--grid", "", "--out", out]);
    assert_eq!(fs::read_to_string(dir.path().join("pressure_curve.csv")).unwrap(), "s,pressure,cumulant,derivative,second_derivative,error\n");
    ok(&["rate-curve", "--builtin", "ising", "--grid", "", "--out", out, "--format", "json"]);
    assert_eq!(fs::read_to_string(dir.path().join("rate_curve.json")).unwrap(), "[]\n");
}

#[test]
fn out_of_range_rate_points_are_recorded() {
    let (_, rows) = csv_rows(&ok(&["rate-curve", "--builtin", "bernoulli", "--grid", "-0.8,0,0.2,0.5"]));
    assert_eq!(rows.len(), 4);
    assert!(rows[0][1].is_empty() && rows[0].join(",").contains("outside attainable range"));
    assert!((rows[2][2].parse::<f64>().unwrap() - (0.9 * (0.9f64 / 0.7).ln() + 0.1 * (0.1f64 / 0.3).ln())).abs() < 1e-9);
    assert!(rows[3].join(",").contains("outside attainable range"));
    let rows: Value = serde_json::from_str(&ok(&[
        "rate-curve", "--builtin", "bernoulli", "--grid", "0.5", "--format", "json",
    ]))
    .unwrap();
    assert_eq!(rows[0]["rate"], Value::Null);
    assert!(rows[0]["error"].is_string());
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = dir.path().to_str().unwrap();
        ok(&["sample", "--builtin", "ising", "--seed", "11", "--n", "300", "--trials", "40", "--out", out]);
        ok(&["clt", "--builtin", "ising", "--n", "32,64", "--dump", "--out", out]);
        ok(&["ldp", "--builtin", "bernoulli", "--lower", "0.1", "--upper", "0.3", "--n", "50,100", "--out", out]);
        ok(&["analyze", "--builtin", "golden-mean", "--a", "0.5", "--out", out]);
        ok(&["verify", "--builtin", "ising", "--out", out]);
    }
    let (fa, fb) = (read_dir_sorted(a.path()), read_dir_sorted(b.path()));
    assert_eq!(fa.len(), 9);
    assert_eq!(fa, fb);
    let paths = fs::read_to_string(a.path().join("sample_paths.txt")).unwrap();
    assert_eq!(paths.lines().count(), 40);
    assert!(paths.lines().all(|l| l.split(',').count() == 300));
}

#[test]
fn ldp_against_rate_function() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("indicator.json");
    fs::write(&obs, r#"{"memory": 1, "values": {"1": 1, "2": 0}}"#).unwrap();
    let text = ok(&[
        "ldp", "--builtin", "bernoulli", "--observable", obs.to_str().unwrap(), "--lower", "0.9", "--upper", "1", "--n", "400",
    ]);
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["n", "probability", "empirical_rate", "rate", "gap", "error"]);
    let gap: f64 = rows[0][4].parse().unwrap();
    assert!(gap < 0.02);
}

#[test]
fn sample_summary() {
    let listed = json(&["examples"]);
    assert_eq!(listed.as_array().unwrap().len(), 3);
    let dir = tempfile::tempdir().unwrap();
    ok(&["sample", "--builtin", "golden-mean", "--n", "5000", "--seed", "3", "--out", dir.path().to_str().unwrap()]);
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sample.json")).unwrap()).unwrap();
    assert_eq!(summary["chi_square"]["dof"], Value::from(2));
    assert!(f(&summary["chi_square"]["statistic"]) < 18.420680743952364);
    let path = fs::read_to_string(dir.path().join("sample_paths.txt")).unwrap();
    assert!(!path.contains("2,2"));
}
