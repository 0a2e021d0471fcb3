use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sepfista(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sepfista")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = sepfista(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn csv_rows(path: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn has_manifest(path: &str) -> bool {
    Path::new(&format!("{path}.manifest.json")).exists()
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let out = sepfista(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(sepfista(&["esp"]).status.code(), Some(1));
}

#[test]
fn bad_flag_values_name_the_flag() {
    let dir = TempDir::new().unwrap();
    let out = sepfista(&["esp", "sweep", "--out", &p(&dir, "s.csv"), "--d-step", "-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--d-step"));

    let out = sepfista(&["svm", "train", "--data", &p(&dir, "missing.txt"), "--model", &p(&dir, "m.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--data"));

    let out = sepfista(&["esp", "solve", "--instance", "x.json", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--bogus"));
}

#[test]
fn help_lists_defaults() {
    let help = ok(&["svm", "train", "--help"]);
    assert!(help.contains("[default: 0.0001]"), "{help}");
    let help = ok(&["esp", "solve", "--help"]);
    assert!(help.contains("[default: 0.000001]") && help.contains("[default: early]"), "{help}");
    let help = ok(&["esp", "sweep", "--help"]);
    assert!(help.contains("[default: 0.1]") && help.contains("[default: 0.001]"), "{help}");
}

#[test]
fn psi_curve_grid_and_values() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "psi.csv");
    ok(&["svm", "psi-curve", "--out", &out]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 201);
    let at = |theta: f64| rows.iter().find(|r| (r[0].parse::<f64>().unwrap() - theta).abs() < 1e-12).unwrap().clone();
    let last = at(1.5);
    assert_eq!(last[1].parse::<f64>().unwrap(), 0.0);
    assert_eq!(last[2].parse::<f64>().unwrap(), 0.0);
    // linear piece with slope -gamma = -0.64 for n = 100
    assert!((at(-0.5)[2].parse::<f64>().unwrap() + 0.64).abs() < 1e-12);
    assert!(has_manifest(&out));
}

#[test]
fn sweep_writes_one_row_per_distance_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a.csv"), p(&dir, "b.csv"));
    ok(&["esp", "sweep", "--out", &a]);
    let rows = csv_rows(&a);
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().any(|r| r[1] == "1"));
    assert_eq!(rows.last().unwrap()[1], "1");
    let out = Command::new(env!("CARGO_BIN_EXE_sepfista"))
        .args(["esp", "sweep", "--out", &b])
        .env("SEPFISTA_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(has_manifest(&a));
}

#[test]
fn esp_solve_is_byte_identical_without_timing() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "inst.json");
    ok(&["esp", "synth", "--out", &inst, "--per-class", "5", "--dim", "4", "--seed", "2"]);
    let (r1, r2, m) = (p(&dir, "r1.csv"), p(&dir, "r2.csv"), p(&dir, "m.json"));
    for r in [&r1, &r2] {
        ok(&["esp", "solve", "--instance", &inst, "--mode", "tol", "--out", r, "--model", &m, "--no-timing"]);
    }
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());
    let rows = csv_rows(&r1);
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap() == 0.0));
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(&m).unwrap()).unwrap();
    assert_eq!(model["w"].as_array().unwrap().len(), 4);
    assert!(has_manifest(&r1) && has_manifest(&m));
}

#[test]
fn bench_compare_reports_both_modes() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "inst.json");
    ok(&["esp", "synth", "--out", &inst]);
    let out = p(&dir, "cmp.csv");
    ok(&["bench", "compare", "--instance", &inst, "--out", &out, "--no-timing"]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][0].as_str(), rows[1][0].as_str()), ("early", "tol"));
    let (early, tol): (usize, usize) = (rows[0][1].parse().unwrap(), rows[1][1].parse().unwrap());
    assert!(early < tol);
}

#[test]
fn train_then_predict_round_trip() {
    let dir = TempDir::new().unwrap();
    let (data, planted, model, trace, labels) =
        (p(&dir, "d.txt"), p(&dir, "planted.json"), p(&dir, "m.json"), p(&dir, "t.csv"), p(&dir, "y.txt"));
    let synth = ok(&["svm", "synth", "--nu", "0", "--seed", "4", "--out", &data, "--planted", &planted]);
    assert!(synth.contains("K: "));
    let train = ok(&["svm", "train", "--data", &data, "--model", &model, "--trace", &trace]);
    assert!(train.contains("training_accuracy: 1.0000000000000000e0"), "{train}");
    let out = sepfista(&["svm", "predict", "--model", &model, "--data", &data, "--out", &labels]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("accuracy: 1.0000000000000000e0"));
    let truth: Vec<&str> = fs::read_to_string(&data)
        .unwrap()
        .lines()
        .map(|l| l.split_whitespace().next().unwrap())
        .map(|s| if s == "+1" { "+1" } else { "-1" })
        .collect::<Vec<_>>();
    let predicted = fs::read_to_string(&labels).unwrap();
    assert_eq!(predicted.lines().collect::<Vec<_>>(), truth);
    assert_eq!(csv_rows(&trace)[0].len(), 5);
    for f in [&data, &planted, &model, &trace, &labels] {
        assert!(has_manifest(f), "{f}");
    }
}

#[test]
fn predict_pads_missing_trailing_features() {
    let dir = TempDir::new().unwrap();
    let (train_data, test_data, model) = (p(&dir, "train.txt"), p(&dir, "test.txt"), p(&dir, "m.json"));
    fs::write(&train_data, "+1 1:1 2:0.1 3:0.2\n+1 1:0.9 3:-0.1\n-1 1:-1 2:0.2\n-1 1:-0.8 2:-0.1 3:0.1\n").unwrap();
    fs::write(&test_data, "+1 1:0.7\n-1 1:-0.6 2:0.3\n").unwrap();
    ok(&["svm", "train", "--data", &train_data, "--model", &model]);
    let out = ok(&["svm", "predict", "--model", &model, "--data", &test_data]);
    assert_eq!(out, "+1\n-1\n");
}

#[test]
fn manifest_records_parameters_and_seed() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "inst.json");
    ok(&["esp", "synth", "--out", &out, "--seed", "9"]);
    let text = fs::read_to_string(format!("{out}.manifest.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(m["command"], "esp synth");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["parameters"]["per_class"], 10);
    assert_eq!(m["prng"], "chacha8");
}
