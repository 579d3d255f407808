use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chirplike"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

fn json(p: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const ONE: &str = "10,10,1.5;10,10,0.1";

#[test]
fn synth_writes_rows_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "s.csv");
    ok(&[
        "synth", "--p", "1", "--q", "1", "--params", ONE, "--n", "100", "--sigma2", "0.1", "--seed", "7", "--output",
        &out,
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 101);
    let m = json(&format!("{out}.manifest.json"));
    assert_eq!(m["command"], "synth");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["config"]["args"]["n"], 100);
}

#[test]
fn synth_empty_model_gives_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "z.csv");
    ok(&[
        "synth", "--p", "0", "--q", "0", "--n", "10", "--sigma2", "0", "--output", &out,
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    for (i, row) in rows.iter().enumerate() {
        let (t, y) = row.split_once(',').unwrap();
        assert_eq!(t.parse::<usize>().unwrap(), i + 1);
        assert_eq!(y.parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn synth_then_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sig = path(dir.path(), "s.csv");
    let rep = path(dir.path(), "f.json");
    let truth = "10,10,1.5;10,10,0.1";
    ok(&[
        "synth", "--p", "1", "--q", "1", "--params", truth, "--n", "100", "--output", &sig,
    ]);
    ok(&[
        "fit", "--input", &sig, "--p", "1", "--q", "1", "--method", "joint", "--output", &rep,
    ]);
    let r = json(&rep);
    let want = [10.0, 10.0, 1.5, 10.0, 10.0, 0.1];
    for (e, w) in r["estimates"].as_array().unwrap().iter().zip(want) {
        let v = e["value"].as_f64().unwrap();
        assert!((v - w).abs() < 1e-5, "{e}");
    }
    let fitted = std::fs::read_to_string(format!("{rep}.fitted.csv")).unwrap();
    assert_eq!(fitted.lines().next(), Some("t,original,fitted"));
    assert_eq!(fitted.lines().count(), 101);
    assert_eq!(json(&format!("{rep}.manifest.json"))["command"], "fit");
}

#[test]
fn fit_reports_standard_errors_and_order_selection() {
    let dir = tempfile::tempdir().unwrap();
    let sig = path(dir.path(), "s.csv");
    let rep = path(dir.path(), "f.json");
    ok(&[
        "synth", "--p", "1", "--q", "1", "--params", ONE, "--n", "200", "--sigma2", "0.1", "--seed", "3", "--output",
        &sig,
    ]);
    ok(&["fit", "--input", &sig, "--sigma2", "0.1", "--output", &rep]);
    let r = json(&rep);
    assert_eq!(r["p"], 1);
    assert_eq!(r["fit"]["trace"].as_array().unwrap().len(), 2);
    assert!(r["estimates"][2]["asym_se"].as_f64().unwrap() > 0.0);

    ok(&[
        "fit",
        "--input",
        &sig,
        "--select-order",
        "--pmax",
        "2",
        "--qmax",
        "2",
        "--output",
        &rep,
    ]);
    let r = json(&rep);
    assert_eq!((r["p"].as_u64(), r["q"].as_u64()), (Some(1), Some(1)));
    assert_eq!(r["n_params"], 6);
    assert_eq!(r["bic_table"].as_array().unwrap().len(), 9);
}

#[test]
fn fit_empty_model_keeps_all_energy() {
    let dir = tempfile::tempdir().unwrap();
    let sig = path(dir.path(), "y.csv");
    let rep = path(dir.path(), "f.json");
    std::fs::write(&sig, "1\n-2\n3\n0.5\n").unwrap();
    ok(&["fit", "--input", &sig, "--p", "0", "--q", "0", "--output", &rep]);
    let r = json(&rep);
    assert_eq!(r["sse"].as_f64().unwrap(), 14.25);
    assert!(r["estimates"].as_array().unwrap().is_empty());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = path(dir.path(), "bad.csv");
    let rep = path(dir.path(), "f.json");
    std::fs::write(&bad, "1\n2\nnot-a-number\n").unwrap();
    let out = run(&["fit", "--input", &bad, "--output", &rep]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert_eq!(run(&["fit", "--nonsense"]).status.code(), Some(2));
    let out = run(&["synth", "--p", "1", "--params", "1,1,9", "--n", "5", "--output", &rep]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = path(dir.path(), "c.json");
    std::fs::write(&cfg, "{ \"n\": 3 }").unwrap();
    assert_eq!(
        run(&["simulate", "--input", &cfg, "--output", &rep]).status.code(),
        Some(3)
    );
}

fn write_config(dir: &Path, replicates: usize, sigma2: f64) -> String {
    let cfg = path(dir, "c.json");
    let text = format!(
        r#"{{"truth": {{"sinusoids": [{{"a": 10, "b": 10, "alpha": 1.5}}],
             "chirps": [{{"c": 10, "d": 10, "beta": 0.1}}]}},
           "n": 100,
           "noise": {{"coefficients": [{{"lag": 0, "value": 1.0}}], "sigma2": {sigma2}}},
           "replicates": {replicates}, "method": "sequential", "base_seed": 11}}"#
    );
    std::fs::write(&cfg, text).unwrap();
    cfg
}

#[test]
fn simulate_table_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 40, 0.1);
    let a = path(dir.path(), "a.json");
    let b = path(dir.path(), "b.json");
    ok(&["simulate", "--input", &cfg, "--output", &a]);
    ok(&["simulate", "--config", &cfg, "--output", &b]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let ta = std::fs::read_to_string(format!("{a}.table.csv")).unwrap();
    assert_eq!(ta, std::fs::read_to_string(format!("{b}.table.csv")).unwrap());

    let rows: Vec<&str> = ta.lines().collect();
    assert_eq!(rows[0], "row,A1,B1,alpha1,C1,D1,beta1");
    let asym: Vec<f64> = rows[5].split(',').skip(1).map(|c| c.parse().unwrap()).collect();
    assert!(rows[5].starts_with("Asym Var,"));
    assert!((asym[2] - 1.20e-8).abs() < 1e-3 * 1.20e-8);
    assert!((asym[5] - 1.125e-12).abs() < 1e-3 * 1.125e-12);
}

#[test]
fn simulate_single_noise_free_replicate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 1, 0.0);
    let out = path(dir.path(), "r.json");
    ok(&["simulate", "--input", &cfg, "--output", &out]);
    let r = json(&out);
    for s in r["stats"].as_array().unwrap() {
        assert_eq!(s["variance"].as_f64().unwrap(), 0.0);
    }
}
