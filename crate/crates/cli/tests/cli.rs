use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn polydisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polydisk")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}): {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn takagi_half_sum_sigma() {
    let out = polydisk(&["takagi", "--builtin", "half-sum", "--n", "1,1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    let sigma = r["steps"][0]["sigma"].as_f64().unwrap();
    assert!((sigma - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-10, "{sigma}");
    assert_eq!(r["steps"][0]["rational_inner"], Value::Bool(false));
}

#[test]
fn takagi_from_spec_file_and_report_reingestion() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"version":1,"d":2,"function":{"kind":"builtin","name":"monomial","params":{"alpha":[1,1]}},"schedule":[[1,1],[2,1]]}"#,
    );
    let report = dir.path().join("report.json");
    let out = polydisk(&["takagi", &spec, "--seed", "7", "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let first: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(first["seed"], 7);
    assert_eq!(first["steps"][0]["rational_inner"], Value::Bool(true));

    let out = polydisk(&["takagi", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let second = json_of(&out);
    assert_eq!(second["seed"], 7);
    assert_eq!(first["spec"], second["spec"]);
    assert_eq!(first["steps"], second["steps"]);
}

#[test]
fn pade_sweep_csv_sigma_nondecreasing() {
    let out = polydisk(&[
        "pade-sweep", "--builtin", "half-sum", "--n", "1,1", "--n", "2,2", "--n", "3,3", "--n", "4,4", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["n", "sigma", "remainder_l2", "bound_l2", "min_qstar_modulus", "sup_err"]);
    let sig: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(sig.len(), 4);
    assert!(sig.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{sig:?}");
}

#[test]
fn k11_trivial_member() {
    let out = polydisk(&["k11", "--c00", "1,0", "--c01", "0,0", "--c10", "0,0", "--c11", "0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert_eq!(r["status"], "ok");
    let step = &r["steps"][0];
    assert_eq!(step["verdict"]["member"], Value::Bool(true));
    // φ ≡ 1: numerator and denominator both the constant 1
    for key in ["phi_num", "phi_den"] {
        let terms = step["interpolant"][key].as_array().unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0]["alpha"], serde_json::json!([0, 0]));
        assert_eq!(terms[0]["re"].as_f64(), Some(1.0));
    }
}

#[test]
fn k11_non_member_exits_two() {
    let out = polydisk(&["k11", "--c10", "1.5,0", "--c01", "1,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["status"], "not_member");
}

#[test]
fn cf_interp_feasible_and_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(
        dir.path(),
        "ok.json",
        r#"{"version":1,"d":2,"cf_data":[{"alpha":[0,0],"re":1,"im":0},{"alpha":[1,0],"re":0.5,"im":0.2},{"alpha":[0,1],"re":-0.3,"im":0},{"alpha":[1,1],"re":0.1,"im":0.1}]}"#,
    );
    let out = polydisk(&["cf-interp", &ok]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json_of(&out);
    let step = &r["steps"][0];
    assert!(step["eq_residual"].as_f64().unwrap() <= 1e-9);
    assert!(step["coefficients"].as_array().unwrap().iter().all(|c| c["err"].as_f64().unwrap() <= 1e-6));
    assert_eq!(step["verification"]["decay_pass"], Value::Bool(true));

    let bad = write(dir.path(), "bad.json", r#"{"version":1,"d":1,"cf_data":[{"alpha":[0],"re":1,"im":0},{"alpha":[1],"re":3,"im":0}]}"#);
    let out = polydisk(&["cf-interp", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["status"], "infeasible");
}

#[test]
fn pfister_csv() {
    let out = polydisk(&["pfister", "--builtin", "half-sum", "--rho", "0.9", "--kappa", "1", "--kappa", "2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["kappa", "sup_err", "unimodular_defect", "taylor_err"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r[2].parse::<f64>().unwrap() < 1e-8);
        // floats round-trip exactly through their CSV text
        let v: f64 = r[1].parse().unwrap();
        assert_eq!(v.to_string().parse::<f64>().unwrap(), v);
    }
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "u.json", r#"{"version":1,"d":2,"colour":"red"}"#);
    let out = polydisk(&["takagi", &unknown]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let broken = write(dir.path(), "b.json", "{ not json");
    assert_eq!(polydisk(&["takagi", &broken]).status.code(), Some(1));

    assert_eq!(polydisk(&["takagi", "--builtin", "half-sum", "--n", "1,1", "--tol", "bogus=1"]).status.code(), Some(1));
    assert_eq!(polydisk(&["takagi", "--builtin", "half-sum"]).status.code(), Some(1));
    assert_eq!(polydisk(&["k11", "--c10", "1,0", "--format", "csv"]).status.code(), Some(1));
    assert_eq!(polydisk(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(polydisk(&["--help"]).status.code(), Some(0));
}
