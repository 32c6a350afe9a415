use std::path::Path;
use std::process::{Command, Output};

fn sflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sflow")).args(args).output().unwrap()
}

fn write_spec(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

const SCALAR: &str = r#"{
    "backend": {"kind": "blocks", "blocks": [[1, 1.0]]},
    "path": {"family": "scalar_affine", "a": -1.0, "b": 1.0},
    "methods": "all"
}"#;

#[test]
fn run_scalar_all_methods() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.json", SCALAR);
    let out = sflow(&["run", &spec]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let values = v["values"].as_object().unwrap();
    assert_eq!(values.len(), 6);
    for (m, x) in values {
        assert!((x.as_f64().unwrap() - 1.0).abs() < 1e-6, "{m}");
    }
    for key in ["discrepancies", "diagnostics", "corrections", "version"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn run_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.json", SCALAR);
    let target = dir.path().join("r.csv");
    let out = sflow(&["run", &spec, "--format", "csv", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(target).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.starts_with("method,value"));
}

#[test]
fn run_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let singular = write_spec(dir.path(), "a.json", &SCALAR.replace("\"a\": -1.0", "\"a\": 0.0"));
    let out = sflow(&["run", &singular]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["error"]["reason"], "endpoint_not_invertible");

    let unknown = write_spec(dir.path(), "b.json", &SCALAR.replace("scalar_affine", "helix"));
    let out = sflow(&["run", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["reason"], "validation_error");

    let extra = write_spec(dir.path(), "c.json", &SCALAR.replace("\"methods\"", "\"colour\": 1, \"methods\""));
    assert_eq!(sflow(&["run", &extra]).status.code(), Some(2));

    let out = sflow(&["run", &dir.path().join("missing.json").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));

    let strict = write_spec(dir.path(), "d.json", &SCALAR.replace("\"all\"", "[\"winding\", \"heat\", \"integral_chi\"]"));
    let out = sflow(&["run", &strict, "--tolerance", "1e-300"]);
    assert_eq!(out.status.code(), Some(4));
    let v = json(&out);
    assert_eq!(v["error"]["reason"], "method_disagreement");
    assert!(v["values"]["heat"].is_number());
}

#[test]
fn selfcheck_is_deterministic() {
    let a = sflow(&["selfcheck", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = sflow(&["selfcheck", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let inv = v["invariants"].as_array().unwrap();
    assert!(inv.len() >= 20);
    assert!(inv.iter().all(|i| i["worst_deviation"].is_number()));
}

#[test]
fn demos() {
    let v = json(&sflow(&["demo", "tanwrap", "--points", "4", "--total", "2"]));
    assert!((v["winding"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(v["telescoping"], 0.0);

    let v = json(&sflow(&["demo", "covering", "--m", "5", "--k", "2"]));
    assert!(v["ratio_defect"].as_f64().unwrap().abs() < 1e-8);

    let v = json(&sflow(&["demo", "gn", "--n", "1,2,4"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}
