use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn reference() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.json");
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, v: &Value) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn run(cmd: &str, cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irrframe"))
        .args([cmd, "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn construct_reports_admissibility() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &reference());
    let o = run("construct", &cfg, dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    let product = rep["product"].as_f64().unwrap();
    assert!(product < 0.25 && product > 0.0);
    for f in ["psi.csv", "tau.csv", "phi.csv", "psi_profile.csv", "nodes.csv", "construct.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn inadmissible_nodes_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = reference();
    v["nodes"]["generator"] = serde_json::json!({"kind": "lattice", "spacing": 1.0});
    let cfg = write_config(dir.path(), &v);
    let o = run("construct", &cfg, dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("< 1/4"));
}

#[test]
fn schema_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = reference();
    v.as_object_mut().unwrap().remove("matrix");
    let cfg = write_config(dir.path(), &v);
    let o = run("construct", &cfg, dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("matrix"));

    let o = Command::new(env!("CARGO_BIN_EXE_irrframe")).arg("construct").output().unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn non_expansive_matrix_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = reference();
    v["matrix"] = serde_json::json!([[0.5]]);
    let cfg = write_config(dir.path(), &v);
    assert_eq!(code(&run("construct", &cfg, dir.path())), 2);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &reference());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(code(&run("analyze", &cfg, out)), 0);
        assert_eq!(code(&run("synthesize", &cfg, out)), 0);
    }
    for f in ["signal.csv", "coefficients.csv", "synthesis.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn verify_reference_and_tampered() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = reference();
    v["norms"] = serde_json::json!([]);
    let cfg = write_config(dir.path(), &v);
    let o = run("verify", &cfg, dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rep: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert!(rep.get("norms").is_none());
    assert_eq!(rep["passed"], Value::Bool(true));

    v["verify"] = serde_json::json!({"tamper_dual": 1e-3});
    let cfg = write_config(dir.path(), &v);
    let o = run("verify", &cfg, dir.path());
    assert_eq!(code(&o), 3);
    let rep: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    let failing: Vec<i64> = rep["failing"].as_array().unwrap().iter().map(|x| x.as_i64().unwrap()).collect();
    assert!(failing.contains(&4), "{failing:?}");
    assert!(String::from_utf8_lossy(&o.stderr).contains('4'));
}

#[test]
fn unattainable_eps_is_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = reference();
    v["compact"]["eps"] = serde_json::json!({"rule": "absolute", "value": 1e-300});
    let cfg = write_config(dir.path(), &v);
    let o = run("compact", &cfg, dir.path());
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no truncation radius"));
}
