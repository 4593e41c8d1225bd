use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nrqed-spin"));
    c.env_remove("NRQED_SPIN_OUT_DIR");
    c
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nrqed-spin-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn verify_passes_at_large_alpha() {
    let out = bin().args(["verify", "--alpha", "10"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = lines(&out);
    assert_eq!(recs[0]["config"]["alpha"], 10.0);
    let summary = recs.last().unwrap();
    assert_eq!(summary["required_passed"], true);
}

#[test]
fn malformed_config_exits_two() {
    let path = scratch("bad.toml");
    std::fs::write(&path, "alpha = \"lots\"\n").unwrap();
    let out = bin().args(["verify", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&path, "[scan]\nk_grid = []\n").unwrap();
    let out = bin().args(["scan", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().arg("--bogus-flag").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn forward_amplitude_exits_one() {
    let path = scratch("forward.toml");
    std::fs::write(&path, "[amplitude]\ntheta = 0.0\n").unwrap();
    let out = bin().args(["amplitude", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let recs = lines(&out);
    assert_eq!(recs.last().unwrap()["record"], "error");
    assert!(String::from_utf8_lossy(&out.stderr).contains("forward-singular"));
}

#[test]
fn records_carry_hash_and_version() {
    let out = bin().args(["second-born"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let recs = lines(&out);
    let hash = recs[0]["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    for r in &recs {
        assert_eq!(r["config_hash"], Value::String(hash.clone()));
        assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    }
    let crossed: Vec<&Value> = recs.iter().filter(|r| r["record"] == "crossed").collect();
    assert_eq!(crossed[0]["norm"], 0.0);
}

#[test]
fn out_dir_env_and_out_flag() {
    let dir = scratch("envdir");
    let out = Command::new(env!("CARGO_BIN_EXE_nrqed-spin")).arg("oracle").env("NRQED_SPIN_OUT_DIR", &dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(dir.join("oracle.jsonl")).unwrap();
    let rec: Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
    let pi = rec["scalar"][0].as_f64().unwrap();
    assert!((pi - std::f64::consts::PI).abs() < 1e-6);

    let file = scratch("explicit.jsonl");
    let out = bin().args(["evolve", "--summary", "--out"]).arg(&file).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(&file).unwrap().lines().count() == 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("overall: PASS"));
}

#[test]
fn singlet_scan_summary() {
    let path = scratch("singlet.toml");
    std::fs::write(&path, "[scan]\ninitial = \"psi-minus\"\n").unwrap();
    let out = bin().args(["scan", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let recs = lines(&out);
    let s = recs.last().unwrap();
    assert_eq!(s["record"], "scan-summary");
    assert_eq!(s["n_points"], 3 * 64 * 16);
    assert!((s["min_concurrence"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
}
