use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("halfline-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, cmd: &str, config: &str, extra: &[&str]) -> (i32, PathBuf) {
    let cfg = dir.join(format!("{cmd}.json"));
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("out-{cmd}-{}", extra.join("")));
    let status = Command::new(env!("CARGO_BIN_EXE_halfline"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    (status.status.code().unwrap(), out)
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn cosine(c: f64, theta: f64, rest: &str) -> String {
    format!(r#"{{"schema_version":1,"params":{{"c":{c},"flux":{{"kind":"cosine","theta":{theta}}}}}{rest}}}"#)
}

#[test]
fn trivial_orbit_has_period_pi() {
    let dir = scratch("trivial");
    let (code, out) = run(&dir, "orbit", &cosine(2.0, 0.0, ""), &[]);
    assert_eq!(code, 0);
    let m = manifest(&out);
    assert_eq!(m["status"], "ok");
    let t = m["metadata"]["T"].as_f64().unwrap();
    assert!((t - std::f64::consts::PI).abs() < 1e-4, "{t}");
    assert!(out.join("orbit.csv").exists() && out.join("profile.csv").exists());
}

#[test]
fn zeros_of_the_flux_block_the_orbit() {
    let dir = scratch("blocked");
    let (code, out) = run(&dir, "orbit", &cosine(1.0, 1.5, ""), &[]);
    assert_eq!(code, 1);
    let m = manifest(&out);
    assert_eq!(m["status"], "invariant-failure");
    let detail = m["checks"][0]["detail"].as_str().unwrap();
    assert!(detail.starts_with("no periodic orbit"), "{detail}");
}

#[test]
fn malformed_configs_exit_two_without_outputs() {
    let dir = scratch("malformed");
    let (code, out) = run(&dir, "evolve", &cosine(1.0, 0.5, r#","numerics":{"dt":-1.0,"t_end":1.0}"#), &[]);
    assert_eq!(code, 2);
    assert!(!out.exists());
    let (code, out) = run(&dir, "orbit", &cosine(1.0, 0.5, r#","unexpected":1"#), &[]);
    assert_eq!(code, 2);
    assert!(!out.exists());
    let (code, _) = run(&dir, "drift", &cosine(1.0, 0.5, r#","command":"orbit""#), &[]);
    assert_eq!(code, 2);
}

#[test]
fn evolve_writes_trace_and_compares_with_volterra() {
    let dir = scratch("evolve");
    let cfg = cosine(
        0.0,
        0.5,
        r#","numerics":{"dt":1e-3,"t_end":1.0},"grid":{"length":20.0,"nodes":800,"beta":3.0},"initial":{"kind":"affine","value":0.0,"slope":1.5},"evolve":{"volterra_check":true}"#,
    );
    let (code, out) = run(&dir, "evolve", &cfg, &["--strict"]);
    let m = manifest(&out);
    assert_eq!(code, 0, "{m}");
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.lines().count() > 1000);
}

#[test]
fn sweep_is_ordered_and_reproducible() {
    let dir = scratch("sweep");
    let cfg = cosine(1.0, 0.5, r#","sweep":{"kind":"strain","thetas":[0.1,0.3,0.5],"cs":[0.5,1.0,2.0]}"#);
    let (code, a) = run(&dir, "sweep", &cfg, &["--workers", "1"]);
    assert_eq!(code, 0);
    let (code, b) = run(&dir, "sweep", &cfg, &["--workers", "3"]);
    assert_eq!(code, 0);
    let ta = std::fs::read(a.join("sweep.csv")).unwrap();
    let tb = std::fs::read(b.join("sweep.csv")).unwrap();
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows[0].starts_with("0.1,0.5,") && rows[8].starts_with("0.5,2,"));
}

#[test]
fn snic_sweep_period_column_is_monotone() {
    let dir = scratch("snic-sweep");
    let cfg = cosine(1.0, 0.9, r#","sweep":{"kind":"snic","thetas":[0.9,0.99,0.999],"cs":[1.0]}"#);
    let (code, out) = run(&dir, "sweep", &cfg, &["--strict"]);
    assert_eq!(code, 0, "{}", manifest(&out));
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let ts: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(ts.windows(2).all(|w| w[1] > w[0]), "{ts:?}");
}

#[test]
fn spectrum_json_has_ladder_and_extrapolation() {
    let dir = scratch("spectrum");
    let (code, out) = run(&dir, "spectrum", &cosine(1.0, 0.5, ""), &["--strict"]);
    assert_eq!(code, 0);
    let s: Value = serde_json::from_str(&std::fs::read_to_string(out.join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(s["ladder"].as_array().unwrap().len(), 3);
    assert!(s["ladder"][0]["eigs"].is_array());
    let top = s["extrapolated"][0].as_f64().unwrap();
    assert!((top - 1.0).abs() < 1e-3);
}

#[test]
fn strict_promotes_soft_failures() {
    let dir = scratch("strict");
    let cfg = cosine(1.0, 1.5, "");
    let (code, _) = run(&dir, "heteroclinic", &cfg, &[]);
    assert_eq!(code, 0);
    // the n = 10 and n = 100 instances differ by more than 1e-3 after alignment
    let (code, out) = run(&dir, "heteroclinic", &cfg, &["--strict"]);
    assert_eq!(code, 1);
    assert_eq!(manifest(&out)["status"], "invariant-failure");
}
