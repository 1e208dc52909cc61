//! End-to-end runs of the binary on small grids.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kahlercap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kahlercap"))
        .args(args)
        .env("KAHLERCAP_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn json(path: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn capacity_of_the_unit_ball() {
    let dir = tempfile::tempdir().unwrap();
    let set = write(dir.path(), "ball.json", r#"{"type": "ball", "center": [0, 0], "radius": 1.0}"#);
    let rep = dir.path().join("r.json");
    let rep = rep.to_str().unwrap();
    let out = kahlercap(&["capacity", "--set", &set, "--res", "129", "--box", "2", "--family", "8", "--report", rep]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(rep);
    let t = r["results"]["t_alex"].as_f64().unwrap();
    assert!((t - 0.5f64.sqrt()).abs() < 2e-2, "t_alex {t}");
    assert_eq!(r["command"], "capacity");
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    assert!(r["tolerances"].is_object());
}

#[test]
fn reports_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let set = write(dir.path(), "ball.json", r#"{"type": "ball", "center": [0, 0], "radius": 0.5}"#);
    let mut bytes = Vec::new();
    for k in 0..2 {
        let rep = dir.path().join(format!("r{k}.json"));
        let field = dir.path().join(format!("f{k}.bin"));
        let out = kahlercap(&[
            "envelope",
            "--set",
            &set,
            "--res",
            "65",
            "--box",
            "2",
            "--out",
            field.to_str().unwrap(),
            "--report",
            rep.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        bytes.push((std::fs::read(&rep).unwrap(), std::fs::read(&field).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn malformed_spec_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let set = write(dir.path(), "bad.json", "{\n  \"type\": \"ball\",\n  \"radius\": -1\n}");
    let out = kahlercap(&["capacity", "--set", &set, "--res", "65", "--box", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("radius") && err.contains("line 3"), "{err}");
    assert_eq!(err.matches("line").count(), 1, "{err}");
}

#[test]
fn empty_sweep_range() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let out = kahlercap(&["sweep", "--from", "2", "--to", "1", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("empty"));
    assert!(!csv.exists());
}

#[test]
fn bad_thread_cap() {
    let out = Command::new(env!("CARGO_BIN_EXE_kahlercap"))
        .args(["verify", "--only", "14"])
        .env("KAHLERCAP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn chebyshev_table_for_a_disc() {
    let dir = tempfile::tempdir().unwrap();
    let set = write(dir.path(), "disc.json", r#"{"type": "ball", "center": [0, 0], "radius": 0.5}"#);
    let csv = dir.path().join("t.csv");
    let out = kahlercap(&["chebyshev", "--set", &set, "--nmax", "8", "--out", csv.to_str().unwrap(), "--res", "65", "--box", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N,M_N,M_N^(1/N)"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    // Degrees double: 1, 2, 4, 8.
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), [1.0, 2.0, 4.0, 8.0]);
    // B_{1/2} in FS normalization: T = R/√(1+R²).
    let t = 0.5 / 1.25f64.sqrt();
    for w in rows.windows(2) {
        assert!(w[1][2] <= w[0][2] + 1e-9);
    }
    assert!((rows[3][2] - t).abs() < 5e-2 * t, "{:?}", rows[3]);
}

#[test]
fn green_of_the_squaring_map() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("g.json");
    let out = kahlercap(&[
        "green",
        "--map",
        "z^2, w^2",
        "--res",
        "65",
        "--box",
        "2",
        "--report",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(rep.to_str().unwrap());
    assert!(r["results"]["functional_residual"].as_f64().unwrap() <= 2e-8);
    assert_eq!(r["results"]["lambda"], 2);

    let out = kahlercap(&["green", "--map", "z^2, w^2 +", "--res", "65", "--box", "2"]);
    assert_eq!(out.status.code(), Some(2));
}
