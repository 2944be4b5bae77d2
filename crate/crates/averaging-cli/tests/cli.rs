//! End-to-end checks of the binary: determinism of outputs, exit-code
//! classes, config-file merging, and the comparison pipeline.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_averaging"))
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

#[test]
fn simulate_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for run in ["a", "b"] {
        let status = bin()
            .args([
                "simulate",
                "--n",
                "200",
                "--t",
                "1",
                "--dist",
                "ber:0.5",
                "--seed",
                "7",
                "--replicas",
                "3",
                "--snapshots",
                "0.5,1",
                "--out-dir",
            ])
            .arg(tmp.path().join(run))
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        read(&tmp.path().join("a"), "snapshots.csv"),
        read(&tmp.path().join("b"), "snapshots.csv")
    );
    assert_eq!(
        read(&tmp.path().join("a"), "xj.csv"),
        read(&tmp.path().join("b"), "xj.csv")
    );
}

#[test]
fn point_mass_opinions_stay_fixed() {
    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "simulate", "--n", "2", "--t", "10", "--dist", "point:1.0", "--seed", "7",
            "--out-dir",
        ])
        .arg(tmp.path().join("run"))
        .status()
        .unwrap();
    assert!(status.success());
    let text = String::from_utf8(read(&tmp.path().join("run"), "snapshots.csv")).unwrap();
    for line in text.lines().skip(1) {
        let opinion = line.split(',').nth(3).unwrap();
        assert_eq!(opinion, "1");
    }
}

#[test]
fn exit_codes_by_failure_class() {
    // Validation error.
    let out = bin()
        .args(["simulate", "--n", "10", "--t", "1", "--dist", "ber:2.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Numerical error (time step above the stability bound).
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "solve-pde", "--dist", "linear2x", "--l", "2", "--n", "128", "--dt", "0.5",
            "--t", "1", "--out-dir",
        ])
        .arg(tmp.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_merges_under_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "n = 50\nt = 0.5\ndist = \"ber:0.5\"\nseed = 3\n").unwrap();

    // Flag overrides the file's seed; file supplies the rest.
    for (dir, seed_flag) in [("c1", None), ("c2", Some("3")), ("c3", Some("4"))] {
        let mut cmd = bin();
        cmd.args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out-dir")
            .arg(tmp.path().join(dir));
        if let Some(s) = seed_flag {
            cmd.args(["--seed", s]);
        }
        assert!(cmd.status().unwrap().success());
    }
    let base = read(&tmp.path().join("c1"), "snapshots.csv");
    assert_eq!(base, read(&tmp.path().join("c2"), "snapshots.csv"));
    assert_ne!(base, read(&tmp.path().join("c3"), "snapshots.csv"));
}

#[test]
fn solver_compares_clean_against_itself() {
    let tmp = tempfile::tempdir().unwrap();
    let solve = tmp.path().join("solve");
    let status = bin()
        .args([
            "solve-pde", "--dist", "linear2x", "--l", "2", "--n", "512", "--dt", "1e-3",
            "--t", "0.5", "--out-dir",
        ])
        .arg(&solve)
        .status()
        .unwrap();
    assert!(status.success());

    let cmp = tmp.path().join("cmp");
    let out = bin()
        .args(["compare", "--sim"])
        .arg(&solve)
        .arg("--reference")
        .arg(&solve)
        .arg("--out-dir")
        .arg(&cmp)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report = String::from_utf8(read(&cmp, "report.csv")).unwrap();
    for line in report.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[5], "1", "metric failed: {line}");
        let value: f64 = cols[3].parse().unwrap();
        assert!(value <= 1e-6, "self-comparison metric {value} above 1e-6");
    }
}

#[test]
fn compare_rejects_disjoint_times() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for (dir, t) in [(&a, "0.25"), (&b, "0.5")] {
        let status = bin()
            .args([
                "solve-pde", "--dist", "linear2x", "--l", "2", "--n", "128", "--dt",
                "1e-3", "--t", t, "--out-dir",
            ])
            .arg(dir)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let out = bin()
        .args(["compare", "--sim"])
        .arg(&a)
        .arg("--reference")
        .arg(&b)
        .arg("--out-dir")
        .arg(tmp.path().join("cmp"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("align"), "unexpected message: {msg}");
}

#[test]
fn torus_pairing_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("torus");
    let status = bin()
        .args([
            "simulate-torus", "--d", "1", "--n", "32", "--profile", "sin1", "--t",
            "0.02", "--replicas", "4", "--seed", "5", "--out-dir",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let text = String::from_utf8(read(&dir, "pairing.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,G_name,simulated,reference,stderr");
    assert_eq!(text.lines().count(), 2);
    let manifest = String::from_utf8(read(&dir, "manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 5"));
}
