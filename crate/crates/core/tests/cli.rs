use std::path::Path;
use std::process::{Command, Output};

fn ccdd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccdd"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const QUICK: &str = "[run]\nduration_us = 0.5\nn_realizations = 16\n";

#[test]
fn simulate_writes_curve_and_manifest() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", QUICK);
    let out = ccdd(&["simulate", "--config", "c.toml", "--out", "o"], d.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(d.path().join("o/curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time_us,fidelity,stderr"));
    assert_eq!(lines.count(), 181);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("o/manifest.json")).unwrap()).unwrap();
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for f in ["curve.csv", "resolved_config.toml", "manifest.json"] {
        assert!(outputs.contains(&f));
    }
    assert_eq!(manifest["bath_units"], "angular");
    assert!(manifest["config"]["internal"]["rabi_rad_per_us"].as_f64().unwrap() > 56.0);
}

#[test]
fn same_seed_gives_identical_csv_for_any_worker_count() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", QUICK);
    for (dir, w) in [("a", "1"), ("b", "4")] {
        let out = ccdd(&["simulate", "--config", "c.toml", "--out", dir, "--workers", w, "--seed", "9"], d.path());
        assert!(out.status.success());
    }
    let a = std::fs::read(d.path().join("a/curve.csv")).unwrap();
    let b = std::fs::read(d.path().join("b/curve.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn resolved_config_reproduces_outputs() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", QUICK);
    assert!(ccdd(&["simulate", "--config", "c.toml", "--out", "a", "--seed", "5"], d.path()).status.success());
    assert!(ccdd(&["simulate", "--config", "a/resolved_config.toml", "--out", "b"], d.path()).status.success());
    assert_eq!(
        std::fs::read(d.path().join("a/curve.csv")).unwrap(),
        std::fs::read(d.path().join("b/curve.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_two_and_name_the_key() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "dt.toml", "[run]\ndt_us = 0.01\n");
    let out = ccdd(&["simulate", "--config", "dt.toml", "--out", "o"], d.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.dt_us"));

    write(d.path(), "unknown.toml", "[bath]\ntau = 3\n");
    let out = ccdd(&["simulate", "--config", "unknown.toml", "--out", "o"], d.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bath.tau"));

    let out = ccdd(&["scan", "--alphas", "", "--out", "o"], d.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scan.alphas"));

    let out = ccdd(&["verify", "--window-us", "0", "--out", "o"], d.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("verify.window_us"));
}

#[test]
fn scan_rows_and_failed_fit_rows() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", "[run]\nduration_us = 2.0\nn_realizations = 40\n");
    let out = ccdd(&["scan", "--config", "c.toml", "--alphas", "0,0.1", "--out", "y"], d.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(d.path().join("y/scan.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "alpha,T_decay_us,stderr,fit_residual,status");
    assert_eq!(rows.len(), 3);
    // a noiseless spin lock has nothing to fit
    write(
        d.path(),
        "quiet.toml",
        "[bath]\ndiffusion_mhz3 = 0.0\n[amp_noise]\nrelative_error = 0.0\n\
         [hyperfine]\ncenters_mhz = [0.0]\nweights = [1.0]\npeak_width_mhz = 0.0\n\
         [run]\nduration_us = 1.0\nn_realizations = 2\n",
    );
    let out = ccdd(&["scan", "--config", "quiet.toml", "--alphas", "0", "--init-axis", "x", "--out", "x"], d.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(d.path().join("x/scan.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "");
    assert_ne!(row[4], "0");
}

#[test]
fn waveform_outputs() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "p.toml", "[scheme]\nkind = \"phase\"\nalpha = 0.1\n");
    assert!(ccdd(&["waveform", "--config", "p.toml", "--out", "p"], d.path()).status.success());
    let csv = std::fs::read_to_string(d.path().join("p/iq.csv")).unwrap();
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',').map(|x| x.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 1000);
    assert!(rows.iter().all(|(i, q)| (i * i + q * q - 1.0).abs() < 1e-14));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("p/iq_metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["scheme"], "phase");
    assert_eq!(meta["samples"], 1000);

    assert!(ccdd(&["waveform", "--out", "s"], d.path()).status.success());
    let csv = std::fs::read_to_string(d.path().join("s/iq.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",0.0000000000000000e0")));
}

#[test]
fn verify_report_passes() {
    let d = tempfile::tempdir().unwrap();
    let out = ccdd(&["verify", "--ratios", "50,100,200", "--out", "v"], d.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches("PASS").count(), 2);
    let csv = std::fs::read_to_string(d.path().join("v/verify.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("rwa,")).count(), 3);
}

#[test]
fn shipped_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.toml");
    let cfg = ccdd::cli::FileConfig::load(&path).unwrap();
    assert_eq!(cfg, ccdd::cli::FileConfig::default());
}
