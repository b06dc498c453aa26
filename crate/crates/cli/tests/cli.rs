use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dnls(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dnls"))
        .args(args)
        .current_dir(dir)
        .env_remove("DNLS_SEED")
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn default_run_detects_blowup_within_bound() {
    let dir = TempDir::new().unwrap();
    let output = dnls(dir.path(), &["run", "--out", "out"]);
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));

    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["detected"], true);
    assert_eq!(report["verdict"], "consistent");
    let t = report["t_detected"].as_f64().unwrap();
    assert!((t - 0.5).abs() < 1e-4);
    let bound = report["bound_t0"].as_f64().unwrap();
    assert!((bound - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-9);
    assert_eq!(report["metadata"]["alpha_source"], "chosen");

    let verify = read_json(&dir.path().join("out/verify.json"));
    assert_eq!(verify["all_passed"], true);
    let lifespan = verify["checks"].as_array().unwrap().iter().find(|c| c["name"] == "lifespan").unwrap();
    assert_eq!(lifespan["passed"], true);
    assert!(dir.path().join("out/trajectory.csv").exists());
}

#[test]
fn conservative_run_passes_conservation_suite() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "spec.json",
        r#"{
  "initial_data": {"mode": {"k": 1, "amplitude": [0.01, 0.0]}},
  "params": {"p": 3, "lambda": [0, -1]},
  "solver": {"t_max": 1.0, "sample_interval": 0.01, "dt_init": 0.01},
  "outputs": "cons"
}"#,
    );
    let output = dnls(dir.path(), &["run", "--spec", "spec.json"]);
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stdout));
    let verify = read_json(&dir.path().join("cons/verify.json"));
    for name in ["total_density", "l2_drift", "m_drift", "gauge_modulus", "e2_drift"] {
        let check = verify["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap();
        assert_eq!(check["applicable"], true, "{name}");
        assert_eq!(check["passed"], true, "{name}");
    }

    let output = dnls(dir.path(), &["plotdata", "cons/trajectory.csv", "--spec", "spec.json", "--out", "plot"]);
    assert_eq!(code(&output), 0);
    let m: Vec<f64> = fs::read_to_string(dir.path().join("plot/m.dat"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(m.len(), 101);
    assert!(m.iter().all(|v| (v - m[0]).abs() <= 1e-8 * m[0].abs()));
    let bound = fs::read_to_string(dir.path().join("plot/bound.dat")).unwrap();
    assert!(bound.contains("not applicable"));
}

#[test]
fn malformed_specs_exit_2_with_location() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "truncated.json", "{\n  \"n\": 64,\n  \"params\": {\"p\": 3");
    write(dir.path(), "bad_p.json", "{\n  \"n\": 64,\n  \"params\": {\"p\": 1, \"lambda\": [1, 0]}\n}");
    write(dir.path(), "unknown.json", "{\"n\": 64, \"steps\": 3}");
    write(dir.path(), "odd.json", "{\"n\": 63}");
    for (file, needle) in [
        ("truncated.json", "truncated.json:3:"),
        ("bad_p.json", "bad_p.json:3:"),
        ("unknown.json", "unknown field `steps`"),
        ("odd.json", "n:"),
    ] {
        let output = dnls(dir.path(), &["run", "--spec", file]);
        assert_eq!(code(&output), 2, "{file}");
        let stderr = String::from_utf8_lossy(&output.stderr);
        assert!(stderr.contains(needle), "{file}: {stderr}");
    }
    assert_eq!(code(&dnls(dir.path(), &["run", "--spec", "missing.json"])), 2);
}

#[test]
fn sweep_reports_bound_scaling() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "spec.json", r#"{"n": 64, "solver": {"sample_interval": 0.01, "t_max": 3}}"#);
    let output = dnls(
        dir.path(),
        &["sweep", "--spec", "spec.json", "--amplitudes", "0.5,1,2", "--jobs", "2", "--out", "sweep"],
    );
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));

    let summary = fs::read_to_string(dir.path().join("sweep/summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("A,I_abs,bound_T0,t_detected,consistent"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 3);
    let bounds: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    for (bound, expected) in bounds.iter().zip([4.0, 1.0, 0.25]) {
        assert!((bound / bounds[1] - expected).abs() < 1e-12);
    }
    for (row, expected) in rows.iter().zip([2.0, 0.5, 0.125]) {
        let t: f64 = row[3].parse().unwrap();
        assert!((t - expected).abs() < 1e-4);
        assert_eq!(row[4], "true");
    }
    assert_eq!(read_json(&dir.path().join("sweep/scaling.json"))["passed"], true);
}

#[test]
fn sweep_needs_two_amplitudes() {
    let dir = TempDir::new().unwrap();
    let output = dnls(dir.path(), &["sweep", "--amplitudes", "1"]);
    assert_eq!(code(&output), 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("at least 2"));
}

#[test]
fn plotdata_rejects_bad_csv() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "empty.csv", "");
    write(dir.path(), "header_only.csv", "t,M,total_density_abs,l2,lp1,sup\n");
    write(dir.path(), "columns.csv", "t,M\n0,1\n0.1,1\n");
    for file in ["empty.csv", "header_only.csv", "columns.csv"] {
        assert_eq!(code(&dnls(dir.path(), &["plotdata", file])), 2, "{file}");
    }
}

#[test]
fn plotdata_bound_approaches_singular_time() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "spec.json", r#"{"n": 64, "solver": {"sample_interval": 0.01, "t_max": 1}}"#);
    assert_eq!(code(&dnls(dir.path(), &["run", "--spec", "spec.json", "--out", "run"])), 0);
    let output = dnls(dir.path(), &["plotdata", "run/trajectory.csv", "--spec", "spec.json", "--out", "plot"]);
    assert_eq!(code(&output), 0);
    for name in ["m.dat", "bound.dat", "sup.dat"] {
        assert!(dir.path().join("plot").join(name).exists());
    }
    let text = fs::read_to_string(dir.path().join("plot/bound.dat")).unwrap();
    let t_star = 2.0 * std::f64::consts::PI.powi(2);
    let times: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().next().unwrap().parse().unwrap())
        .collect();
    assert!(times.windows(2).all(|w| w[0] < w[1]));
    let last = *times.last().unwrap();
    assert!(last < t_star && t_star - last < 0.05, "last point {last}");
}

#[test]
fn archived_trajectory_reverifies_identically() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "spec.json", r#"{"n": 64, "solver": {"sample_interval": 0.01, "t_max": 1}}"#);
    assert_eq!(code(&dnls(dir.path(), &["run", "--spec", "spec.json", "--out", "run"])), 0);
    let args = ["verify", "run/trajectory.csv", "--spec", "spec.json", "--report", "run/report.json"];
    let mut first = args.to_vec();
    first.extend(["--out", "a"]);
    let mut second = args.to_vec();
    second.extend(["--out", "b"]);
    assert_eq!(code(&dnls(dir.path(), &first)), 0);
    assert_eq!(code(&dnls(dir.path(), &second)), 0);
    assert_eq!(
        fs::read(dir.path().join("a/verify.json")).unwrap(),
        fs::read(dir.path().join("b/verify.json")).unwrap()
    );
}

#[test]
fn runs_are_deterministic_and_seed_can_be_overridden() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "spec.json",
        r#"{"n": 64,
            "initial_data": {"random": {"seed": 3, "n_modes": 6, "decay": 2.0, "jitter": 0.5}},
            "params": {"p": 3, "lambda": [0, -1]},
            "solver": {"sample_interval": 0.01, "dt_init": 0.01, "t_max": 0.2}}"#,
    );
    for out in ["a", "b"] {
        dnls(dir.path(), &["run", "--spec", "spec.json", "--out", out]);
    }
    for name in ["trajectory.csv", "report.json", "verify.json"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(name)).unwrap(),
            fs::read(dir.path().join("b").join(name)).unwrap(),
            "{name}"
        );
    }

    let output = Command::new(env!("CARGO_BIN_EXE_dnls"))
        .args(["run", "--spec", "spec.json", "--out", "c"])
        .current_dir(dir.path())
        .env("DNLS_SEED", "4")
        .output()
        .unwrap();
    assert!(output.status.code().is_some());
    assert_eq!(read_json(&dir.path().join("c/report.json"))["metadata"]["seed"], 4);
    assert_ne!(
        fs::read(dir.path().join("a/trajectory.csv")).unwrap(),
        fs::read(dir.path().join("c/trajectory.csv")).unwrap()
    );

    let output = Command::new(env!("CARGO_BIN_EXE_dnls"))
        .args(["run", "--spec", "spec.json", "--out", "d"])
        .current_dir(dir.path())
        .env("DNLS_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(code(&output), 2);
}
