use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heat-threshold"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn run_dirs(out: &Path) -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    dirs.sort();
    dirs
}

fn only_run(out: &Path) -> PathBuf {
    let dirs = run_dirs(out);
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.into_iter().next().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let (header, rows) = csv_rows(path);
    let i = header.iter().position(|h| h == name).unwrap();
    rows.into_iter().map(|r| r[i].clone()).collect()
}

fn numbers(path: &Path, name: &str) -> Vec<f64> {
    column(path, name).iter().map(|v| v.parse().unwrap()).collect()
}

#[test]
fn admissible_power_exp_exits_zero() {
    let tmp = TempDir::new().unwrap();
    let report = tmp.path().join("report.json");
    let out = report.to_str().unwrap();
    let o = run(
        &tmp.path().join("runs"),
        &["check", "--family", "power-exp", "--p", "5", "--q", "2", "--dim", "3", "--out", out],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&report);
    assert_eq!(v["config"]["nonlinearity"]["family"], "power-exp");
    assert_eq!(v["config"]["domain"]["dim"], 3);
    let verdicts: Vec<&str> =
        v["result"]["conditions"].as_array().unwrap().iter().map(|c| c["verdict"].as_str().unwrap()).collect();
    assert_eq!(verdicts, ["PASS"; 4]);
    assert!(only_run(&tmp.path().join("runs")).join("admissibility.json").exists());
}

#[test]
fn subcritical_pure_power_exits_one() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["check", "--family", "pure-power", "--p", "2", "--dim", "3"]);
    assert_eq!(code(&o), 1);
    let v = json(&only_run(tmp.path()).join("admissibility.json"));
    let a4 = v["result"]["conditions"].as_array().unwrap().iter().find(|c| c["condition"] == "A4").unwrap();
    assert_eq!(a4["verdict"], "FAIL");
}

#[test]
fn config_errors_exit_two_and_name_the_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.ini");
    for (text, key) in [
        ("[domain]\ndim = three\n", "domain.dim"),
        ("[solver]\nrtoll = 1e-9\n", "solver.rtoll"),
        ("[solver]\nrtol = -1\n", "solver.rtol"),
        ("[nonlinearity]\nfamily = power-exp\np = 4\n", "nonlinearity.p"),
    ] {
        fs::write(&cfg, text).unwrap();
        let o = run(&tmp.path().join("runs"), &["--config", cfg.to_str().unwrap(), "check"]);
        assert_eq!(code(&o), 2);
        assert!(String::from_utf8_lossy(&o.stderr).contains(key), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run(&tmp.path().join("runs"), &["check", "--set", "domain.dim=2"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("domain.dim"));
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn flags_override_the_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.ini");
    fs::write(&cfg, "[nonlinearity]\nfamily = pure-power\np = 2\n").unwrap();
    let o = run(
        &tmp.path().join("runs"),
        &["--config", cfg.to_str().unwrap(), "check", "--family", "power-exp", "--p", "6"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&only_run(&tmp.path().join("runs")).join("admissibility.json"));
    assert_eq!(v["config"]["nonlinearity"]["family"], "power-exp");
    assert_eq!(v["config"]["nonlinearity"]["p"], 6.0);
}

#[test]
fn singular_pure_cube_in_five_dimensions_matches_the_closed_form() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["singular", "--family", "pure-power", "--p", "3", "--dim", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = only_run(tmp.path());
    let table = dir.join("singular_table.csv");
    let (r, u) = (numbers(&table, "r"), numbers(&table, "u_star"));
    let worst = r
        .iter()
        .zip(&u)
        .filter(|(r, _)| (1e-2..=1.0).contains(*r))
        .map(|(r, u)| (u * r / 2f64.sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst}");
    let v = json(&dir.join("singular.json"));
    assert_eq!(v["result"]["admissible"], false);
    assert_eq!(v["result"]["flux"]["pass"], true);
    assert_eq!(v["config"]["domain"]["dim"], 5);
}

#[test]
fn singular_power_exp_ratio_on_the_smallest_decade() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["singular", "--set", "domain.r_patch=1e-6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let path = only_run(tmp.path()).join("asymptotic_ratio.csv");
    let (r, ratio) = (numbers(&path, "r"), numbers(&path, "ratio"));
    let smallest: Vec<f64> = r.iter().zip(&ratio).filter(|(r, _)| **r <= 1e-5).map(|(_, q)| *q).collect();
    assert!(smallest.len() > 10);
    assert!(smallest.iter().all(|q| (0.95..=1.05).contains(q)), "{smallest:?}");
}

#[test]
fn failed_runs_leave_partial_artifacts() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["singular", "--set", "solver.patch_tol=1e-300"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("seeding point"));
    let dir = only_run(tmp.path());
    assert!(dir.join("admissibility.json.partial").exists());
    assert!(!dir.join("admissibility.json").exists());
}

#[test]
fn scan_is_monotone_and_deterministic() {
    let tmp = TempDir::new().unwrap();
    for _ in 0..2 {
        let o = run(tmp.path(), &["scan"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let dirs = run_dirs(tmp.path());
    assert_eq!(dirs.len(), 2);
    let (a, b) = (dirs[0].join("scan.csv"), dirs[1].join("scan.csv"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let labels = column(&a, "classification");
    assert_eq!(labels.len(), 8);
    let rank = |l: &str| match l {
        "GlobalBounded" => 0,
        "Undetermined" => 1,
        _ => 2,
    };
    let ranks: Vec<i32> = labels.iter().map(|l| rank(l)).collect();
    assert!(ranks.windows(2).all(|w| w[0] <= w[1]), "{labels:?}");
    assert_eq!(ranks.first(), Some(&0));
    assert_eq!(ranks.last(), Some(&2));
    let v = json(&dirs[0].join("scan.json"));
    assert_eq!(v["config"]["solver"]["caps"], serde_json::json!([1e4, 1e5]));
}

#[test]
fn ladder_gaps_settle() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["iterate", "--set", "experiment.k_max=6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let dir = only_run(tmp.path());
    let v = json(&dir.join("ladder.json"));
    for seed in ["from_below", "from_above"] {
        let gaps: Vec<f64> =
            v["result"][seed]["cauchy_gaps"].as_array().unwrap().iter().map(|g| g.as_f64().unwrap()).collect();
        assert_eq!(gaps.len(), 6);
        assert!(gaps[3..].windows(2).all(|w| w[1] < w[0]), "{seed}: {gaps:?}");
    }
    assert!(v["result"]["sandwich_violation"].as_f64().unwrap() <= 1e-8);
    assert_eq!(numbers(&dir.join("ladder_limits.csv"), "r").len(), 64);
}

#[test]
fn pure_heat_evolution_stays_bounded() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["evolve", "--pure-heat", "--set", "experiment.amplitude=0.3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = only_run(tmp.path());
    let v = json(&dir.join("evolve.json"));
    assert_eq!(v["result"]["outcome"]["classification"]["kind"], "global-bounded");
    assert_eq!(v["config"]["experiment"]["pure_heat"], true);
    assert!(dir.join("field_cap1e4.csv").exists());
    assert!(dir.join("norms_cap1e5.csv").exists());
}

#[test]
fn scaled_singular_data_blows_up() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["evolve", "--set", "experiment.perturbation=scaling", "--set", "experiment.factor=1.2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&only_run(tmp.path()).join("evolve.json"));
    let class = &v["result"]["outcome"]["classification"];
    assert_eq!(class["kind"], "blow-up");
    assert!(class["t_detect"].as_f64().unwrap() > 0.0);
    assert_eq!(v["result"]["outcome"]["side"], "above");
}
