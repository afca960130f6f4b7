//! The `hgm` binary end to end: exit codes, output files and determinism.

use hgm::table::CsvTable;
use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn hgm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgm")).args(args).output().expect("binary runs")
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hgm-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read_diag(csv: &std::path::Path) -> Value {
    let text = std::fs::read_to_string(hgm::commands::diag_path(csv)).expect("sidecar exists");
    serde_json::from_str(&text).unwrap()
}

#[test]
fn solve_writes_csv_and_sidecar() {
    let dir = scratch_dir("solve");
    let out = dir.join("easy.csv");
    let o = hgm(&["solve-ivp", "--problem", "bundled:easy", "--h", "1/100", "--N", "200", "--every", "50", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = CsvTable::read_from(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(table.header[0], "t");
    assert_eq!(table.rows.len(), 5);
    assert!(table.metadata.iter().any(|(k, v)| k == "command" && v == "solve-ivp"));
    let diag = read_diag(&out);
    assert_eq!(diag["command"], "solve-ivp");
    assert_eq!(diag["backend"], "binary64");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn stdout_mode_prints_csv() {
    let o = hgm(&["oracle", "--airy", "--at", "5", "--digits", "30"]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let row = stdout.lines().find(|l| l.starts_with("5e0,")).expect("data row");
    assert!(row["5e0,".len()..].starts_with("1.0834442813607"), "{row}");
}

#[test]
fn negative_points_are_accepted() {
    let o = hgm(&["oracle", "--airy", "--at", "-20,-1/2", "--order", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("-1.76406127077984"));
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(hgm(&["solve-ivp", "--problem", "/nonexistent/problem.json", "--N", "10"]).status.code(), Some(2));
    assert_eq!(hgm(&["solve-ivp", "--problem", "bundled:easy", "--bogus-flag"]).status.code(), Some(2));
    assert_eq!(hgm(&["solve-ivp", "--problem", "bundled:easy", "--N", "10", "--stepper", "heun"]).status.code(), Some(2));
    assert_eq!(hgm(&["problem", "no-such-problem"]).status.code(), Some(2));

    let dir = scratch_dir("badjson");
    let file = dir.join("p.json");
    std::fs::write(&file, r#"{"operator": "d^2 - t", "interval": [0, 1], "unexpected": 1}"#).unwrap();
    let out = dir.join("out.csv");
    let o = hgm(&["solve-ivp", "--problem", file.to_str().unwrap(), "--N", "10", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(read_diag(&out)["exit_code"], 2);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn numerical_failure_exits_with_three_and_writes_sidecar() {
    let dir = scratch_dir("singular");
    let file = dir.join("p.json");
    std::fs::write(&file, r#"{"operator": "t*d - 1", "interval": [-1, 1], "initial": [1]}"#).unwrap();
    let out = dir.join("out.csv");
    let o = hgm(&["solve-ivp", "--problem", file.to_str().unwrap(), "--h", "1/2", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let diag = read_diag(&out);
    assert_eq!(diag["exit_code"], 3);
    assert!(diag["error"].as_str().unwrap().contains("numerical failure"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn perturbation_output_depends_only_on_the_seed() {
    let dir = scratch_dir("seed");
    let run = |seed: &str, name: &str| {
        let out = dir.join(name);
        let o = hgm(&[
            "perturb", "--problem", "bundled:exp_airy_b", "--method", "fit-b", "--basis", "chebyshev:8", "--quad", "trapezoid:200", "--trials", "8", "--seed", seed,
            "--output", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = run("11", "a.csv");
    assert_eq!(a, run("11", "b.csv"));
    assert_ne!(a, run("12", "c.csv"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn bundled_problems_are_listed_and_printed() {
    let o = hgm(&["problem"]);
    assert_eq!(o.status.code(), Some(0));
    let names = String::from_utf8(o.stdout).unwrap();
    assert!(names.lines().any(|l| l == "hkn_gauged"));
    let o = hgm(&["problem", "airy"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(hgm::ProblemFile::from_json(&text).is_ok());
}
