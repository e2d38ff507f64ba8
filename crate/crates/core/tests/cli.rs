use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use levy_pme::app::{exit_code_for, EXIT_NUMERIC, EXIT_OK, EXIT_PROPERTY, EXIT_USAGE, WORKERS_ENV};
use levy_pme::Error;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str], scenario: &Path, out: &Path, workers: Option<&str>) -> i32 {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_levy-pme"));
    cmd.args(args).arg("--scenario").arg(scenario).arg("--out").arg(out);
    if let Some(w) = workers {
        cmd.env(WORKERS_ENV, w);
    }
    cmd.output().expect("binary runs").status.code().expect("exit code")
}

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn simulate_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&["simulate", "--seed", "3"], &scenarios().join("deterministic.toml"), dir.path(), None);
    assert_eq!(code, EXIT_OK);
    for name in ["report.json", "metadata.json", "simulate.csv", "trajectories/path_0000.csv", "noise/path_0001.csv"] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    assert!(!dir.path().join("failure.json").exists());
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
}

#[test]
fn tables_are_identical_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("additive.toml");
    for (dir, w) in [(&a, "1"), (&b, "4")] {
        let code = run(&["lambda-study", "--seed", "17", "--paths", "6", "--step", "0.05"], &scenario, dir.path(), Some(w));
        assert_eq!(code, EXIT_OK);
    }
    for name in ["lambda-study.csv", "report.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn unknown_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "[operator]\nkind = \"torus\"\nmode_cutoff = 4\ncolour = 1\n");
    let out = dir.path().join("out");
    assert_eq!(run(&["simulate", "--seed", "1"], &scenario, &out, None), EXIT_USAGE);
    let failure = fs::read_to_string(out.join("failure.json")).unwrap();
    assert!(failure.contains("colour"), "{failure}");
}

#[test]
fn one_point_ladder_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "[operator]\nkind = \"torus\"\nmode_cutoff = 4\n\n[study]\nlambda_ladder = [0.1]\n");
    assert_eq!(run(&["lambda-study", "--seed", "1"], &scenario, &dir.path().join("out"), None), EXIT_USAGE);
}

#[test]
fn missing_arguments_are_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_levy-pme")).arg("simulate").output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
}

#[test]
fn starved_inner_solver_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(
        dir.path(),
        "[operator]\nkind = \"torus\"\nmode_cutoff = 8\n\n[psi]\nkind = \"saturating\"\ncap = 0.1\n\n[solver]\ninner_tolerance = 1e-14\nmax_inner_iterations = 1\n",
    );
    let out = dir.path().join("out");
    assert_eq!(run(&["simulate", "--seed", "1", "--paths", "2"], &scenario, &out, None), EXIT_NUMERIC);
    let failure: serde_json::Value = serde_json::from_slice(&fs::read(out.join("failure.json")).unwrap()).unwrap();
    assert_eq!(failure["kind"], "numeric");
}

#[test]
fn violations_map_to_the_property_exit_code() {
    let e = Error::Violation {
        name: "monotonicity",
        slack: -1.0,
        witness: String::new(),
    };
    assert_eq!(exit_code_for(&e), EXIT_PROPERTY);
}

#[test]
fn inequalities_pass_on_every_shipped_scenario() {
    for name in ["baseline.toml", "additive.toml", "saturating.toml"] {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run(&["inequalities", "--seed", "5"], &scenarios().join(name), dir.path(), Some("2")), EXIT_OK, "{name}");
        let table = fs::read_to_string(dir.path().join("inequalities.csv")).unwrap();
        assert!(table.lines().skip(1).all(|l| l.ends_with(",1")), "{name}: {table}");
    }
}
