//! Experiment harness and command-line behaviour.

use std::fs;
use std::path::Path;
use std::process::Command;

use rwsbi::experiments::{
    run_suite, suite_names, ExperimentConfig, ExperimentError, OUT_DIR_ENV, RESULT_COLUMNS,
    VALUE_COLUMNS,
};

const BIN: &str = env!("CARGO_BIN_EXE_rwsbi");

fn smoke(out: &Path, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_suite("smoke");
    cfg.seed = seed;
    cfg.out_dir = out.to_path_buf();
    cfg
}

fn header_row(csv: &str) -> &str {
    csv.lines().find(|l| !l.starts_with('#')).unwrap()
}

#[test]
fn same_config_and_seed_give_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    // one library run and one through the binary, so the env override cannot race
    run_suite(&smoke(&a, 9)).unwrap();
    let status = Command::new(BIN)
        .args(["verify", "--suite", "smoke", "--seed", "9", "--out-dir"])
        .arg(&b)
        .env_remove(OUT_DIR_ENV)
        .output()
        .unwrap();
    assert!(status.status.success(), "{status:?}");
    for file in ["smoke.csv", "smoke_values.csv"] {
        let x = fs::read(a.join(file)).unwrap();
        let y = fs::read(b.join(file)).unwrap();
        assert_eq!(x, y, "{file} differs between runs");
    }
    let other = tmp.path().join("c");
    run_suite(&smoke(&other, 10)).unwrap();
    assert_ne!(
        fs::read(a.join("smoke_values.csv")).unwrap(),
        fs::read(other.join("smoke_values.csv")).unwrap()
    );
}

#[test]
fn suite_output_records_config_and_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let records = run_suite(&smoke(tmp.path(), 4)).unwrap();
    let csv = fs::read_to_string(tmp.path().join("smoke.csv")).unwrap();
    assert!(csv.contains("# suite = smoke\n"));
    assert!(csv.contains("# seed = 4\n"));
    assert!(csv.contains("# tolerance_table = "));
    assert_eq!(header_row(&csv), RESULT_COLUMNS.join(","));
    let rows: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), records.len());
    let values = fs::read_to_string(tmp.path().join("smoke_values.csv")).unwrap();
    assert_eq!(header_row(&values), VALUE_COLUMNS.join(","));
    let summary = fs::read_to_string(tmp.path().join("smoke_summary.txt")).unwrap();
    assert!(summary.contains("checks passed"));
    for r in &records {
        if let Some(a) = r.aggregate {
            assert_eq!(
                Some(a),
                rwsbi::experiments::aggregate_replicas(&r.values).ok()
            );
        }
    }
}

#[test]
fn unknown_suite_lists_the_available_ones() {
    let err = run_suite(&ExperimentConfig::for_suite("nope")).unwrap_err();
    assert!(err.is_config());
    let ExperimentError::UnknownSuite { ref available, .. } = err else {
        panic!("{err:?}");
    };
    assert_eq!(available, &suite_names());
    let msg = err.to_string();
    for name in suite_names() {
        assert!(msg.contains(name), "{msg}");
    }

    let out = Command::new(BIN)
        .args(["verify", "--suite", "nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("correlations"));
}

#[test]
fn invalid_parameters_are_config_errors() {
    let mut cfg = ExperimentConfig::for_suite("smoke");
    cfg.set("epsilon", "1.5").unwrap();
    assert!(run_suite(&cfg).unwrap_err().is_config());
    assert!(cfg.set("no_such_key", "1").is_err());
}

#[test]
fn config_file_values_yield_to_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("run.cfg");
    fs::write(&file, "# pilot\nsuite = smoke\nseed = 3\ngamma = 2\n").unwrap();
    let out = Command::new(BIN)
        .args(["verify", "--config"])
        .arg(&file)
        .args(["--seed", "5", "--out-dir"])
        .arg(tmp.path())
        .env_remove(OUT_DIR_ENV)
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let csv = fs::read_to_string(tmp.path().join("smoke.csv")).unwrap();
    assert!(csv.contains("# seed = 5\n"));
    assert!(csv.contains("# gamma = 2\n"));
}

#[test]
fn environment_overrides_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let ignored = tmp.path().join("ignored");
    let out = Command::new(BIN)
        .args(["verify", "--suite", "smoke", "--out-dir"])
        .arg(&ignored)
        .env(OUT_DIR_ENV, tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    assert!(tmp.path().join("smoke.csv").exists());
    assert!(!ignored.exists());

    let out = Command::new(BIN)
        .args(["solve-rho", "--t-max", "10"])
        .env(OUT_DIR_ENV, tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let csv = fs::read_to_string(tmp.path().join("solve_rho.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("t,rho0,")));
}

#[test]
fn single_run_commands_write_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str, &str); 5] = [
        (
            &["simulate", "rwsbi", "--t-max", "20", "--replicas", "2"],
            "simulate_rwsbi.csv",
            "replica,t,total_count",
        ),
        (
            &["simulate", "poisson", "--t-max", "20", "--replicas", "2"],
            "simulate_poisson.csv",
            "replica,t,total_count",
        ),
        (
            &["couple", "upper", "--t-max", "20", "--replicas", "2"],
            "couple_upper.csv",
            "replica,t,eta",
        ),
        (
            &["couple", "lower", "--n-max", "20"],
            "couple_lower.csv",
            "n,t_hat_finite",
        ),
        (
            &["couple", "two-walk", "--x0", "3", "--replicas", "5"],
            "couple_two_walk.csv",
            "replica,x0,success",
        ),
    ];
    for (args, file, header) in cases {
        let out = Command::new(BIN)
            .args(args)
            .env(OUT_DIR_ENV, tmp.path())
            .output()
            .unwrap();
        assert!(out.status.success(), "{args:?}: {out:?}");
        let csv = fs::read_to_string(tmp.path().join(file)).unwrap();
        assert!(header_row(&csv).starts_with(header), "{file}");
    }
    let spec = tmp.path().join("spec.txt");
    fs::write(&spec, "I:1 = 1\nI:2 = 1\nI:1,2 = 0.5\n").unwrap();
    let out = Command::new(BIN)
        .args(["correlate", "--mode", "exact", "--spec"])
        .arg(&spec)
        .env(OUT_DIR_ENV, tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let csv = fs::read_to_string(tmp.path().join("correlate.csv")).unwrap();
    assert!(csv.lines().last().unwrap().starts_with("exact,2,"));
}
