use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::tolerances::TOLERANCE_TABLE_VERSION;
use super::{format_number as num, ExperimentConfig, ExperimentError, ResultRecord};

pub const RESULT_COLUMNS: [&str; 13] = [
    "suite",
    "check",
    "statistic",
    "lower",
    "upper",
    "pass",
    "n",
    "mean",
    "variance",
    "std_error",
    "min",
    "max",
    "parameters",
];

pub const VALUE_COLUMNS: [&str; 3] = ["check", "index", "value"];

fn header(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    for (k, v) in cfg.entries() {
        let _ = writeln!(s, "# {k} = {v}");
    }
    let _ = writeln!(s, "# tolerance_table = {TOLERANCE_TABLE_VERSION}");
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write(path: &Path, text: &str) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One row per record, after `#` lines with the config and seed.
pub fn write_results(
    path: &Path,
    cfg: &ExperimentConfig,
    records: &[ResultRecord],
) -> Result<(), ExperimentError> {
    let mut s = header(cfg);
    s.push_str(&RESULT_COLUMNS.join(","));
    s.push('\n');
    for r in records {
        let a = r.aggregate.as_ref();
        let params: Vec<String> = r
            .parameters
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.suite,
            r.check,
            num(r.statistic),
            num(r.lower),
            num(r.upper),
            r.pass,
            a.map_or(0, |a| a.n),
            opt(a.map(|a| a.mean)),
            opt(a.and_then(|a| a.variance)),
            opt(a.and_then(|a| a.std_error)),
            opt(a.map(|a| a.min)),
            opt(a.map(|a| a.max)),
            params.join(";"),
        );
    }
    write(path, &s)
}

/// Per-replica values of every record.
pub fn write_values(
    path: &Path,
    cfg: &ExperimentConfig,
    records: &[ResultRecord],
) -> Result<(), ExperimentError> {
    let mut s = header(cfg);
    s.push_str(&VALUE_COLUMNS.join(","));
    s.push('\n');
    for r in records {
        for (i, v) in r.values.iter().enumerate() {
            let _ = writeln!(s, "{},{i},{}", r.check, num(*v));
        }
    }
    write(path, &s)
}

pub fn write_summary(
    path: &Path,
    cfg: &ExperimentConfig,
    records: &[ResultRecord],
) -> Result<(), ExperimentError> {
    let mut s = header(cfg);
    let passed = records.iter().filter(|r| r.pass).count();
    let _ = writeln!(s, "\n{passed}/{} checks passed\n", records.len());
    for r in records {
        let _ = writeln!(
            s,
            "{}  {:<28} {:>12.6e} in [{:e}, {:e}]  ({:.2} s)",
            if r.pass { "PASS" } else { "FAIL" },
            r.check,
            r.statistic,
            r.lower,
            r.upper,
            r.wall_clock
        );
        if let Some(a) = &r.aggregate {
            let _ = writeln!(
                s,
                "      n = {}, mean = {:.6e}, se = {}, range [{:.6e}, {:.6e}]",
                a.n,
                a.mean,
                a.std_error.map_or("n/a".into(), |v| format!("{v:.3e}")),
                a.min,
                a.max
            );
        }
    }
    write(path, &s)
}
