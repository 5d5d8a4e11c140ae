//! Plot-ready CSV tables for the single-run commands. Every table starts
//! with `# key = value` lines describing the run, then the header row.

use std::fmt::Write as _;

use super::format_number as num;
use crate::couplings::{CouplingOutcome, LowerRun, UpperRun};
use crate::heat::{asymptotic_r, asymptotic_rho0, HeatError, RhoSolution};
use crate::particles::{SimError, SimRun};

pub const RHO_COLUMNS: [&str; 6] = ["t", "rho0", "R_sum", "R_integral", "asym_rho0", "asym_R"];
pub const SIMULATE_COLUMNS: [&str; 5] = [
    "replica",
    "t",
    "total_count",
    "origin_count",
    "vacant_time_0_t",
];
pub const PROFILE_COLUMNS: [&str; 4] = ["replica", "t", "x", "count"];
pub const UPPER_COLUMNS: [&str; 5] = ["replica", "t", "eta", "eta_tilde", "eta_hat"];
pub const LOWER_COLUMNS: [&str; 6] = [
    "n",
    "t_hat_finite",
    "t_tilde_finite",
    "e_n",
    "m_tilde_n",
    "cum_e",
];
pub const TWO_WALK_COLUMNS: [&str; 5] = [
    "replica",
    "x0",
    "success",
    "coupling_time",
    "hit_time_origin",
];
pub const CORRELATE_COLUMNS: [&str; 4] = ["mode", "k", "value", "error"];

fn start(meta: &[(String, String)], columns: &[&str]) -> String {
    let mut s = String::new();
    for (k, v) in meta {
        let _ = writeln!(s, "# {k} = {v}");
    }
    s.push_str(&columns.join(","));
    s.push('\n');
    s
}

fn flag(b: bool) -> u8 {
    u8::from(b)
}

/// Grid times of the solve, thinned to about `rows` log-spaced rows (the
/// first step and the final time are always included). The asymptotic
/// columns are empty where the formulas are undefined.
pub fn rho_table(
    meta: &[(String, String)],
    sol: &RhoSolution,
    rows: usize,
) -> Result<String, HeatError> {
    let mut s = start(meta, &RHO_COLUMNS);
    let times = sol.times();
    let Some(&last) = times.last() else {
        return Ok(s);
    };
    let first = times.get(1).copied().unwrap_or(last);
    let factor = if rows > 1 && last > first {
        (last / first).powf(1.0 / (rows - 1) as f64)
    } else {
        f64::INFINITY
    };
    let mut next = first;
    for (i, &t) in times.iter().enumerate() {
        if t < next && i + 1 != times.len() {
            continue;
        }
        next = (next * factor).max(t * (1.0 + 1e-12));
        let mass = sol.total_mass(t)?;
        let p = sol.params();
        let a_rho = asymptotic_rho0(t, p).map_or(String::new(), num);
        let a_r = asymptotic_r(t, p).map_or(String::new(), num);
        let _ = writeln!(
            s,
            "{},{},{},{},{a_rho},{a_r}",
            num(t),
            num(sol.rho0_values()[i]),
            num(mass.sum),
            num(mass.integral)
        );
    }
    Ok(s)
}

/// One row per replica and snapshot (the final state included).
pub fn simulation_table(meta: &[(String, String)], runs: &[SimRun]) -> Result<String, SimError> {
    let mut s = start(meta, &SIMULATE_COLUMNS);
    for (r, run) in runs.iter().enumerate() {
        for snap in run.snapshots.iter().chain([&run.final_state]) {
            let _ = writeln!(
                s,
                "{r},{},{},{},{}",
                num(snap.t),
                snap.count_total(),
                snap.count_at(0),
                num(run.vacancy.vacant_time(0.0, snap.t)?)
            );
        }
    }
    Ok(s)
}

/// Occupied sites of every snapshot.
pub fn profile_table(meta: &[(String, String)], runs: &[SimRun]) -> String {
    let mut s = start(meta, &PROFILE_COLUMNS);
    for (r, run) in runs.iter().enumerate() {
        for snap in run.snapshots.iter().chain([&run.final_state]) {
            for (x, c) in &snap.occupancy {
                let _ = writeln!(s, "{r},{},{x},{c}", num(snap.t));
            }
        }
    }
    s
}

pub fn upper_table(meta: &[(String, String)], runs: &[UpperRun]) -> String {
    let mut s = start(meta, &UPPER_COLUMNS);
    for (r, run) in runs.iter().enumerate() {
        for c in run.snapshots.iter().chain([&run.final_counts]) {
            let _ = writeln!(
                s,
                "{r},{},{},{},{}",
                num(c.t),
                c.eta,
                c.eta_tilde,
                c.eta_hat
            );
        }
    }
    s
}

/// One row per block; `e_n` is empty for a pair left unsettled.
pub fn lower_table(meta: &[(String, String)], run: &LowerRun) -> String {
    let mut s = start(meta, &LOWER_COLUMNS);
    for b in &run.blocks {
        let e = b.e.map_or(String::new(), |e| flag(e).to_string());
        let _ = writeln!(
            s,
            "{},{},{},{e},{},{}",
            b.n,
            flag(b.t_hat.is_some()),
            flag(b.t_tilde.is_some()),
            b.m_tilde,
            b.cum_e
        );
    }
    s
}

pub fn two_walk_table(meta: &[(String, String)], outcomes: &[CouplingOutcome]) -> String {
    let mut s = start(meta, &TWO_WALK_COLUMNS);
    for (r, o) in outcomes.iter().enumerate() {
        let _ = writeln!(
            s,
            "{r},{},{},{},{}",
            o.x0,
            flag(o.success),
            num(o.coupling_time),
            num(o.hit_time_origin)
        );
    }
    s
}

pub fn correlate_table(
    meta: &[(String, String)],
    mode: &str,
    k: usize,
    value: f64,
    error: f64,
) -> String {
    let mut s = start(meta, &CORRELATE_COLUMNS);
    let _ = writeln!(s, "{mode},{k},{},{}", num(value), num(error));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{
        reflection_couple, simulate_lower_coupling, simulate_upper_coupling, LowerOptions,
        UpperOptions,
    };
    use crate::heat::{solve_rho, HeatParams};
    use crate::kernel::JumpKernel;
    use crate::particles::{simulate_rwsbi, SimOptions};
    use crate::rng::RngStream;

    /// Header row and the number of fields in every data row.
    fn shape(csv: &str) -> (String, Vec<usize>) {
        let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
        let header = lines.next().unwrap().to_string();
        (header, lines.map(|l| l.split(',').count()).collect())
    }

    fn assert_schema(csv: &str, columns: &[&str]) {
        let (header, widths) = shape(csv);
        assert_eq!(header, columns.join(","));
        assert!(!widths.is_empty());
        assert!(widths.iter().all(|&w| w == columns.len()));
    }

    #[test]
    fn rho_table_schema_and_thinning() {
        let sol = solve_rho(&HeatParams::standard(), 50.0, None, 1e-8).unwrap();
        let meta = vec![("gamma".to_string(), "1".to_string())];
        let csv = rho_table(&meta, &sol, 20).unwrap();
        assert!(csv.starts_with("# gamma = 1\n"));
        assert_schema(&csv, &RHO_COLUMNS);
        let rows = shape(&csv).1.len();
        assert!((10..=25).contains(&rows), "{rows}");
        let last = csv.lines().last().unwrap();
        assert!(last.starts_with("50,"));
        // asymptotic columns are blank for t <= e
        let early = csv.lines().nth(2).unwrap();
        assert!(early.ends_with(",,"), "{early}");
    }

    #[test]
    fn simulation_tables() {
        let opts = SimOptions::new(30.0).snapshots(&[10.0, 20.0]);
        let runs: Vec<_> = (0..3)
            .map(|i| simulate_rwsbi(1.0, &JumpKernel::ssrw(), &opts, RngStream::new(4, i)).unwrap())
            .collect();
        let csv = simulation_table(&[], &runs).unwrap();
        assert_schema(&csv, &SIMULATE_COLUMNS);
        assert_eq!(shape(&csv).1.len(), 9);
        assert_schema(&profile_table(&[], &runs), &PROFILE_COLUMNS);
    }

    #[test]
    fn coupling_tables() {
        let opts = UpperOptions::new(0.5, 1.0, JumpKernel::ssrw(), 20.0).snapshots(&[5.0]);
        let up = simulate_upper_coupling(&opts, RngStream::new(1, 0)).unwrap();
        assert_schema(&upper_table(&[], &[up]), &UPPER_COLUMNS);
        let low = LowerOptions::new(0.5, 1.0, JumpKernel::ssrw(), 30);
        let run = simulate_lower_coupling(&low, RngStream::new(1, 1)).unwrap();
        let csv = lower_table(&[], &run);
        assert_schema(&csv, &LOWER_COLUMNS);
        assert_eq!(shape(&csv).1.len(), 30);
        let o = reflection_couple(3, &JumpKernel::ssrw(), RngStream::new(1, 2)).unwrap();
        assert_schema(&two_walk_table(&[], &[o]), &TWO_WALK_COLUMNS);
        assert_schema(
            &correlate_table(&[], "exact", 2, 0.1, 0.0),
            &CORRELATE_COLUMNS,
        );
    }
}
