//! Runs a verification suite programmatically (the `verify` command does the same).
use rwsbi::experiments::{all_pass, execute_suite, ExperimentConfig};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "smoke".into());
    let mut cfg = ExperimentConfig::for_suite(&name);
    cfg.seed = 3;
    let records = execute_suite(&cfg).unwrap();
    for r in &records {
        let agg = r
            .aggregate
            .map(|a| format!(" (n = {}, mean {:.4e})", a.n, a.mean))
            .unwrap_or_default();
        println!(
            "{} {}: {:.4e}{agg}",
            if r.pass { "PASS" } else { "FAIL" },
            r.check,
            r.statistic
        );
    }
    println!("all passed: {}", all_pass(&records));
}
