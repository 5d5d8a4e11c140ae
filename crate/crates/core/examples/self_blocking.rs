//! Self-blocking immigration: counts, vacancy of the origin, the event log
//! and the profile estimator.
use rwsbi::particles::{profile_estimator, run_replicas, simulate_rwsbi, SimOptions};
use rwsbi::{solve_rho, HeatParams, JumpKernel, RngStream};

fn main() {
    let t = 1000.0;
    let kernel = JumpKernel::ssrw();
    let opts = SimOptions::new(t).snapshots(&[100.0]);
    let runs = run_replicas(20, RngStream::new(7, 0), |s| {
        simulate_rwsbi(1.0, &kernel, &opts, s).unwrap()
    });
    let mass = solve_rho(&HeatParams::standard(), t, None, 1e-8)
        .unwrap()
        .mass_integral_at(t);
    let mean = runs
        .iter()
        .map(|r| r.final_state.count_total() as f64)
        .sum::<f64>()
        / 20.0;
    println!("mean count at T = {t}: {mean:.1} (heat-equation mass {mass:.1})");
    let r = &runs[0];
    println!(
        "replica 0: {} attempts, {} blocked, origin vacant {:.1} of {t}",
        r.counts.attempts,
        r.counts.blocked,
        r.vacancy.vacant_time(0.0, t).unwrap()
    );
    let est =
        profile_estimator(&r.final_state, |y| f64::from(u8::from(y.abs() <= 1.0)), 1.0).unwrap();
    println!("profile estimator with 1{{|y| <= 1}}: {est:.3}");

    let logged = simulate_rwsbi(
        1.0,
        &kernel,
        &SimOptions::new(50.0).with_log(),
        RngStream::new(7, 99),
    )
    .unwrap();
    let log = logged.log.unwrap();
    println!(
        "log of a short run: {} events, replay matches: {}",
        log.events.len(),
        log.replay_positions() == logged.final_state.positions
    );
}
