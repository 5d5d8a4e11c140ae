//! Independent walkers with immigration rate (1 +- eps) gamma exp(-rho_0(t)),
//! simulated by thinning against a dyadic envelope.
use std::sync::Arc;

use rwsbi::particles::{
    run_replicas, simulate_poisson_system, ImmigrationSchedule, Rho0Source, Sign, SimOptions,
};
use rwsbi::{solve_rho, HeatParams, JumpKernel, RngStream};

fn main() {
    let t = 200.0;
    let sol = Arc::new(solve_rho(&HeatParams::standard(), t, None, 1e-8).unwrap());
    let mass = sol.mass_integral_at(t);
    for sign in [Sign::Plus, Sign::Minus] {
        let sched =
            ImmigrationSchedule::tuned(sign, 0.3, 1.0, Rho0Source::Solution(sol.clone())).unwrap();
        let counts = run_replicas(2000, RngStream::new(3, 0), |s| {
            simulate_poisson_system(&sched, &JumpKernel::ssrw(), &SimOptions::new(t), s)
                .unwrap()
                .final_state
                .count_total() as f64
        });
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        let var =
            counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (counts.len() - 1) as f64;
        println!(
            "{sign:?}: mean {mean:.2} vs {:.2}, variance/mean {:.3}",
            sign.factor(0.3) * mass,
            var / mean
        );
    }
}
