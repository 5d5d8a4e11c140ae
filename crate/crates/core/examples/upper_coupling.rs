//! Raised Poisson system plus top-up particles dominate the self-blocking system.
use rwsbi::couplings::{simulate_upper_coupling, UpperOptions};
use rwsbi::{JumpKernel, RngStream};

fn main() {
    let opts = UpperOptions::new(0.5, 1.0, JumpKernel::ssrw(), 500.0).snapshots(&[100.0, 250.0]);
    let run = simulate_upper_coupling(&opts, RngStream::new(5, 0)).unwrap();
    for c in run.snapshots.iter().chain([&run.final_counts]) {
        println!(
            "t = {:>5}: eta {:>3} <= tilde {:>3} + hat {:>3}",
            c.t, c.eta, c.eta_tilde, c.eta_hat
        );
    }
    println!(
        "{} attempts, {} top-ups, raised origin vacant {:.1}, {} site checks",
        run.attempts, run.hat_additions, run.tilde_vacant_time, run.checks
    );
}
