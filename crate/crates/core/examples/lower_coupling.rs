//! Lower-bound block scheme: marked particles merged into a lowered Poisson system.
use rwsbi::couplings::{build_time_grid, simulate_lower_coupling, LowerOptions};
use rwsbi::{JumpKernel, RngStream};

fn main() {
    let grid = build_time_grid(0.5, 500).unwrap();
    println!(
        "grid: horizon {:.0}, repaired up to block {}",
        grid.horizon(),
        grid.last_repaired()
    );
    let opts = LowerOptions::new(0.5, 1.0, JumpKernel::ssrw(), 500);
    let run = simulate_lower_coupling(&opts, RngStream::new(9, 0)).unwrap();
    for b in run.blocks.iter().step_by(100).chain(run.blocks.last()) {
        println!(
            "block {:>3}: marked {}, partner {}, merged {:?}, sum eta {:>4} >= merges {:>2}",
            b.n,
            b.t_hat.is_some(),
            b.t_tilde.is_some(),
            b.e,
            b.eta_total,
            b.cum_e
        );
    }
    println!("{} events, {} unsettled pairs", run.events, run.unresolved);
}
