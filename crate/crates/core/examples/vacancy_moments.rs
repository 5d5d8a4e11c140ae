//! Vacant time of the origin for the lowered Poisson system.
use std::sync::Arc;

use rwsbi::particles::{vacancy_moment_experiment, MomentExperiment};
use rwsbi::{solve_rho, HeatParams, JumpKernel, RngStream};

fn main() {
    let sol = Arc::new(solve_rho(&HeatParams::standard(), 400.0, None, 1e-8).unwrap());
    for t in [100.0, 400.0] {
        let exp = MomentExperiment {
            epsilon: 0.5,
            gamma: 1.0,
            kernel: JumpKernel::ssrw(),
            s: t / 2.0,
            t,
            k: 2,
            replicas: 1000,
            stream: RngStream::new(11, 0),
        };
        let r = vacancy_moment_experiment(&exp, sol.clone()).unwrap();
        println!(
            "[{}, {t}]: vacant {:.1} +- {:.1}, bound {:.1}, var/mean^2 {:.4}",
            r.s, r.mean, r.std_error, r.lower_bound, r.ratio
        );
    }
}
