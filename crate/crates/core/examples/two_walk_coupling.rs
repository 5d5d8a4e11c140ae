//! Mirror coupling of two walks, event by event and as success probabilities.
use rwsbi::couplings::{coupling_success_prob, reflection_couple_with, CoupleOptions};
use rwsbi::{JumpKernel, RngStream};

fn main() {
    let opts = CoupleOptions {
        record_paths: true,
        ..Default::default()
    };
    let o = reflection_couple_with(5, &JumpKernel::ssrw(), RngStream::new(2, 0), &opts).unwrap();
    let path = o.paths.unwrap();
    println!(
        "ssrw from 5: met = {} at t = {:.2} after {} moves",
        o.success,
        o.coupling_time,
        path.len()
    );
    for p in path.iter().take(6) {
        println!("  t = {:.3}: X = {}, Y = {}", p.t, p.x, p.y);
    }
    let wide = JumpKernel::new(&[(-2, 0.25), (-1, 0.25), (1, 0.25), (2, 0.25)]).unwrap();
    for x0 in [1, 4, 16, 64] {
        let e = coupling_success_prob(x0, &wide, 10_000, RngStream::new(2, 1)).unwrap();
        println!(
            "jumps +-1, +-2 from {x0:>2}: p = {:.4} +- {:.4}, increments uncorrelated: {}",
            e.p,
            e.std_error,
            e.increments_uncorrelated()
        );
    }
}
