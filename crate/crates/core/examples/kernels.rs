//! Jump kernels and continuous-time transition probabilities.
use rwsbi::transition::fourier_transition;
use rwsbi::{transition_probability, JumpKernel, OriginReturn};

fn main() {
    let wide = JumpKernel::parse("-2 0.25\n-1 0.25\n1 0.25\n2 0.25\n").unwrap();
    for (name, k) in [("ssrw", JumpKernel::ssrw()), ("wide", wide)] {
        println!(
            "{name}: sigma^2 = {}, max jump = {}",
            k.sigma2(),
            k.max_jump()
        );
        let table = transition_probability(&k, 5.0, 1e-12);
        println!(
            "  p_5(0) = {:.12}  (Fourier: {:.12})",
            table.get(0),
            fourier_transition(&k, 0, 5.0)
        );
        println!(
            "  mass on [{}, {}] = {:.15}",
            table.min_x(),
            table.max_x(),
            table.total_mass()
        );
        let origin = OriginReturn::new(&k);
        for t in [1.0, 100.0, 1e4] {
            println!("  p_t(0) at t = {t:>6}: {:.6e}", origin.p0(t));
        }
    }
    // asymmetric and drifting kernels are rejected
    println!("{:?}", JumpKernel::new(&[(1, 0.7), (-1, 0.3)]).unwrap_err());
}
