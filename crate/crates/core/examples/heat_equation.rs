//! Lattice heat equation with self-regulating source at the origin.
use rwsbi::heat::{asymptotic_r, asymptotic_rho0};
use rwsbi::{solve_rho, HeatParams};

fn main() {
    let params = HeatParams::standard();
    let sol = solve_rho(&params, 1e4, None, 1e-8).unwrap();
    println!(
        "steps: {}, radius: {}, {}",
        sol.times().len(),
        sol.radius(),
        sol.dt_policy()
    );
    println!("max mass discrepancy: {:.2e}", sol.max_mass_discrepancy());
    println!(
        "{:>8} {:>10} {:>10} {:>10} {:>10}",
        "t", "rho_0", "asym", "R", "asym R"
    );
    for t in [10.0, 100.0, 1e3, 1e4] {
        println!(
            "{t:>8} {:>10.5} {:>10.5} {:>10.3} {:>10.3}",
            sol.rho0_at(t),
            asymptotic_rho0(t, &params).unwrap(),
            sol.mass_integral_at(t),
            asymptotic_r(t, &params).unwrap()
        );
    }
}
