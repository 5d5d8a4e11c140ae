//! The origin value solves an integral equation: residual of the ODE
//! solution and an independent Volterra solve.
use rwsbi::duhamel::{compare_steppers, duhamel_residual, solve_volterra};
use rwsbi::heat::solve_rho_with;
use rwsbi::{HeatParams, SolveOptions};

fn main() {
    let params = HeatParams::standard();
    let times = [1.0, 10.0, 100.0];
    let sol = solve_rho_with(
        &params,
        &SolveOptions::new(100.0, 1e-8).profile_times(&times),
    )
    .unwrap();
    for t in times {
        println!(
            "t = {t:>5}: residual {:.2e}",
            duhamel_residual(&sol, &[t]).unwrap()
        );
    }
    let volterra = solve_volterra(&params, 100.0, 0.02).unwrap();
    println!(
        "max |RK4 - Volterra| on [0, 100]: {:.2e}",
        compare_steppers(&sol, &volterra)
    );
}
