//! Rescaled heat profile rho_{sigma sqrt(t) y}(t) / log t against 1 - Phi(|y|).
use rwsbi::heat::{rescaled_profile, solve_rho_with, tilde_rho, tilde_rho_integral};
use rwsbi::{HeatParams, SolveOptions};

fn main() {
    for y in [0.0, 0.5, 1.0, 2.0] {
        println!(
            "y = {y}: 1 - Phi = {:.12}, integral form = {:.12}",
            tilde_rho(y),
            tilde_rho_integral(y)
        );
    }
    let times = [1e2, 1e3, 1e4];
    let opts = SolveOptions::new(1e4, 1e-8).profile_times(&times);
    let sol = solve_rho_with(&HeatParams::standard(), &opts).unwrap();
    let ys: Vec<f64> = (0..=6).map(|i| i as f64 * 0.5).collect();
    for t in times {
        let sample = rescaled_profile(&sol, t, &ys).unwrap();
        let row: Vec<String> = sample
            .points
            .iter()
            .map(|(_, v)| format!("{v:.3}"))
            .collect();
        println!(
            "t = {t:>6}: {}  sup distance {:.4}",
            row.join(" "),
            sample.sup_distance
        );
    }
}
