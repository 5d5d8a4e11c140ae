//! Integral form of the heat equation at the origin,
//!
//! ```text
//! rho_0(t) = gamma int_0^t p_0(t - s) exp(-alpha rho_0(s)) ds,
//! ```
//!
//! used two ways: as a residual check on a time-stepped [`RhoSolution`], and
//! as an independent solver (implicit Volterra time-marching) for `rho_0`.

use crate::heat::{HeatError, HeatParams, RhoSolution};
use crate::quad::GaussRule;
use crate::transition::OriginReturn;

const NODES_PER_STEP: usize = 8;

/// Largest `|rho_0(t) - gamma int_0^t p_0(t-s) e^{-alpha rho_0(s)} ds|` over
/// `sample_times`, which must be grid times of `sol`.
///
/// The integral is computed per solver step with an 8-point Gauss rule,
/// using the Hermite interpolant of `rho_0` between steps.
pub fn duhamel_residual(sol: &RhoSolution, sample_times: &[f64]) -> Result<f64, HeatError> {
    let p = sol.params();
    let origin = OriginReturn::new(&p.kernel);
    let mut worst: f64 = 0.0;
    for &t in sample_times {
        let i = sol.grid_index(t).ok_or(HeatError::NotInGrid(t))?;
        let grid = &sol.times()[..=i];
        let r = residual_at(
            p.gamma,
            p.alpha,
            &origin,
            |s| sol.rho0_at(s),
            grid,
            sol.rho0_values()[i],
        );
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Residual of an arbitrary trajectory `rho0` at time `grid.last()`, using
/// `grid` as quadrature panels. `value` is the claimed `rho_0` there.
pub fn residual_at<F: Fn(f64) -> f64>(
    gamma: f64,
    alpha: f64,
    origin: &OriginReturn,
    rho0: F,
    grid: &[f64],
    value: f64,
) -> f64 {
    let Some(&t) = grid.last() else {
        return value.abs();
    };
    let rule = GaussRule::new(NODES_PER_STEP);
    let mut integral = 0.0;
    for w in grid.windows(2) {
        integral += rule.integrate(w[0], w[1], |s| origin.p0(t - s) * (-alpha * rho0(s)).exp());
    }
    (value - gamma * integral).abs()
}

/// `rho_0` on the uniform grid `t_n = n h` from the integral equation alone.
#[derive(Debug, Clone)]
pub struct VolterraSolution {
    pub step: f64,
    pub rho0: Vec<f64>,
}

impl VolterraSolution {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.rho0.len()).map(move |n| n as f64 * self.step)
    }
}

/// Quadrature weights (in units of `h`) for `int_0^{n h}` on `n + 1` equally
/// spaced points: fourth-order Gregory for `n >= 6`, Newton-Cotes mixes below.
fn gregory_weights(n: usize) -> Vec<f64> {
    match n {
        0 => vec![0.0],
        1 => vec![0.5, 0.5],
        2 => vec![1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0],
        3 => vec![3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0],
        4 => vec![1.0 / 3.0, 4.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0],
        5 => vec![
            1.0 / 3.0,
            4.0 / 3.0,
            1.0 / 3.0 + 3.0 / 8.0,
            9.0 / 8.0,
            9.0 / 8.0,
            3.0 / 8.0,
        ],
        _ => {
            let mut w = vec![1.0; n + 1];
            let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
            for (k, &e) in ends.iter().enumerate() {
                w[k] = e;
                w[n - k] = e;
            }
            w
        }
    }
}

/// Solves the integral equation on `[0, t_max]` with step `h` by implicit
/// time marching. Each step is a scalar Newton solve; cost is
/// quadratic in the number of steps.
pub fn solve_volterra(
    params: &HeatParams,
    t_max: f64,
    h: f64,
) -> Result<VolterraSolution, HeatError> {
    if !(h > 0.0 && t_max >= 0.0) {
        return Err(HeatError::InvalidParams(format!(
            "need h > 0 and t_max >= 0, got h = {h}"
        )));
    }
    let steps = (t_max / h).round() as usize;
    let origin = OriginReturn::new(&params.kernel);
    let kernel_vals: Vec<f64> = (0..=steps).map(|k| origin.p0(k as f64 * h)).collect();
    Ok(march(params.gamma, params.alpha, &kernel_vals, h))
}

fn march(gamma: f64, alpha: f64, p0: &[f64], h: f64) -> VolterraSolution {
    let steps = p0.len() - 1;
    let mut rho = vec![0.0; steps + 1];
    let mut src = vec![gamma; steps + 1];
    for n in 1..=steps {
        let w = gregory_weights(n);
        let mut known = 0.0;
        for j in 0..n {
            known += w[j] * p0[n - j] * src[j];
        }
        let a = h * known;
        let b = gamma * h * w[n] * p0[0];
        // x = a + b e^{-alpha x}
        let mut x = rho[n - 1];
        for _ in 0..50 {
            let e = (-alpha * x).exp();
            let g = x - a - b * e;
            let dx = g / (1.0 + alpha * b * e);
            x -= dx;
            if dx.abs() < 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        rho[n] = x;
        src[n] = gamma * (-alpha * x).exp();
    }
    VolterraSolution { step: h, rho0: rho }
}

/// Max `|rho_0^{RK}(t) - rho_0^{Volterra}(t)|` over the Volterra grid.
pub fn compare_steppers(sol: &RhoSolution, volterra: &VolterraSolution) -> f64 {
    volterra
        .times()
        .zip(&volterra.rho0)
        .filter(|(t, _)| *t <= sol.t_max() * (1.0 + 1e-12))
        .map(|(t, &v)| (sol.rho0_at(t) - v).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::{solve_rho, solve_rho_with, SolveOptions};
    use crate::kernel::JumpKernel;

    #[test]
    fn gregory_weights_integrate_cubics_exactly() {
        for n in 1..12 {
            let w = gregory_weights(n);
            let h = 0.3;
            let exact_deg = if n == 1 { 1 } else { 3 };
            for deg in 0..=exact_deg {
                let approx: f64 = w
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * h * (j as f64 * h).powi(deg))
                    .sum();
                let exact = (n as f64 * h).powi(deg + 1) / (deg + 1) as f64;
                assert!((approx - exact).abs() < 1e-12, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn zero_trajectory_without_immigration_has_zero_residual() {
        let origin = OriginReturn::new(&JumpKernel::ssrw());
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        assert_eq!(residual_at(0.0, 1.0, &origin, |_| 0.0, &grid, 0.0), 0.0);
    }

    #[test]
    fn converged_solution_satisfies_integral_form() {
        let sol = solve_rho(&HeatParams::standard(), 100.0, None, 1e-8).unwrap();
        let times: Vec<f64> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&t| {
                let i = sol.times().partition_point(|&s| s < t);
                sol.times()[i]
            })
            .collect();
        let r = duhamel_residual(&sol, &times).unwrap();
        assert!(r < 1e-5, "residual {r}");
    }

    #[test]
    fn coarse_solution_has_larger_residual() {
        let p = HeatParams::standard();
        let fine = solve_rho_with(&p, &SolveOptions::new(10.0, 1e-9)).unwrap();
        let coarse = solve_rho_with(&p, &SolveOptions::new(10.0, 1e-2).h_max(2.0)).unwrap();
        let rf = duhamel_residual(&fine, &[10.0]).unwrap();
        let rc = duhamel_residual(&coarse, &[10.0]).unwrap();
        assert!(rc > rf, "coarse {rc} fine {rf}");
    }

    #[test]
    fn off_grid_time_is_rejected() {
        let sol = solve_rho(&HeatParams::standard(), 5.0, None, 1e-8).unwrap();
        assert!(matches!(
            duhamel_residual(&sol, &[std::f64::consts::PI]),
            Err(HeatError::NotInGrid(_))
        ));
    }

    #[test]
    fn volterra_agrees_with_time_stepping() {
        let p = HeatParams::standard();
        let sol = solve_rho(&p, 50.0, None, 1e-10).unwrap();
        let v = solve_volterra(&p, 50.0, 0.02).unwrap();
        let d = compare_steppers(&sol, &v);
        assert!(d < 1e-5, "max difference {d}");
    }
}
