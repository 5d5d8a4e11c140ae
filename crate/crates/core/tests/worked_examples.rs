//! Worked examples with fixed inputs and stated outcomes. Brackets are taken
//! as given; where the computation lands outside one, the test fails.

use std::sync::Arc;

use rwsbi::barrier::{scan_sub_supersolution, Side};
use rwsbi::couplings::{
    build_time_grid, coupling_success_prob, simulate_upper_coupling, UpperOptions,
};
use rwsbi::heat::{asymptotic_r, asymptotic_rho0, rescaled_profile, solve_rho_with, tilde_rho};
use rwsbi::particles::{
    profile_estimator, run_replicas, simulate_poisson_system, simulate_rwsbi, ImmigrationSchedule,
    Rho0Source, Sign, SimOptions,
};
use rwsbi::{solve_rho, HeatParams, JumpKernel, RhoSolution, RngStream, SolveOptions};

fn solution(t_max: f64) -> RhoSolution {
    solve_rho(&HeatParams::standard(), t_max, None, 1e-8).unwrap()
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn rho0_at_1e4_is_near_its_asymptotics() {
    let sol = solution(1e4);
    let a = asymptotic_rho0(1e4, sol.params()).unwrap();
    let rel = (sol.rho0_at(1e4) - a).abs() / a;
    assert!(rel <= 0.10, "rho0 {} vs {a}", sol.rho0_at(1e4));
}

#[test]
fn total_mass_at_1e4_over_its_normalizer() {
    let sol = solution(1e4);
    let ratio = sol.total_mass(1e4).unwrap().integral / asymptotic_r(1e4, sol.params()).unwrap();
    assert!((0.7..=1.3).contains(&ratio), "ratio {ratio}");
}

#[test]
fn block_count_ratio_at_the_largest_grid_time() {
    let grid = build_time_grid(0.5, 10_000).unwrap();
    let ratio = grid.count_ratio(grid.horizon());
    assert!((ratio - 1.0).abs() <= 0.2, "ratio {ratio}");
}

#[test]
fn profile_is_symmetric_in_y() {
    let sol = solve_rho_with(
        &HeatParams::standard(),
        &SolveOptions::new(400.0, 1e-8).profile_times(&[400.0]),
    )
    .unwrap();
    let ys = [-2.5, -1.0, -0.3, 0.3, 1.0, 2.5];
    let p = rescaled_profile(&sol, 400.0, &ys).unwrap();
    for (lo, hi) in p.points.iter().zip(p.points.iter().rev()) {
        assert!(
            (lo.1 - hi.1).abs() <= 1e-12,
            "y = {}: {} vs {}",
            lo.0,
            lo.1,
            hi.1
        );
    }
}

#[test]
fn comparison_functions_on_either_side_of_the_threshold() {
    let params = HeatParams::standard();
    let sub = scan_sub_supersolution(&params, 0.0, Side::Sub, 1e5, 30).unwrap();
    assert!(
        sub.holds_beyond_k(),
        "C = 0 fails from K = {}",
        sub.comparison.k
    );
    let sup = scan_sub_supersolution(&params, 2.0, Side::Super, 1e5, 30).unwrap();
    assert!(
        sup.holds_beyond_k(),
        "C = 2 fails from K = {}",
        sup.comparison.k
    );
}

#[test]
fn poisson_system_origin_mean_is_scaled_rho0() {
    let sol = Arc::new(solution(100.0));
    let eps = 0.5;
    for (i, sign) in [Sign::Plus, Sign::Minus].into_iter().enumerate() {
        let sched =
            ImmigrationSchedule::tuned(sign, eps, 1.0, Rho0Source::Solution(sol.clone())).unwrap();
        for (j, t) in [10.0, 100.0].into_iter().enumerate() {
            let stream = RngStream::new(31, ((2 * i + j) as u64) << 32);
            let counts = run_replicas(10_000, stream, |s| {
                let run =
                    simulate_poisson_system(&sched, &JumpKernel::ssrw(), &SimOptions::new(t), s)
                        .unwrap();
                f64::from(run.final_state.count_at(0))
            });
            let (mean, se) = mean_and_se(&counts);
            let target = sign.factor(eps) * sol.rho0_at(t);
            assert!(
                (mean - target).abs() <= 4.0 * se,
                "{sign:?} t = {t}: {mean} vs {target} (se {se})"
            );
        }
    }
}

#[test]
fn zero_epsilon_makes_both_signs_identical() {
    let src = Rho0Source::Solution(Arc::new(solution(50.0)));
    let plus = ImmigrationSchedule::tuned(Sign::Plus, 0.0, 1.0, src.clone()).unwrap();
    let minus = ImmigrationSchedule::tuned(Sign::Minus, 0.0, 1.0, src).unwrap();
    for i in 0..20 {
        let s = RngStream::new(12, i);
        let opts = SimOptions::new(50.0);
        let a = simulate_poisson_system(&plus, &JumpKernel::ssrw(), &opts, s).unwrap();
        let b = simulate_poisson_system(&minus, &JumpKernel::ssrw(), &opts, s).unwrap();
        assert_eq!(a.final_state.positions, b.final_state.positions);
    }
}

#[test]
fn top_ups_follow_the_raised_vacancy() {
    let t = 100.0;
    let opts = UpperOptions::new(0.5, 1.0, JumpKernel::ssrw(), t);
    let diffs = run_replicas(1000, RngStream::new(41, 0), |s| {
        let run = simulate_upper_coupling(&opts, s).unwrap();
        run.hat_additions as f64 - run.tilde_vacant_time
    });
    let (mean, se) = mean_and_se(&diffs);
    assert!(
        mean.abs() <= 4.0 * se,
        "additions - gamma V = {mean} (se {se})"
    );
}

#[test]
fn success_frequency_climbs_with_distance() {
    let wide = JumpKernel::new(&[(-2, 0.25), (-1, 0.25), (1, 0.25), (2, 0.25)]).unwrap();
    let p: Vec<f64> = [4, 16, 64, 256]
        .into_iter()
        .enumerate()
        .map(|(i, x0)| {
            coupling_success_prob(x0, &wide, 10_000, RngStream::new(51, i as u64))
                .unwrap()
                .p
        })
        .collect();
    assert!(p.windows(2).all(|w| w[1] > w[0]), "{p:?}");
    assert!(p.iter().all(|&v| v > 0.0 && v <= 1.0));
}

#[test]
fn bump_profile_estimate_at_1e4() {
    // smoothed indicator of |y| <= 1/2
    let bump = |y: f64| (1.0 - 4.0 * y * y).max(0.0).powi(2);
    // integral of bump * limiting profile, Simpson on [-1/2, 1/2]
    let n = 2000;
    let h = 1.0 / n as f64;
    let target: f64 = (0..=n)
        .map(|i| {
            let y = -0.5 + i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * bump(y) * tilde_rho(y)
        })
        .sum::<f64>()
        * h
        / 3.0;
    let t = 1e4;
    let est = run_replicas(50, RngStream::new(61, 0), |s| {
        let run = simulate_rwsbi(1.0, &JumpKernel::ssrw(), &SimOptions::new(t), s).unwrap();
        profile_estimator(&run.final_state, bump, 1.0).unwrap()
    });
    let (mean, _) = mean_and_se(&est);
    let ratio = mean / target;
    assert!((0.6..=1.4).contains(&ratio), "ratio {ratio}");
}
