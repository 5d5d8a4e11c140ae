//! The named suites. Each is a list of checks with pinned defaults; the
//! config can change the kernel, rates, horizons, replica counts and seed.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use super::output::{write_results, write_summary, write_values};
use super::stats::{aggregate_replicas, chi_square_poisson, ks_two_sample};
use super::{format_number, ExperimentConfig, ExperimentError, ModuleError, ResultRecord};
use crate::barrier::{scan_sub_supersolution, Side};
use crate::correlations::{
    correlation_exact, correlation_montecarlo, correlation_series, VacancySpec,
};
use crate::couplings::{
    build_time_grid, coupling_success_prob, simulate_lower_coupling, simulate_upper_coupling,
    CouplingError, LowerOptions, UpperOptions,
};
use crate::duhamel::{compare_steppers, duhamel_residual, solve_volterra};
use crate::heat::{
    asymptotic_r, asymptotic_rho0, rescaled_profile, solve_rho, solve_rho_with, tilde_rho,
    tilde_rho_integral, HeatParams, RhoSolution, SolveOptions,
};
use crate::kernel::JumpKernel;
use crate::particles::{
    profile_estimator, run_replicas, simulate_poisson_system, simulate_rwsbi,
    vacancy_moment_experiment, EventKind, EventLog, ImmigrationSchedule, MomentExperiment,
    Rho0Source, Sign, SimOptions,
};
use crate::quad::adaptive;
use crate::rng::RngStream;

type SuiteFn = fn(&mut Ctx) -> Result<(), ModuleError>;

/// Suite names with a one-line description, in acceptance order.
pub const SUITES: &[(&str, &str)] = &[
    ("smoke", "a few seconds of every module at tiny sizes"),
    (
        "heat-identities",
        "mass identity, integral-form residual and stepper agreement",
    ),
    (
        "profile",
        "integral form of the limiting profile; rescaled solver profile trend",
    ),
    (
        "asymptotics",
        "rho_0 and R against their leading-order formulas",
    ),
    (
        "comparison",
        "sub- and supersolutions of the origin equation",
    ),
    (
        "blocking",
        "no immigration into an occupied origin; attempts are Poisson",
    ),
    (
        "total-count",
        "mean total count against the heat-equation mass",
    ),
    (
        "profile-shape",
        "profile estimator against the limiting profile",
    ),
    (
        "poisson-counts",
        "tuned Poisson systems: mean and dispersion",
    ),
    ("vacancy", "vacant time of the lowered Poisson system"),
    ("upper-coupling", "domination and the eta marginal"),
    (
        "lower-coupling",
        "two-walk success and the lower-bound block scheme",
    ),
    (
        "correlations",
        "series, remainder bound and Monte Carlo vs exact",
    ),
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.0).collect()
}

fn lookup(name: &str) -> Option<SuiteFn> {
    Some(match name {
        "smoke" => smoke,
        "heat-identities" => heat_identities,
        "profile" => profile,
        "asymptotics" => asymptotics,
        "comparison" => comparison,
        "blocking" => blocking,
        "total-count" => total_count,
        "profile-shape" => profile_shape,
        "poisson-counts" => poisson_counts,
        "vacancy" => vacancy,
        "upper-coupling" => upper_coupling,
        "lower-coupling" => lower_coupling,
        "correlations" => correlations,
        _ => return None,
    })
}

/// Runs the configured suite without writing anything.
pub fn execute_suite(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>, ExperimentError> {
    let f = lookup(&cfg.suite).ok_or_else(|| ExperimentError::UnknownSuite {
        name: cfg.suite.clone(),
        available: suite_names(),
    })?;
    let kernel = cfg.validate()?;
    let mut ctx = Ctx {
        cfg,
        kernel,
        records: Vec::new(),
        lap: Instant::now(),
    };
    f(&mut ctx).map_err(|source| ExperimentError::Suite {
        suite: cfg.suite.clone(),
        source,
    })?;
    Ok(ctx.records)
}

/// Runs the configured suite and writes `<suite>.csv`, `<suite>_values.csv`
/// and `<suite>_summary.txt` into [`ExperimentConfig::output_dir`].
pub fn run_suite(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>, ExperimentError> {
    let records = execute_suite(cfg)?;
    let dir = cfg.output_dir();
    let name = &cfg.suite;
    write_results(&dir.join(format!("{name}.csv")), cfg, &records)?;
    write_values(&dir.join(format!("{name}_values.csv")), cfg, &records)?;
    write_summary(&dir.join(format!("{name}_summary.txt")), cfg, &records)?;
    Ok(records)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    kernel: JumpKernel,
    records: Vec<ResultRecord>,
    lap: Instant,
}

impl Ctx<'_> {
    /// Base stream `k` of the suite. Replica streams of different bases
    /// never overlap for fewer than 2^24 replicas.
    fn stream(&self, k: u64) -> RngStream {
        RngStream::new(self.cfg.seed, k << 44)
    }

    fn replicas(&self, default: usize) -> usize {
        self.cfg.replicas.unwrap_or(default)
    }

    fn tol(&self, name: &str) -> f64 {
        self.cfg.tolerance(name)
    }

    fn gamma(&self) -> f64 {
        self.cfg.gamma
    }

    /// Heat parameters of the particle systems (exponent 1 in the tuned rates).
    fn particle_params(&self) -> Result<HeatParams, ModuleError> {
        Ok(HeatParams::new(self.cfg.gamma, 1.0, self.kernel.clone())?)
    }

    fn check(
        &mut self,
        name: &str,
        parameters: Vec<(String, String)>,
        values: Vec<f64>,
        statistic: f64,
        lower: f64,
        upper: f64,
    ) -> Result<(), ModuleError> {
        let aggregate = if values.is_empty() {
            None
        } else {
            Some(aggregate_replicas(&values).map_err(|e| ModuleError::Stats(e.to_string()))?)
        };
        self.records.push(ResultRecord {
            suite: self.cfg.suite.clone(),
            check: name.into(),
            parameters,
            values,
            aggregate,
            statistic,
            lower,
            upper,
            pass: statistic >= lower && statistic <= upper,
            wall_clock: self.lap.elapsed().as_secs_f64(),
        });
        self.lap = Instant::now();
        Ok(())
    }
}

trait Field {
    fn field(&self) -> String;
}

impl Field for f64 {
    fn field(&self) -> String {
        format_number(*self)
    }
}

macro_rules! display_field {
    ($($t:ty),*) => {$(
        impl Field for $t {
            fn field(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
display_field!(i32, i64, usize, &str, String, &String);

fn p(key: &str, value: impl Field) -> (String, String) {
    (key.into(), value.field())
}

/// Largest step `v[i+1] - v[i]`; negative iff `v` is strictly decreasing.
fn largest_step(v: &[f64]) -> f64 {
    v.windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn collect<T, E: Into<ModuleError>>(runs: Vec<Result<T, E>>) -> Result<Vec<T>, ModuleError> {
    runs.into_iter().map(|r| r.map_err(Into::into)).collect()
}

/// Immigration events that contradict the origin occupancy in the log.
fn blocking_violations(log: &EventLog) -> u64 {
    let mut origin = 0u32;
    let mut bad = 0;
    for e in &log.events {
        match e.kind {
            EventKind::ImmigrationSuccess => {
                bad += u64::from(origin > 0);
                origin += 1;
            }
            EventKind::ImmigrationBlocked => bad += u64::from(origin == 0),
            EventKind::Jump { from, to, .. } => {
                if from == 0 {
                    origin -= 1;
                }
                if to == 0 {
                    origin += 1;
                }
            }
        }
    }
    bad
}

fn smoke(ctx: &mut Ctx) -> Result<(), ModuleError> {
    let params = HeatParams::new(ctx.cfg.gamma, ctx.cfg.alpha, ctx.kernel.clone())?;
    let t = 20.0;
    let sol = solve_rho_with(&params, &SolveOptions::new(t, 1e-8).profile_times(&[t]))?;
    let mass = sol.total_mass(t)?.discrepancy;
    let tol = ctx.tol("heat.mass_identity");
    ctx.check("mass_identity", vec![p("t", t)], vec![], mass, 0.0, tol)?;
    let residual = duhamel_residual(&sol, &[t])?;
    let tol = ctx.tol("heat.duhamel");
    ctx.check("integral_form", vec![p("t", t)], vec![], residual, 0.0, tol)?;

    let (gamma, kernel) = (ctx.gamma(), ctx.kernel.clone());
    let opts = SimOptions::new(t).with_log();
    let runs = collect(run_replicas(20, ctx.stream(1), |s| {
        simulate_rwsbi(gamma, &kernel, &opts, s)
    }))?;
    let bad: Vec<f64> = runs
        .iter()
        .map(|r| blocking_violations(r.log.as_ref().expect("log requested")) as f64)
        .collect();
    let total = bad.iter().sum();
    ctx.check("blocking", vec![p("T", t)], bad, total, 0.0, 0.0)?;

    let spec = VacancySpec::random(3, 0.1, &mut ctx.stream(2).rng());
    let err = (correlation_series(&spec, 60)?.0 - correlation_exact(&spec)?).abs();
    let tol = ctx.tol("correlations.series_abs");
    ctx.check("series_vs_exact", vec![p("k", 3)], vec![], err, 0.0, tol)?;

    let est = coupling_success_prob(3, &JumpKernel::ssrw(), 200, ctx.stream(3))?;
    ctx.check("ssrw_coupling", vec![p("x0", 3)], vec![], est.p, 1.0, 1.0)?;

    let grid = build_time_grid(0.5, 100)?;
    let ok = f64::from(u8::from(grid.is_strictly_increasing()));
    ctx.check("time_grid", vec![p("n_max", 100)], vec![], ok, 1.0, 1.0)
}

fn heat_identities(ctx: &mut Ctx) -> Result<(), ModuleError> {
    let params = HeatParams::new(ctx.cfg.gamma, ctx.cfg.alpha, ctx.kernel.clone())?;
    let t_max = ctx.cfg.t_max.unwrap_or(1e3);
    let mut times: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
        .into_iter()
        .filter(|&t| t <= t_max)
        .collect();
    if times.is_empty() {
        times.push(t_max);
    }
    let sol = solve_rho_with(
        &params,
        &SolveOptions::new(t_max, 1e-8).profile_times(&times),
    )?;
    let base = vec![p("t_max", t_max), p("solver_tol", 1e-8)];

    let mass = times
        .iter()
        .map(|&t| Ok(sol.total_mass(t)?.discrepancy))
        .collect::<Result<Vec<f64>, ModuleError>>()?;
    let worst = mass.iter().copied().fold(0.0, f64::max);
    let tol = ctx.tol("heat.mass_identity");
    ctx.check("mass_identity", base.clone(), mass, worst, 0.0, tol)?;

    let residuals = times
        .iter()
        .map(|&t| Ok(duhamel_residual(&sol, &[t])?))
        .collect::<Result<Vec<f64>, ModuleError>>()?;
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    let tol = ctx.tol("heat.duhamel");
    ctx.check("integral_form", base.clone(), residuals, worst, 0.0, tol)?;

    let h = 0.02;
    let volterra = solve_volterra(&params, t_max, h)?;
    let diff = compare_steppers(&sol, &volterra);
    let tol = ctx.tol("heat.steppers");
    let mut pars = base;
    pars.push(p("volterra_step", h));
    ctx.check("stepper_agreement", pars, vec![], diff, 0.0, tol)
}

fn profile(ctx: &mut Ctx) -> Result<(), ModuleError> {
    let ys = [0.0, 0.5, 1.0, 2.0, 3.0];
    let errs: Vec<f64> = ys
        .iter()
        .map(|&y| (tilde_rho_integral(y) - tilde_rho(y)).abs())
        .collect();
    let worst = errs.iter().copied().fold(0.0, f64::max);
    let tol = ctx.tol("profile.integral_form");
    ctx.check(
        "integral_form",
        vec![p("y", "0;0.5;1;2;3")],
        errs,
        worst,
        0.0,
        tol,
    )?;

    let params = HeatParams::new(ctx.cfg.gamma, ctx.cfg.alpha, ctx.kernel.clone())?;
    let times = [1e2, 1e3, 1e4];
    let sol = solve_rho_with(&params, &SolveOptions::new(1e4, 1e-8).profile_times(&times))?;
    let y_grid: Vec<f64> = (-60..=60).map(|i| i as f64 * 0.05).collect();
    let dists = times
        .iter()
        .map(|&t| Ok(rescaled_profile(&sol, t, &y_grid)?.sup_distance))
        .collect::<Result<Vec<f64>, ModuleError>>()?;
    let step = largest_step(&dists);
    let pars = vec![p("t", "1e2;1e3;1e4"), p("y_grid", "-3:0.05:3")];
    ctx.check(
        "sup_distance_decreasing",
        pars,
        dists,
        step,
        f64::NEG_INFINITY,
        0.0,
    )
}

fn asymptotics(ctx: &mut Ctx) -> Result<(), ModuleError> {
    let params = HeatParams::new(ctx.cfg.gamma, ctx.cfg.alpha, ctx.kernel.clone())?;
    let times = [1e3, 1e4, 1e5];
    let sol = solve_rho(&params, 1e5, None, 1e-8)?;
    let mut rho = Vec::new();
    let mut ratio = Vec::new();
    for &t in &times {
        rho.push((sol.rho0_at(t) - asymptotic_rho0(t, &params)?).abs());
        ratio.push((sol.mass_integral_at(t) / asymptotic_r(t, &params)? - 1.0).abs());
    }
    let pars = vec![p("t", "1e3;1e4;1e5"), p("solver_tol", 1e-8)];
    let step = largest_step(&rho);
    ctx.check(
        "rho0_error_decreasing",
        pars.clone(),
        rho,
        step,
        f64::NEG_INFINITY,
        0.0,
    )?;
    let step = largest_step(&ratio);
    ctx.check(
        "mass_ratio_decreasing",
        pars,
        ratio,
        step,
        f64::NEG_INFINITY,
        0.0,
    )
}

fn comparison(ctx: &mut Ctx) -> Result<(), ModuleError> {
    let params = HeatParams::new(ctx.cfg.gamma, 1.0, ctx.kernel.clone())?;
    let threshold = params.log_constant();
    let t_max = ctx.cfg.t_max.unwrap_or(1e5);
    for (name, side, c) in [
        ("subsolution", Side::Sub, threshold - 1.0),
        ("supersolution", Side::Super, threshold + 1.0),
    ] {
        let report = scan_sub_supersolution(&params, c, side, t_max, 40)?;
        let margins: Vec<f64> = report
            .points
            .iter()
            .map(|pt| match side {
                Side::Sub => pt.integral - pt.f,
                Side::Super => pt.f - pt.integral,
            })
            .collect();
        let pars = vec![
            p("C", c),
            p("K", report.comparison.k),
            p("plateau", report.comparison.plateau),
            p("t_max", t_max),
        ];
        let margin = report.min_margin();
        ctx.check(
            name,
            pars,
            margins,
            margin,
            f64::MIN_POSITIVE,
            f64::INFINITY,
        )?;
    }
    Ok(())
}

fn blocking(ctx: &mut Ctx) -> Result<(), ModuleError> {
    let t = ctx.cfg.t_max.unwrap_or(100.0);
    let reps = ctx.replicas(1000);
    let (gamma, kernel) = (ctx.gamma(), ctx.kernel.clone());
    let opts = SimOptions::new(t).with_log();
    let runs = collect(run_replicas(reps, ctx.stream(0), |s| {
        simulate_rwsbi(gamma, &kernel, &opts, s).map(|r| {
            let log = r.log.as_ref().expect("log requested");
            (blocking_violations(log), r.counts.attempts)
        })
    }))?;
    let bad: Vec<f64> = runs.iter().map(|r| r.0 as f64).collect();
    let total = bad.iter().sum();
    let pars = vec![p("T", t), p("gamma", gamma), p("replicas", reps)];
    ctx.check(
        "occupied_origin_immigration",
        pars.clone(),
        bad,
        total,
        0.0,
        0.0,
    )?;

    let attempts: Vec<u64> = runs.iter().map(|r| r.1).collect();
    let test =
        chi_square_poisson(&attempts, gamma * t).map_err(|e| ModuleError::Stats(e.to_string()))?;
    let mut pars = pars;
    pars.push(p("chi_square", test.statistic));
    pars.push(p("dof", test.dof));
    let level = ctx.tol("blocking.level");
    let values = attempts.iter().map(|&a| a as f64).collect();
    ctx.check(
        "attempts_poisson_p_value",
        pars,
        values,
        test.p_value,
        level,
        1.0,
    )
}

fn total_count(ctx: &mut Ctx) -> Result<(), ModuleError> {
    let t = ctx.cfg.t_max.unwrap_or(1e4);
    let early = t / 10.0;
    let reps = ctx.replicas(50);
    let params = ctx.particle_params()?;
    let sol = solve_rho(&params, t, None, 1e-8)?;
    let (mass, mass_early) = (sol.mass_integral_at(t), sol.mass_integral_at(early));
    let (gamma, kernel) = (ctx.gamma(), ctx.kernel.clone());
    let opts = SimOptions::new(t).snapshots(&[early]);
    let runs = collect(run_replicas(reps, ctx.stream(0), |s| {
        simulate_rwsbi(gamma, &kernel, &opts, s).map(|r| {
            (
                r.final_state.count_total() as f64,
                r.snapshots[0].count_total() as f64,
            )
        })
    }))?;
    let last: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let first: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let ratio = mean(&last) / mass;
    let ratio_early = mean(&first) / mass_early;
    let pars = vec![p("T", t), p("mass", mass), p("replicas", reps)];
    let (lo, hi) = (
        ctx.tol("total_count.ratio_low"),
        ctx.tol("total_count.ratio_high"),
    );
    ctx.check("mean_over_mass", pars, last, ratio, lo, hi)?;
    let gaps = vec![(ratio_early - 1.0).abs(), (ratio - 1.0).abs()];
    let pars = vec![
        p("T", format!("{early};{t}")),
        p("ratios", format!("{ratio_early};{ratio}")),
    ];
    let step = gaps[1] - gaps[0];
    ctx.check(
        "ratio_gap_shrinks",
        pars,
        gaps,
        step,
        f64::NEG_INFINITY,
        0.0,
    )
}

type TestFn = fn(f64) -> f64;

/// Test functions of the profile estimator; all even.
const PROFILE_FUNCTIONS: [(&str, TestFn); 3] = [
    ("flat", |_| 1.0),
    ("tent", |y| (1.0 - y.abs()).max(0.0)),
    ("weighted", |y| y * y * (-y * y / 2.0).exp()),
];

/// `sum_x rho_x(t) f(x / (sigma sqrt t)) / (sigma sqrt(t) log t)` from a
/// stored heat profile.
fn heat_profile_estimate(sol: &RhoSolution, t: f64, f: TestFn) -> f64 {
    let profile = sol.profile(t).expect("profile stored");
    let r = sol.radius() as i64;
    let scale = sol.params().sigma() * t.sqrt();
    let sum: f64 = profile
        .iter()
        .enumerate()
        .map(|(i, &v)| v * f((i as i64 - r) as f64 / scale))
        .sum();
    sum / (scale * t.ln())
}

fn profile_shape(ctx: &mut Ctx) -> Result<(), ModuleError> {
    let t = ctx.cfg.t_max.unwrap_or(1e4);
    let reps = ctx.replicas(50);
    let params = ctx.particle_params()?;
    let sigma = params.sigma();
    let sol = solve_rho_with(&params, &SolveOptions::new(t, 1e-8).profile_times(&[t]))?;
    let (gamma, kernel) = (ctx.gamma(), ctx.kernel.clone());
    let opts = SimOptions::new(t);
    let finals = collect(run_replicas(reps, ctx.stream(0), |s| {
        simulate_rwsbi(gamma, &kernel, &opts, s).map(|r| r.final_state)
    }))?;
    for (name, f) in PROFILE_FUNCTIONS {
        // even integrand with kinks at most at |y| = 1
        let g = |y: f64| f(y) * tilde_rho(y);
        let limit = 2.0 * (adaptive(g, 0.0, 1.0, 1e-13).0 + adaptive(g, 1.0, 12.0, 1e-13).0);
        let values = finals
            .iter()
            .map(|st| Ok(profile_estimator(st, f, sigma)?))
            .collect::<Result<Vec<f64>, ModuleError>>()?;
        let ratio = mean(&values) / limit;
        let pars = vec![
            p("T", t),
            p("limit", limit),
            p("heat_prediction", heat_profile_estimate(&sol, t, f) / limit),
            p("replicas", reps),
        ];
        let lo = ctx.tol(&format!("profile_shape.{name}_low"));
        let hi = ctx.tol(&format!("profile_shape.{name}_high"));
        ctx.check(&format!("{name}_over_limit"), pars, values, ratio, lo, hi)?;
    }
    Ok(())
}

fn poisson_counts(ctx: &mut Ctx) -> Result<(), ModuleError> {
    let t = ctx.cfg.t_max.unwrap_or(100.0);
    let reps = ctx.replicas(10_000);
    let eps = ctx.cfg.epsilon;
    let sol = Arc::new(solve_rho(&ctx.particle_params()?, t, None, 1e-8)?);
    let mass = sol.mass_integral_at(t);
    for (i, (name, sign)) in [("plus", Sign::Plus), ("minus", Sign::Minus)]
        .into_iter()
        .enumerate()
    {
        let schedule =
            ImmigrationSchedule::tuned(sign, eps, ctx.gamma(), Rho0Source::Solution(sol.clone()))?;
        let kernel = ctx.kernel.clone();
        let opts = SimOptions::new(t);
        let counts = collect(run_replicas(reps, ctx.stream(i as u64), |s| {
            simulate_poisson_system(&schedule, &kernel, &opts, s)
                .map(|r| r.final_state.count_total() as f64)
        }))?;
        let agg = aggregate_replicas(&counts).map_err(|e| ModuleError::Stats(e.to_string()))?;
        let target = sign.factor(eps) * mass;
        let se = agg.std_error.unwrap_or(f64::NAN);
        let var = agg.variance.unwrap_or(f64::NAN);
        let pars = vec![
            p("t", t),
            p("epsilon", eps),
            p("target", target),
            p("replicas", reps),
        ];
        let z = (agg.mean - target).abs() / se;
        let tol = ctx.tol("poisson.mean_se");
        ctx.check(&format!("{name}_mean_z"), pars.clone(), counts, z, 0.0, tol)?;
        let (lo, hi) = (
            ctx.tol("poisson.dispersion_low"),
            ctx.tol("poisson.dispersion_high"),
        );
        ctx.check(
            &format!("{name}_dispersion"),
            pars,
            vec![],
            var / agg.mean,
            lo,
            hi,
        )?;
    }
    Ok(())
}

/// `n^{-1} sum (v - mean)^k / mean^k`.
fn centered_ratio(values: &[f64], k: i32) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(k)).sum::<f64>() / values.len() as f64 / m.powi(k)
}

fn vacancy(ctx: &mut Ctx) -> Result<(), ModuleError> {
    let eps = ctx.cfg.epsilon;
    let t_last = ctx.cfg.t_max.unwrap_or(400.0);
    let t_first = t_last / 4.0;
    let reps = ctx.replicas(2000);
    let sol = Arc::new(solve_rho(&ctx.particle_params()?, t_last, None, 1e-8)?);
    let mut results = Vec::new();
    for (i, t) in [t_first, t_last].into_iter().enumerate() {
        let exp = MomentExperiment {
            epsilon: eps,
            gamma: ctx.gamma(),
            kernel: ctx.kernel.clone(),
            s: t / 2.0,
            t,
            k: 2,
            replicas: reps,
            stream: ctx.stream(i as u64),
        };
        results.push(vacancy_moment_experiment(&exp, sol.clone())?);
    }
    let last = &results[1];
    let z = (last.mean - last.lower_bound) / last.std_error;
    let pars = vec![
        p("s", last.s),
        p("t", last.t),
        p("epsilon", eps),
        p("bound", last.lower_bound),
        p("replicas", reps),
    ];
    let tol = ctx.tol("vacancy.mean_se");
    ctx.check(
        "mean_above_bound_z",
        pars,
        last.values.clone(),
        z,
        -tol,
        f64::INFINITY,
    )?;
    for k in [2, 4] {
        let ratios: Vec<f64> = results
            .iter()
            .map(|r| centered_ratio(&r.values, k))
            .collect();
        let pars = vec![p("t", format!("{t_first};{t_last}")), p("k", k)];
        let step = largest_step(&ratios);
        ctx.check(
            &format!("moment_ratio_k{k}_decreasing"),
            pars,
            ratios,
            step,
            f64::NEG_INFINITY,
            0.0,
        )?;
    }
    Ok(())
}

fn upper_coupling(ctx: &mut Ctx) -> Result<(), ModuleError> {
    let t = ctx.cfg.t_max.unwrap_or(100.0);
    let reps = ctx.replicas(1000);
    let (gamma, kernel) = (ctx.gamma(), ctx.kernel.clone());
    let source = Rho0Source::Solution(Arc::new(solve_rho(&ctx.particle_params()?, t, None, 1e-8)?));
    let opts = UpperOptions::new(ctx.cfg.epsilon, gamma, kernel.clone(), t).source(source);
    let runs = collect(run_replicas(
        reps,
        ctx.stream(0),
        |s| match simulate_upper_coupling(&opts, s) {
            Ok(run) => Ok(Some(run)),
            Err(CouplingError::DominationViolated { .. }) => Ok(None),
            Err(e) => Err(e),
        },
    ))?;
    let violations = runs.iter().filter(|r| r.is_none()).count() as f64;
    let runs: Vec<_> = runs.into_iter().flatten().collect();
    let checks: Vec<f64> = runs.iter().map(|r| r.checks as f64).collect();
    let pars = vec![
        p("T", t),
        p("epsilon", ctx.cfg.epsilon),
        p("replicas", reps),
    ];
    ctx.check(
        "domination_violations",
        pars.clone(),
        checks,
        violations,
        0.0,
        0.0,
    )?;

    let eta: Vec<f64> = runs.iter().map(|r| r.final_counts.eta as f64).collect();
    let sim = SimOptions::new(t);
    let direct = collect(run_replicas(reps, ctx.stream(1), |s| {
        simulate_rwsbi(gamma, &kernel, &sim, s).map(|r| r.final_state.count_total() as f64)
    }))?;
    let ks = ks_two_sample(&eta, &direct).map_err(|e| ModuleError::Stats(e.to_string()))?;
    let mut pars = pars;
    pars.push(p("direct_mean", mean(&direct)));
    ctx.check("eta_marginal_ks", pars, eta, ks.statistic, 0.0, ks.critical)
}

fn lower_coupling(ctx: &mut Ctx) -> Result<(), ModuleError> {
    let ssrw_trials = ctx.replicas(100_000);
    let x0 = 7;
    let est = coupling_success_prob(x0, &JumpKernel::ssrw(), ssrw_trials, ctx.stream(0))?;
    let pars = vec![p("x0", x0), p("trials", ssrw_trials)];
    ctx.check("ssrw_success_rate", pars, vec![], est.p, 1.0, 1.0)?;

    let wide = JumpKernel::new(&[(-2, 0.25), (-1, 0.25), (1, 0.25), (2, 0.25)])?;
    let trials = 10_000;
    let mut ps = Vec::new();
    for (i, x0) in [4, 16, 64].into_iter().enumerate() {
        ps.push(coupling_success_prob(x0, &wide, trials, ctx.stream(1 + i as u64))?.p);
    }
    let pars = vec![
        p("kernel", "-2:1/4;-1:1/4;1:1/4;2:1/4"),
        p("x0", "4;16;64"),
        p("trials", trials),
    ];
    let worst_drop = ps
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::NEG_INFINITY, f64::max);
    ctx.check(
        "success_monotone_in_x0",
        pars,
        ps,
        worst_drop,
        f64::NEG_INFINITY,
        0.0,
    )?;

    let eps = ctx.cfg.epsilon;
    let n_max = ctx.cfg.n_max.unwrap_or(2000);
    let opts = LowerOptions::new(eps, ctx.gamma(), ctx.kernel.clone(), n_max);
    let run = simulate_lower_coupling(&opts, ctx.stream(4))?;
    let broken = run
        .blocks
        .iter()
        .filter(|b| b.eta_total < b.cum_e || b.hat_alive < b.cum_e)
        .count() as f64;
    let cum: Vec<f64> = run.blocks.iter().map(|b| b.cum_e as f64).collect();
    let pars = vec![
        p("epsilon", eps),
        p("n_max", n_max),
        p("unresolved", run.unresolved),
    ];
    ctx.check("count_dominates_merges", pars, cum, broken, 0.0, 0.0)?;

    let tail = run.range(n_max / 2, n_max);
    let sigma = ctx.kernel.sigma();
    let m_limit = 4.0 * sigma * eps * (1.0 - eps) / (2.0 * PI).sqrt();
    let hit_limit = 1.0 - (-m_limit).exp();
    let rel = ctx.tol("lower.constant_rel");
    let m: Vec<f64> = tail.iter().map(|b| b.m_tilde as f64).collect();
    let hit: Vec<f64> = tail
        .iter()
        .map(|b| f64::from(u8::from(b.t_tilde.is_some())))
        .collect();
    let blocks = format!("{}..{}", n_max / 2, n_max);
    let pars = vec![p("blocks", &blocks), p("limit", m_limit)];
    let ratio = mean(&m) / m_limit;
    ctx.check("arrivals_over_limit", pars, m, ratio, 1.0 - rel, 1.0 + rel)?;
    let pars = vec![p("blocks", &blocks), p("limit", hit_limit)];
    let ratio = mean(&hit) / hit_limit;
    ctx.check(
        "arrival_probability_over_limit",
        pars,
        hit,
        ratio,
        1.0 - rel,
        1.0 + rel,
    )
}

fn correlations(ctx: &mut Ctx) -> Result<(), ModuleError> {
    let mut rng = ctx.stream(0).rng();
    let shared = [0.02, 0.05, 0.1, 0.3];
    let m = 60;
    let mut errs = Vec::new();
    for i in 0..240 {
        let spec = VacancySpec::random(1 + i % 6, shared[i / 6 % 4], &mut rng);
        errs.push((correlation_series(&spec, m)?.0 - correlation_exact(&spec)?).abs());
    }
    let worst = errs.iter().copied().fold(0.0, f64::max);
    let tol = ctx.tol("correlations.series_abs");
    let pars = vec![p("M", m), p("k", "1..6"), p("specs", errs.len())];
    ctx.check("series_vs_exact", pars, errs, worst, 0.0, tol)?;

    // rounding slack on top of the bound, for bounds below double precision
    let slack = 1e-14;
    let mut used = Vec::new();
    let mut violations = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=6);
        let spec = VacancySpec::random(k, 0.5 * rng.random::<f64>(), &mut rng);
        let order = rng.random_range(0..=12);
        let (value, bound) = correlation_series(&spec, order)?;
        let err = (value - correlation_exact(&spec)?).abs();
        if err > bound + slack {
            violations += 1.0;
        }
        used.push(err / (bound + slack));
    }
    let pars = vec![p("pairs", 1000), p("M", "0..12"), p("slack", slack)];
    ctx.check(
        "remainder_bound_violations",
        pars,
        used,
        violations,
        0.0,
        0.0,
    )?;

    let reps = ctx.replicas(1_000_000);
    let tol = ctx.tol("correlations.mc_se");
    for k in [2, 3, 4] {
        let spec = VacancySpec::random(k, 0.3, &mut rng);
        let exact = correlation_exact(&spec)?;
        let (est, se) = correlation_montecarlo(&spec, reps, ctx.stream(k as u64))?;
        let pars = vec![
            p("k", k),
            p("exact", exact),
            p("estimate", est),
            p("replicas", reps),
        ];
        let z = (est - exact).abs() / se;
        ctx.check(&format!("montecarlo_k{k}_z"), pars, vec![], z, 0.0, tol)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_lists_the_available_ones() {
        let err = execute_suite(&ExperimentConfig::for_suite("nope")).unwrap_err();
        assert!(err.is_config());
        let msg = err.to_string();
        for (name, _) in SUITES {
            assert!(msg.contains(name), "{msg}");
        }
    }

    #[test]
    fn every_listed_suite_resolves() {
        for (name, _) in SUITES {
            assert!(lookup(name).is_some(), "{name}");
        }
    }

    #[test]
    fn blocking_replay_flags_bad_logs() {
        use crate::particles::Event;
        let ev = |time, kind| Event { time, kind };
        let mut log = EventLog {
            events: vec![
                ev(0.1, EventKind::ImmigrationSuccess),
                ev(0.2, EventKind::ImmigrationBlocked),
                ev(
                    0.3,
                    EventKind::Jump {
                        particle: 0,
                        from: 0,
                        to: 1,
                    },
                ),
                ev(0.4, EventKind::ImmigrationSuccess),
            ],
            ..Default::default()
        };
        assert_eq!(blocking_violations(&log), 0);
        log.events.push(ev(0.5, EventKind::ImmigrationSuccess));
        log.events.push(ev(
            0.6,
            EventKind::Jump {
                particle: 1,
                from: 0,
                to: -1,
            },
        ));
        log.events.push(ev(
            0.7,
            EventKind::Jump {
                particle: 2,
                from: 0,
                to: 1,
            },
        ));
        log.events.push(ev(0.8, EventKind::ImmigrationBlocked));
        assert_eq!(blocking_violations(&log), 2);
    }

    #[test]
    fn largest_step_detects_increase() {
        assert!(largest_step(&[3.0, 2.0, 1.0]) < 0.0);
        assert!(largest_step(&[3.0, 2.0, 2.5]) > 0.0);
    }
}
