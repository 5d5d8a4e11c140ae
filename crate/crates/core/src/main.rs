use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rwsbi::correlations::{
    correlation_exact, correlation_montecarlo, correlation_series, VacancySpec,
};
use rwsbi::couplings::{
    reflection_couple, simulate_lower_coupling, simulate_upper_coupling, LowerOptions, UpperOptions,
};
use rwsbi::experiments::{
    all_pass, format_number as num, run_suite, tables, ExperimentConfig, OUT_DIR_ENV, SUITES,
};
use rwsbi::particles::{
    run_replicas, simulate_poisson_system, simulate_rwsbi, ImmigrationSchedule, Rho0Source, Sign,
    SimOptions,
};
use rwsbi::{solve_rho, HeatParams, JumpKernel, RngStream};

#[derive(Parser)]
#[command(
    name = "rwsbi",
    version,
    about = "Random walks with self-blocking immigration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the lattice heat equation and tabulate rho_0 and the mass.
    SolveRho(SolveArgs),
    /// Simulate independent replicas of a particle system.
    Simulate {
        #[arg(value_enum)]
        system: System,
        #[command(flatten)]
        args: SimulateArgs,
    },
    /// Run one of the coupling constructions.
    Couple {
        #[command(subcommand)]
        which: Coupling,
    },
    /// Vacancy correlation of a set of Poisson events.
    Correlate(CorrelateArgs),
    /// Run a verification suite; exits with 1 if any check fails.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    Rwsbi,
    Poisson,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
}

impl From<SignArg> for Sign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Plus => Sign::Plus,
            SignArg::Minus => Sign::Minus,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Series,
    Mc,
}

#[derive(Args)]
struct Common {
    /// `ssrw` or a kernel file (`offset probability` per line).
    #[arg(long, default_value = "ssrw")]
    kernel: String,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; defaults to a fixed name in $RWSBI_OUT_DIR or ./rwsbi-out.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1000.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Approximate number of (log-spaced) rows.
    #[arg(long, default_value_t = 200)]
    rows: usize,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 100.0)]
    t_max: f64,
    #[arg(long, default_value_t = 10)]
    replicas: usize,
    /// Extra snapshot times, comma separated.
    #[arg(long, value_delimiter = ',')]
    snapshots: Vec<f64>,
    /// Poisson systems only.
    #[arg(long, value_enum, default_value = "plus")]
    sign: SignArg,
    /// Poisson systems only.
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Also write the occupied sites of every snapshot to this file.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Coupling {
    /// Self-blocking system below a raised Poisson system plus top-ups.
    Upper {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 100.0)]
        t_max: f64,
        #[arg(long, default_value_t = 10)]
        replicas: usize,
        #[arg(long, value_delimiter = ',')]
        snapshots: Vec<f64>,
    },
    /// Lower-bound block scheme.
    Lower {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 200)]
        n_max: usize,
    },
    /// Mirror coupling of two walks started at x0 and 0.
    TwoWalk {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        x0: i64,
        #[arg(long, default_value_t = 100)]
        replicas: usize,
    },
}

#[derive(Args)]
struct CorrelateArgs {
    /// Intersection masses, one `I:1,2 = 0.3` line per set of events.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    mode: Mode,
    /// Series truncation order.
    #[arg(long = "M", default_value_t = 60)]
    m: usize,
    #[arg(long, default_value_t = 1_000_000)]
    replicas: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    suite: Option<String>,
    /// `key = value` file; flags below win over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Any other config key, e.g. `--set tol.heat.duhamel=1e-6`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// List the suites and exit.
    #[arg(long)]
    list: bool,
}

fn out_path(given: &Option<PathBuf>, default_name: &str) -> PathBuf {
    if let Some(p) = given {
        return p.clone();
    }
    let dir = std::env::var_os(OUT_DIR_ENV)
        .filter(|d| !d.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("rwsbi-out"));
    dir.join(default_name)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn meta(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn solve(a: SolveArgs) -> Result<()> {
    let kernel = JumpKernel::resolve(&a.common.kernel)?;
    let params = HeatParams::new(a.common.gamma, a.alpha, kernel)?;
    let sol = solve_rho(&params, a.t_max, None, a.tol)?;
    let m = meta(&[
        ("kernel", a.common.kernel.clone()),
        ("gamma", num(a.common.gamma)),
        ("alpha", num(a.alpha)),
        ("t_max", num(a.t_max)),
        ("tol", num(a.tol)),
    ]);
    let csv = tables::rho_table(&m, &sol, a.rows)?;
    write(&out_path(&a.common.out, "solve_rho.csv"), &csv)
}

fn simulate(system: System, a: SimulateArgs) -> Result<()> {
    let kernel = JumpKernel::resolve(&a.common.kernel)?;
    let opts = SimOptions::new(a.t_max).snapshots(&a.snapshots);
    let base = RngStream::new(a.common.seed, 0);
    let gamma = a.common.gamma;
    let mut m = vec![
        ("kernel", a.common.kernel.clone()),
        ("gamma", num(gamma)),
        ("t_max", num(a.t_max)),
        ("replicas", a.replicas.to_string()),
        ("seed", a.common.seed.to_string()),
    ];
    let runs = match system {
        System::Rwsbi => {
            m.insert(0, ("system", "rwsbi".into()));
            run_replicas(a.replicas, base, |s| {
                simulate_rwsbi(gamma, &kernel, &opts, s)
            })
        }
        System::Poisson => {
            m.insert(0, ("system", "poisson".into()));
            m.push(("epsilon", num(a.epsilon)));
            m.push(("sign", format!("{:?}", Sign::from(a.sign)).to_lowercase()));
            let params = HeatParams::new(gamma, 1.0, kernel.clone())?;
            let sol = Arc::new(solve_rho(&params, a.t_max, None, 1e-8)?);
            let schedule = ImmigrationSchedule::tuned(
                a.sign.into(),
                a.epsilon,
                gamma,
                Rho0Source::Solution(sol),
            )?;
            run_replicas(a.replicas, base, |s| {
                simulate_poisson_system(&schedule, &kernel, &opts, s)
            })
        }
    };
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let m = meta(&m);
    let name = match system {
        System::Rwsbi => "simulate_rwsbi.csv",
        System::Poisson => "simulate_poisson.csv",
    };
    write(
        &out_path(&a.common.out, name),
        &tables::simulation_table(&m, &runs)?,
    )?;
    if let Some(path) = &a.profile {
        write(path, &tables::profile_table(&m, &runs))?;
    }
    Ok(())
}

fn couple(which: Coupling) -> Result<()> {
    match which {
        Coupling::Upper {
            common,
            epsilon,
            t_max,
            replicas,
            snapshots,
        } => {
            let kernel = JumpKernel::resolve(&common.kernel)?;
            let mut opts = UpperOptions::new(epsilon, common.gamma, kernel.clone(), t_max)
                .snapshots(&snapshots);
            if common.gamma > 0.0 {
                let params = HeatParams::new(common.gamma, 1.0, kernel)?;
                let sol = solve_rho(&params, t_max, None, 1e-8)?;
                opts = opts.source(Rho0Source::Solution(Arc::new(sol)));
            }
            let runs = run_replicas(replicas, RngStream::new(common.seed, 0), |s| {
                simulate_upper_coupling(&opts, s)
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            let hats: u64 = runs.iter().map(|r| r.hat_additions).sum();
            let checks: u64 = runs.iter().map(|r| r.checks).sum();
            println!(
                "{} runs, {checks} domination checks, 0 violations, {hats} top-up particles",
                runs.len()
            );
            let m = meta(&[
                ("kernel", common.kernel.clone()),
                ("gamma", num(common.gamma)),
                ("epsilon", num(epsilon)),
                ("t_max", num(t_max)),
                ("replicas", replicas.to_string()),
                ("seed", common.seed.to_string()),
            ]);
            write(
                &out_path(&common.out, "couple_upper.csv"),
                &tables::upper_table(&m, &runs),
            )
        }
        Coupling::Lower {
            common,
            epsilon,
            n_max,
        } => {
            let kernel = JumpKernel::resolve(&common.kernel)?;
            let opts = LowerOptions::new(epsilon, common.gamma, kernel, n_max);
            let run = simulate_lower_coupling(&opts, RngStream::new(common.seed, 0))?;
            let last = run.blocks.last().map_or(0, |b| b.cum_e);
            println!(
                "{n_max} blocks, {last} merged marks, {} unsettled pairs, {} events",
                run.unresolved, run.events
            );
            let m = meta(&[
                ("kernel", common.kernel.clone()),
                ("gamma", num(common.gamma)),
                ("epsilon", num(epsilon)),
                ("n_max", n_max.to_string()),
                ("seed", common.seed.to_string()),
            ]);
            write(
                &out_path(&common.out, "couple_lower.csv"),
                &tables::lower_table(&m, &run),
            )
        }
        Coupling::TwoWalk {
            common,
            x0,
            replicas,
        } => {
            let kernel = JumpKernel::resolve(&common.kernel)?;
            let outcomes = run_replicas(replicas, RngStream::new(common.seed, 0), |s| {
                reflection_couple(x0, &kernel, s)
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            let wins = outcomes.iter().filter(|o| o.success).count();
            println!("{wins}/{replicas} pairs met before the walk from {x0} hit 0");
            let m = meta(&[
                ("kernel", common.kernel.clone()),
                ("x0", x0.to_string()),
                ("replicas", replicas.to_string()),
                ("seed", common.seed.to_string()),
            ]);
            write(
                &out_path(&common.out, "couple_two_walk.csv"),
                &tables::two_walk_table(&m, &outcomes),
            )
        }
    }
}

fn correlate(a: CorrelateArgs) -> Result<()> {
    let spec = VacancySpec::from_file(&a.spec)?;
    let (mode, value, error) = match a.mode {
        Mode::Exact => ("exact", correlation_exact(&spec)?, 0.0),
        Mode::Series => {
            let (v, bound) = correlation_series(&spec, a.m)?;
            ("series", v, bound)
        }
        Mode::Mc => {
            let (v, se) = correlation_montecarlo(&spec, a.replicas, RngStream::new(a.seed, 0))?;
            ("mc", v, se)
        }
    };
    println!("{value}");
    let m = meta(&[
        ("spec", a.spec.display().to_string()),
        ("M", a.m.to_string()),
        ("replicas", a.replicas.to_string()),
        ("seed", a.seed.to_string()),
    ]);
    write(
        &out_path(&a.out, "correlate.csv"),
        &tables::correlate_table(&m, mode, spec.k(), value, error),
    )
}

fn verify(a: VerifyArgs) -> Result<bool> {
    if a.list {
        for (name, about) in SUITES {
            println!("{name:<16} {about}");
        }
        return Ok(true);
    }
    let mut cfg = match &a.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    let flags = [
        ("suite", a.suite),
        ("kernel", a.kernel),
        ("gamma", a.gamma.map(|v| v.to_string())),
        ("alpha", a.alpha.map(|v| v.to_string())),
        ("epsilon", a.epsilon.map(|v| v.to_string())),
        ("t_max", a.t_max.map(|v| v.to_string())),
        ("n_max", a.n_max.map(|v| v.to_string())),
        ("replicas", a.replicas.map(|v| v.to_string())),
        ("seed", a.seed.map(|v| v.to_string())),
        ("out_dir", a.out_dir.map(|v| v.display().to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    for kv in &a.set {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("--set expects KEY=VALUE, got `{kv}`");
        };
        cfg.set(k.trim(), v.trim())?;
    }
    let records = run_suite(&cfg)?;
    for r in &records {
        println!(
            "{}  {:<34} {:>13.6e}  in [{:e}, {:e}]",
            if r.pass { "PASS" } else { "FAIL" },
            r.check,
            r.statistic,
            r.lower,
            r.upper
        );
    }
    let ok = all_pass(&records);
    println!(
        "suite {}: {} (results in {})",
        cfg.suite,
        if ok { "passed" } else { "FAILED" },
        cfg.output_dir().display()
    );
    Ok(ok)
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::SolveRho(a) => solve(a).map(|_| true),
        Command::Simulate { system, args } => simulate(system, args).map(|_| true),
        Command::Couple { which } => couple(which).map(|_| true),
        Command::Correlate(a) => correlate(a).map(|_| true),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
