//! Exact event-driven simulation of independent rate-1 walkers fed by an
//! immigration stream at the origin.
//!
//! Two systems share the engine:
//!
//! * self-blocking immigration: attempts arrive at constant rate `gamma` and
//!   succeed only when the origin is empty;
//! * Poisson systems: immigration is an inhomogeneous Poisson stream with the
//!   tuned rate `(1 +- eps) gamma exp(-rho_0(t))`, never blocked, realised by
//!   thinning against a dyadic piecewise-constant envelope.
//!
//! Both use the aggregated exponential race: with `n` walkers and attempt
//! rate `r`, the next event comes after an `Exp(n + r)` time and is an
//! attempt with probability `r / (n + r)`, otherwise a jump of a uniformly
//! chosen walker. Walkers are never removed, so a walker's index is its id.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::heat::{asymptotic_rho0, HeatParams, RhoSolution};
use crate::kernel::JumpKernel;
use crate::rng::{exp_time, RngStream};

pub const DEFAULT_EVENT_CAP: u64 = 1 << 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("event cap {cap} exceeded at t = {t}")]
    EventCapExceeded { cap: u64, t: f64 },
    #[error("immigration rate {rate} exceeds envelope {envelope} at t = {t}")]
    EnvelopeViolation { t: f64, rate: f64, envelope: f64 },
    #[error("interval [{s}, {t}] is not inside [0, {horizon}]")]
    RangeError { s: f64, t: f64, horizon: f64 },
    #[error("rho_0 source covers [0, {covered}] but the run needs [0, {needed}]")]
    Coverage { covered: f64, needed: f64 },
}

/// Configuration of walkers at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    pub t: f64,
    /// Position of walker `i` (walkers are numbered in order of arrival).
    pub positions: Vec<i64>,
    pub occupancy: BTreeMap<i64, u32>,
}

impl ParticleSystem {
    pub fn from_positions(t: f64, positions: Vec<i64>) -> Self {
        let mut occupancy = BTreeMap::new();
        for &x in &positions {
            *occupancy.entry(x).or_insert(0) += 1;
        }
        Self {
            t,
            positions,
            occupancy,
        }
    }

    pub fn count_total(&self) -> usize {
        self.positions.len()
    }

    pub fn count_at(&self, x: i64) -> u32 {
        self.occupancy.get(&x).copied().unwrap_or(0)
    }

    pub fn is_consistent(&self) -> bool {
        let rebuilt = Self::from_positions(self.t, self.positions.clone());
        rebuilt.occupancy == self.occupancy
            && self.occupancy.values().map(|&c| c as usize).sum::<usize>() == self.positions.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    ImmigrationSuccess,
    ImmigrationBlocked,
    Jump { particle: usize, from: i64, to: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Full record of a run; only kept when requested.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
    /// `(time, number of walkers at the origin after the event)`
    pub origin_changes: Vec<(f64, u32)>,
}

impl EventLog {
    /// Rebuilds the vacancy record on `[0, horizon]` from the origin changes.
    pub fn replay_vacancy(&self, horizon: f64) -> VacancyTracker {
        let mut v = VacancyTracker::new();
        let mut count = 0u32;
        for &(t, c) in &self.origin_changes {
            if count == 0 && c > 0 {
                v.occupied(t);
            } else if count > 0 && c == 0 {
                v.vacated(t);
            }
            count = c;
        }
        v.finish(horizon);
        v
    }

    /// Replays the events from an empty system and returns the final walkers.
    pub fn replay_positions(&self) -> Vec<i64> {
        let mut pos = Vec::new();
        for e in &self.events {
            match e.kind {
                EventKind::ImmigrationSuccess => pos.push(0),
                EventKind::ImmigrationBlocked => {}
                EventKind::Jump { particle, to, .. } => pos[particle] = to,
            }
        }
        pos
    }
}

/// Maximal intervals on which the origin is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct VacancyTracker {
    intervals: Vec<(f64, f64)>,
    open: Option<f64>,
    horizon: f64,
}

impl Default for VacancyTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl VacancyTracker {
    /// Starts vacant at time 0.
    pub fn new() -> Self {
        Self {
            intervals: Vec::new(),
            open: Some(0.0),
            horizon: 0.0,
        }
    }

    pub(crate) fn occupied(&mut self, t: f64) {
        if let Some(start) = self.open.take() {
            if t > start {
                self.intervals.push((start, t));
            }
        }
    }

    pub(crate) fn vacated(&mut self, t: f64) {
        if self.open.is_none() {
            self.open = Some(t);
        }
    }

    pub(crate) fn finish(&mut self, horizon: f64) {
        if let Some(start) = self.open.take() {
            if horizon > start {
                self.intervals.push((start, horizon));
            }
        }
        self.horizon = horizon;
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Lebesgue measure of `{u in [s, t] : origin empty at u}`.
    pub fn vacant_time(&self, s: f64, t: f64) -> Result<f64, SimError> {
        if !(0.0 <= s && s <= t && t <= self.horizon) {
            return Err(SimError::RangeError {
                s,
                t,
                horizon: self.horizon,
            });
        }
        let first = self.intervals.partition_point(|&(_, b)| b <= s);
        let mut total = 0.0;
        for &(a, b) in &self.intervals[first..] {
            if a >= t {
                break;
            }
            total += b.min(t) - a.max(s);
        }
        Ok(total)
    }
}

pub fn vacant_time(tracker: &VacancyTracker, s: f64, t: f64) -> Result<f64, SimError> {
    tracker.vacant_time(s, t)
}

/// Where the tuned rate takes `rho_0` from.
#[derive(Debug, Clone)]
pub enum Rho0Source {
    Solution(Arc<RhoSolution>),
    /// Leading-order formula, held at its value at `e^2` below that time
    /// (where it stops increasing) and floored at 0.
    Asymptotic(HeatParams),
}

impl Rho0Source {
    pub fn rho0(&self, t: f64) -> f64 {
        match self {
            Rho0Source::Solution(sol) => sol.rho0_at(t),
            Rho0Source::Asymptotic(p) => {
                let t = t.max(std::f64::consts::E.powi(2));
                asymptotic_rho0(t, p).expect("t > e").max(0.0)
            }
        }
    }

    fn covered(&self) -> f64 {
        match self {
            Rho0Source::Solution(sol) => sol.t_max(),
            Rho0Source::Asymptotic(_) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self, epsilon: f64) -> f64 {
        match self {
            Sign::Plus => 1.0 + epsilon,
            Sign::Minus => 1.0 - epsilon,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ImmigrationSchedule {
    Constant(f64),
    Tuned {
        sign: Sign,
        epsilon: f64,
        gamma: f64,
        source: Rho0Source,
    },
}

impl ImmigrationSchedule {
    pub fn tuned(
        sign: Sign,
        epsilon: f64,
        gamma: f64,
        source: Rho0Source,
    ) -> Result<Self, SimError> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(SimError::InvalidParams(format!(
                "epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(SimError::InvalidParams(format!(
                "gamma must be >= 0, got {gamma}"
            )));
        }
        Ok(Self::Tuned {
            sign,
            epsilon,
            gamma,
            source,
        })
    }

    /// Immigration intensity at time `t`.
    pub fn rate(&self, t: f64) -> f64 {
        match self {
            Self::Constant(g) => *g,
            Self::Tuned {
                sign,
                epsilon,
                gamma,
                source,
            } => sign.factor(*epsilon) * gamma * (-source.rho0(t)).exp(),
        }
    }

    /// Envelope value on the dyadic block containing `t`, and the block end.
    /// Blocks are `[0, 1)` and `[2^k, 2^{k+1})`; the value is the rate at the
    /// block's left end.
    pub fn envelope(&self, t: f64) -> (f64, f64) {
        match self {
            Self::Constant(g) => (*g, f64::INFINITY),
            Self::Tuned { .. } => {
                let (start, end) = dyadic_block(t);
                (self.rate(start), end)
            }
        }
    }

    fn check_coverage(&self, t_max: f64) -> Result<(), SimError> {
        if let Self::Tuned { source, .. } = self {
            let covered = source.covered();
            if covered < t_max * (1.0 - 1e-12) {
                return Err(SimError::Coverage {
                    covered,
                    needed: t_max,
                });
            }
        }
        Ok(())
    }
}

pub fn dyadic_block(t: f64) -> (f64, f64) {
    if t < 1.0 {
        (0.0, 1.0)
    } else {
        let k = t.log2().floor();
        let mut start = k.exp2();
        // guard against rounding in log2 near powers of two
        if start > t {
            start *= 0.5;
        } else if 2.0 * start <= t {
            start *= 2.0;
        }
        (start, 2.0 * start)
    }
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub t_max: f64,
    pub snapshot_times: Vec<f64>,
    pub record_log: bool,
    pub event_cap: u64,
}

impl SimOptions {
    pub fn new(t_max: f64) -> Self {
        Self {
            t_max,
            snapshot_times: Vec::new(),
            record_log: false,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }

    pub fn snapshots(mut self, times: &[f64]) -> Self {
        self.snapshot_times = times.to_vec();
        self
    }

    pub fn with_log(mut self) -> Self {
        self.record_log = true;
        self
    }

    pub fn event_cap(mut self, cap: u64) -> Self {
        self.event_cap = cap;
        self
    }

    fn validate(&self) -> Result<Vec<f64>, SimError> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(SimError::InvalidParams(format!(
                "T must be > 0, got {}",
                self.t_max
            )));
        }
        let mut snaps = self.snapshot_times.clone();
        if snaps.iter().any(|&s| !(0.0..=self.t_max).contains(&s)) {
            return Err(SimError::InvalidParams(format!(
                "snapshot times must lie in [0, {}]",
                self.t_max
            )));
        }
        snaps.sort_by(f64::total_cmp);
        snaps.dedup();
        Ok(snaps)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunCounts {
    pub attempts: u64,
    pub successes: u64,
    pub blocked: u64,
    pub jumps: u64,
    /// Envelope proposals rejected by thinning (Poisson systems only).
    pub thinned: u64,
}

#[derive(Debug, Clone)]
pub struct SimRun {
    pub snapshots: Vec<ParticleSystem>,
    pub log: Option<EventLog>,
    pub vacancy: VacancyTracker,
    pub counts: RunCounts,
    pub final_state: ParticleSystem,
}

/// Walker positions plus the bookkeeping every system needs.
#[derive(Debug, Clone)]
pub(crate) struct Walkers {
    pub positions: Vec<i64>,
    pub origin: u32,
    pub vacancy: VacancyTracker,
    pub log: Option<EventLog>,
}

impl Walkers {
    pub fn new(record_log: bool) -> Self {
        Self {
            positions: Vec::new(),
            origin: 0,
            vacancy: VacancyTracker::new(),
            log: record_log.then(EventLog::default),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    fn origin_changed(&mut self, t: f64, before: u32) {
        if before == 0 && self.origin > 0 {
            self.vacancy.occupied(t);
        } else if before > 0 && self.origin == 0 {
            self.vacancy.vacated(t);
        }
        if let Some(log) = &mut self.log {
            log.origin_changes.push((t, self.origin));
        }
    }

    pub fn immigrate(&mut self, t: f64) -> usize {
        let before = self.origin;
        self.positions.push(0);
        self.origin += 1;
        if let Some(log) = &mut self.log {
            log.events.push(Event {
                time: t,
                kind: EventKind::ImmigrationSuccess,
            });
        }
        self.origin_changed(t, before);
        self.positions.len() - 1
    }

    pub fn blocked(&mut self, t: f64) {
        if let Some(log) = &mut self.log {
            log.events.push(Event {
                time: t,
                kind: EventKind::ImmigrationBlocked,
            });
        }
    }

    pub fn jump(&mut self, t: f64, i: usize, d: i64) {
        let from = self.positions[i];
        let to = from + d;
        self.positions[i] = to;
        if let Some(log) = &mut self.log {
            log.events.push(Event {
                time: t,
                kind: EventKind::Jump {
                    particle: i,
                    from,
                    to,
                },
            });
        }
        if (from == 0) != (to == 0) {
            let before = self.origin;
            if from == 0 {
                self.origin -= 1;
            } else {
                self.origin += 1;
            }
            self.origin_changed(t, before);
        }
    }

    pub fn snapshot(&self, t: f64) -> ParticleSystem {
        ParticleSystem::from_positions(t, self.positions.clone())
    }

    pub fn finish(
        mut self,
        t_max: f64,
        snapshots: Vec<ParticleSystem>,
        counts: RunCounts,
    ) -> SimRun {
        self.vacancy.finish(t_max);
        SimRun {
            final_state: self.snapshot(t_max),
            snapshots,
            log: self.log,
            vacancy: self.vacancy,
            counts,
        }
    }
}

/// Records snapshots scheduled strictly before `until`.
pub(crate) fn take_snapshots(
    walkers: &Walkers,
    snaps: &[f64],
    next: &mut usize,
    until: f64,
    out: &mut Vec<ParticleSystem>,
) {
    while *next < snaps.len() && snaps[*next] < until {
        out.push(walkers.snapshot(snaps[*next]));
        *next += 1;
    }
}

/// Self-blocking immigration at constant rate `gamma`, starting empty.
pub fn simulate_rwsbi(
    gamma: f64,
    kernel: &JumpKernel,
    opts: &SimOptions,
    stream: RngStream,
) -> Result<SimRun, SimError> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(SimError::InvalidParams(format!(
            "gamma must be >= 0, got {gamma}"
        )));
    }
    let snaps = opts.validate()?;
    let t_max = opts.t_max;
    let mut rng = stream.rng();
    let mut w = Walkers::new(opts.record_log);
    let mut counts = RunCounts::default();
    let mut out = Vec::with_capacity(snaps.len());
    let mut next_snap = 0;
    let mut t = 0.0;
    let mut events = 0u64;
    loop {
        let n = w.len() as f64;
        let next = t + exp_time(&mut rng, n + gamma);
        take_snapshots(&w, &snaps, &mut next_snap, next.min(t_max), &mut out);
        if next > t_max {
            break;
        }
        t = next;
        events += 1;
        if events > opts.event_cap {
            return Err(SimError::EventCapExceeded {
                cap: opts.event_cap,
                t,
            });
        }
        if rng.random::<f64>() * (n + gamma) < gamma {
            counts.attempts += 1;
            if w.origin == 0 {
                counts.successes += 1;
                w.immigrate(t);
            } else {
                counts.blocked += 1;
                w.blocked(t);
            }
        } else {
            let i = rng.random_range(0..w.len());
            let d = kernel.sample(&mut rng);
            counts.jumps += 1;
            w.jump(t, i, d);
        }
    }
    take_snapshots(&w, &snaps, &mut next_snap, f64::INFINITY, &mut out);
    Ok(w.finish(t_max, out, counts))
}

/// Independent walkers immigrating as an inhomogeneous Poisson stream with
/// the schedule's rate.
pub fn simulate_poisson_system(
    schedule: &ImmigrationSchedule,
    kernel: &JumpKernel,
    opts: &SimOptions,
    stream: RngStream,
) -> Result<SimRun, SimError> {
    if let ImmigrationSchedule::Constant(_) = schedule {
        return Err(SimError::InvalidParams(
            "Poisson systems need a tuned schedule".into(),
        ));
    }
    let snaps = opts.validate()?;
    schedule.check_coverage(opts.t_max)?;
    let t_max = opts.t_max;
    let mut rng = stream.rng();
    let mut w = Walkers::new(opts.record_log);
    let mut counts = RunCounts::default();
    let mut out = Vec::with_capacity(snaps.len());
    let mut next_snap = 0;
    let mut t = 0.0;
    let mut events = 0u64;
    loop {
        let (env, block_end) = schedule.envelope(t);
        let n = w.len() as f64;
        let next = t + exp_time(&mut rng, n + env);
        if next >= block_end && block_end < t_max {
            take_snapshots(&w, &snaps, &mut next_snap, block_end, &mut out);
            t = block_end;
            continue;
        }
        take_snapshots(&w, &snaps, &mut next_snap, next.min(t_max), &mut out);
        if next > t_max {
            break;
        }
        t = next;
        events += 1;
        if events > opts.event_cap {
            return Err(SimError::EventCapExceeded {
                cap: opts.event_cap,
                t,
            });
        }
        if rng.random::<f64>() * (n + env) < env {
            let rate = schedule.rate(t);
            if rate > env * (1.0 + 1e-9) {
                return Err(SimError::EnvelopeViolation {
                    t,
                    rate,
                    envelope: env,
                });
            }
            counts.attempts += 1;
            if rng.random::<f64>() * env < rate {
                counts.successes += 1;
                w.immigrate(t);
            } else {
                counts.thinned += 1;
            }
        } else {
            let i = rng.random_range(0..w.len());
            let d = kernel.sample(&mut rng);
            counts.jumps += 1;
            w.jump(t, i, d);
        }
    }
    take_snapshots(&w, &snaps, &mut next_snap, f64::INFINITY, &mut out);
    Ok(w.finish(t_max, out, counts))
}

/// Runs `replicas` independent copies on the replica streams of `base`,
/// returned in replica order.
pub fn run_replicas<T, F>(replicas: usize, base: RngStream, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(RngStream) -> T + Sync,
{
    (0..replicas as u64)
        .into_par_iter()
        .map(|i| f(base.replica(i)))
        .collect()
}

/// `sum_x eta_x(t) f(x / (sigma sqrt t)) / (sigma sqrt(t) log t)`.
pub fn profile_estimator<F: Fn(f64) -> f64>(
    snapshot: &ParticleSystem,
    f: F,
    sigma: f64,
) -> Result<f64, SimError> {
    let t = snapshot.t;
    if !(t > std::f64::consts::E) {
        return Err(SimError::InvalidParams(format!(
            "profile estimator needs t > e, got {t}"
        )));
    }
    let scale = sigma * t.sqrt();
    let sum: f64 = snapshot
        .occupancy
        .iter()
        .map(|(&x, &c)| c as f64 * f(x as f64 / scale))
        .sum();
    Ok(sum / (scale * t.ln()))
}

/// Summary of the vacancy-moment experiment.
#[derive(Debug, Clone)]
pub struct MomentResult {
    pub s: f64,
    pub t: f64,
    pub k: u32,
    pub values: Vec<f64>,
    pub mean: f64,
    pub std_error: f64,
    pub centered_moment: f64,
    /// `centered_moment / mean^k`
    pub ratio: f64,
    /// `int_s^t u^{-(1-eps)/2} du`
    pub lower_bound: f64,
}

/// `int_s^t u^{-(1-eps)/2} du`.
pub fn vacancy_lower_bound(epsilon: f64, s: f64, t: f64) -> f64 {
    let a = (1.0 + epsilon) / 2.0;
    (t.powf(a) - s.powf(a)) / a
}

#[derive(Debug, Clone)]
pub struct MomentExperiment {
    pub epsilon: f64,
    pub gamma: f64,
    pub kernel: JumpKernel,
    pub s: f64,
    pub t: f64,
    pub k: u32,
    pub replicas: usize,
    pub stream: RngStream,
}

/// Vacant time on `[s, t]` of the minus-tuned Poisson system, over replicas.
/// `rho_0` comes from `solution`, which must cover `[0, t]`.
pub fn vacancy_moment_experiment(
    exp: &MomentExperiment,
    solution: Arc<RhoSolution>,
) -> Result<MomentResult, SimError> {
    if !(exp.t / 2.0 <= exp.s && exp.s < exp.t) {
        return Err(SimError::InvalidParams(format!(
            "need t/2 <= s < t, got s = {}, t = {}",
            exp.s, exp.t
        )));
    }
    if exp.k == 0 || exp.k % 2 == 1 {
        return Err(SimError::InvalidParams(format!(
            "k must be even and positive, got {}",
            exp.k
        )));
    }
    if exp.replicas < 2 {
        return Err(SimError::InvalidParams("need at least 2 replicas".into()));
    }
    let schedule = ImmigrationSchedule::tuned(
        Sign::Minus,
        exp.epsilon,
        exp.gamma,
        Rho0Source::Solution(solution),
    )?;
    let opts = SimOptions::new(exp.t);
    let runs = run_replicas(exp.replicas, exp.stream, |st| {
        simulate_poisson_system(&schedule, &exp.kernel, &opts, st)
            .and_then(|r| r.vacancy.vacant_time(exp.s, exp.t))
    });
    let values = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(moment_summary(exp, values))
}

fn moment_summary(exp: &MomentExperiment, values: Vec<f64>) -> MomentResult {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let centered_moment = values
        .iter()
        .map(|v| (v - mean).powi(exp.k as i32))
        .sum::<f64>()
        / n;
    MomentResult {
        s: exp.s,
        t: exp.t,
        k: exp.k,
        mean,
        std_error: (var / n).sqrt(),
        centered_moment,
        ratio: centered_moment / mean.powi(exp.k as i32),
        lower_bound: vacancy_lower_bound(exp.epsilon, exp.s, exp.t),
        values,
    }
}
