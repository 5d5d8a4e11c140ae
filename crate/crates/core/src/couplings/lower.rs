//! Lower-bound block scheme.
//!
//! Three systems share one event race: the self-blocking system `eta`, a
//! Poisson system `tilde` with lowered immigration, and marks on `eta`
//! particles (the `hat` particles). In block `n`:
//!
//! * the first attempt in the attempt window while no `tilde` particle sits
//!   at the origin marks an `eta` particle there (a fresh immigrant if the
//!   origin is empty, otherwise a uniformly chosen resident);
//! * the first `tilde` immigrant in the arrival window is paired with the
//!   marked particle through the two-walk coupling;
//! * the mark is permanent if the pair merges before the marked particle
//!   returns to the origin, and is removed at its first visit to the origin
//!   after the block end otherwise.
//!
//! A merged mark always has a `tilde` partner on its site, so a marked
//! particle at the origin forces a `tilde` particle there; this is asserted
//! whenever a mark is placed. Marks are carried by distinct `eta`
//! particles, so `sum_x eta_x(t_{3n}) >= #{j <= n : block j merged}`.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;

use super::grid::{build_time_grid, TimeGrid};
use super::landing::LandingLaw;
use super::pair::{is_nearest_neighbour, resolve_outcome, PairPhase, DEFAULT_MAX_EVENTS};
use super::CouplingError;
use crate::heat::{solve_rho, HeatParams};
use crate::kernel::JumpKernel;
use crate::particles::{ImmigrationSchedule, Rho0Source, Sign};
use crate::quad::GaussRule;
use crate::rng::{exp_time, RngStream};

#[derive(Debug, Clone)]
pub struct LowerOptions {
    pub epsilon: f64,
    pub gamma: f64,
    pub kernel: JumpKernel,
    pub n_max: usize,
    /// Defaults to a heat-equation solve covering the grid.
    pub source: Option<Rho0Source>,
    /// Budget for settling pairs still open at the horizon.
    pub resolve_max_events: u64,
}

impl LowerOptions {
    pub fn new(epsilon: f64, gamma: f64, kernel: JumpKernel, n_max: usize) -> Self {
        Self {
            epsilon,
            gamma,
            kernel,
            n_max,
            source: None,
            resolve_max_events: DEFAULT_MAX_EVENTS,
        }
    }

    pub fn source(mut self, source: Rho0Source) -> Self {
        self.source = Some(source);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockRecord {
    pub n: usize,
    pub start: f64,
    pub end: f64,
    pub repaired: bool,
    pub t_hat: Option<f64>,
    pub t_tilde: Option<f64>,
    /// `tilde` immigrants in the arrival window.
    pub m_tilde: u32,
    /// Their expected number, the integral of the lowered rate over the window.
    pub m_tilde_mean: f64,
    /// Mark placed, partner found and pair merged. `None` if the pair was
    /// still open when the settling budget ran out (counted as no merge).
    pub e: Option<bool>,
    pub eta_total: usize,
    pub hat_alive: usize,
    pub cum_e: usize,
}

#[derive(Debug, Clone)]
pub struct LowerRun {
    pub grid: TimeGrid,
    pub blocks: Vec<BlockRecord>,
    pub unresolved: usize,
    /// Mark placements at which the origin condition was asserted.
    pub mark_checks: u64,
    pub events: u64,
}

impl LowerRun {
    /// Blocks `n` with `lo <= n <= hi`.
    pub fn range(&self, lo: usize, hi: usize) -> &[BlockRecord] {
        let lo = lo.max(1).min(self.blocks.len() + 1);
        let hi = hi.min(self.blocks.len()).max(lo - 1);
        &self.blocks[lo - 1..hi]
    }
}

#[derive(Debug, Clone)]
struct Pair {
    block: usize,
    x: usize,
    y: usize,
    phase: PairPhase,
}

#[derive(Debug, Clone, Default)]
struct BlockState {
    t_hat: Option<f64>,
    marked: Option<usize>,
    t_tilde: Option<f64>,
    m_tilde: u32,
    pair: Option<usize>,
    eta_total: usize,
    hat_alive: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Follow {
    Mirror,
    Same,
}

#[derive(Default)]
struct Pool {
    pos: Vec<i64>,
    is_eta: Vec<bool>,
    /// Own clock ignored: moved by its partner instead.
    slaved: Vec<bool>,
    follower: Vec<Option<(usize, Follow)>>,
    mark: Vec<Option<usize>>,
    kill_after: Vec<Option<f64>>,
    pair_of: Vec<Option<usize>>,
    eta_origin: BTreeSet<usize>,
    tilde_origin: u32,
    eta_count: usize,
    marks_alive: usize,
}

impl Pool {
    fn add(&mut self, eta: bool) -> usize {
        let i = self.pos.len();
        self.pos.push(0);
        self.is_eta.push(eta);
        self.slaved.push(false);
        self.follower.push(None);
        self.mark.push(None);
        self.kill_after.push(None);
        self.pair_of.push(None);
        if eta {
            self.eta_origin.insert(i);
            self.eta_count += 1;
        } else {
            self.tilde_origin += 1;
        }
        i
    }

    fn shift(&mut self, i: usize, d: i64) {
        let from = self.pos[i];
        let to = from + d;
        self.pos[i] = to;
        if (from == 0) == (to == 0) {
            return;
        }
        if self.is_eta[i] {
            if from == 0 {
                self.eta_origin.remove(&i);
            } else {
                self.eta_origin.insert(i);
            }
        } else if from == 0 {
            self.tilde_origin -= 1;
        } else {
            self.tilde_origin += 1;
        }
    }

    fn unmark(&mut self, i: usize) {
        if self.mark[i].take().is_some() {
            self.marks_alive -= 1;
        }
        self.kill_after[i] = None;
    }

    /// Removes the mark of `i` if it sits at the origin past its deadline.
    fn expire(&mut self, i: usize, t: f64) {
        if self.pos[i] == 0 && self.kill_after[i].is_some_and(|b| t >= b) {
            self.unmark(i);
        }
    }
}

fn default_source(opts: &LowerOptions, horizon: f64) -> Result<Rho0Source, CouplingError> {
    Ok(match &opts.source {
        Some(s) => s.clone(),
        None => {
            let params = HeatParams::new(opts.gamma, 1.0, opts.kernel.clone())?;
            Rho0Source::Solution(Arc::new(solve_rho(&params, horizon, None, 1e-8)?))
        }
    })
}

fn integrate_rate(schedule: &ImmigrationSchedule, a: f64, b: f64) -> f64 {
    GaussRule::new(8).integrate(a, b, |t| schedule.rate(t))
}

/// Runs the block scheme over blocks `1..=n_max` and settles pairs still
/// open at the horizon.
pub fn simulate_lower_coupling(
    opts: &LowerOptions,
    stream: RngStream,
) -> Result<LowerRun, CouplingError> {
    if !opts.kernel.is_symmetric() {
        return Err(CouplingError::KernelNotSymmetric);
    }
    if !(opts.gamma > 0.0 && opts.gamma.is_finite()) {
        return Err(CouplingError::InvalidParams(format!(
            "gamma must be positive, got {}",
            opts.gamma
        )));
    }
    let grid = build_time_grid(opts.epsilon, opts.n_max)?;
    let schedule = ImmigrationSchedule::tuned(
        Sign::Minus,
        opts.epsilon,
        opts.gamma,
        default_source(opts, grid.horizon())?,
    )?;
    let kernel = &opts.kernel;
    let nearest = is_nearest_neighbour(kernel);
    let gamma = opts.gamma;
    let mut rng = stream.rng();

    let mut pool = Pool::default();
    let mut pairs: Vec<Pair> = Vec::new();
    let mut blocks: Vec<BlockState> = vec![BlockState::default(); opts.n_max + 1];
    let (mut t, mut n, mut events, mut mark_checks) = (0.0, 1usize, 0u64, 0u64);

    while n <= opts.n_max {
        let (env, env_end) = schedule.envelope(t);
        let boundary = env_end.min(grid.end(n));
        let total = pool.pos.len() as f64 + gamma + env;
        let next = t + exp_time(&mut rng, total);
        if next >= boundary {
            t = boundary;
            if boundary == grid.end(n) {
                close_block(&mut pool, &mut blocks[n], t);
                n += 1;
            }
            continue;
        }
        t = next;
        events += 1;
        let u = rng.random::<f64>() * total;
        if u < gamma {
            let b = &mut blocks[n];
            if b.t_hat.is_none() && t <= grid.attempt_end(n) && pool.tilde_origin == 0 {
                mark_checks += 1;
                if pool.eta_origin.iter().any(|&i| pool.mark[i].is_some()) {
                    return Err(CouplingError::PropertyViolated {
                        t,
                        what: "marked particle at the origin without a tilde particle".into(),
                    });
                }
                let x = if pool.eta_origin.is_empty() {
                    pool.add(true)
                } else {
                    let k = rng.random_range(0..pool.eta_origin.len());
                    *pool.eta_origin.iter().nth(k).expect("k < len")
                };
                pool.mark[x] = Some(n);
                pool.kill_after[x] = None;
                pool.marks_alive += 1;
                b.t_hat = Some(t);
                b.marked = Some(x);
            } else if pool.eta_origin.is_empty() {
                pool.add(true);
            }
        } else if u < gamma + env {
            if rng.random::<f64>() * env < schedule.rate(t) {
                let y = pool.add(false);
                let b = &mut blocks[n];
                if t > grid.buffer_end(n) {
                    b.m_tilde += 1;
                    if b.t_tilde.is_none() {
                        b.t_tilde = Some(t);
                        if let Some(x) = b.marked {
                            let p = pairs.len();
                            let phase = PairPhase::start(nearest, pool.pos[x], 0);
                            pairs.push(Pair {
                                block: n,
                                x,
                                y,
                                phase,
                            });
                            pool.pair_of[x] = Some(p);
                            pool.pair_of[y] = Some(p);
                            b.pair = Some(p);
                            link(&mut pool, x, y, phase);
                        }
                    }
                }
            }
        } else {
            let i = rng.random_range(0..pool.pos.len());
            if pool.slaved[i] {
                continue;
            }
            let d = kernel.sample(&mut rng);
            let open = pool.pair_of[i].filter(|&p| pairs[p].phase.is_open());
            let gap = open.map(|p| pool.pos[pairs[p].x] - pool.pos[pairs[p].y]);
            pool.shift(i, d);
            if let Some((j, f)) = pool.follower[i] {
                pool.shift(j, if f == Follow::Mirror { -d } else { d });
            }
            if let (Some(p), Some(gap)) = (open, gap) {
                let (x, y) = (pairs[p].x, pairs[p].y);
                let before = pairs[p].phase;
                let after = before.advance(pool.pos[x], pool.pos[y], gap, i == x);
                if after != before {
                    pairs[p].phase = after;
                    link(&mut pool, x, y, after);
                    if after == PairPhase::Failed {
                        let end = grid.end(pairs[p].block);
                        pool.kill_after[x] = Some(end);
                        pool.expire(x, t);
                    }
                }
            }
            if pool.is_eta[i] {
                pool.expire(i, t);
            }
        }
    }

    // pairs still open at the horizon are settled on their own: the rest of
    // the system no longer matters for whether they merge
    let law = LandingLaw::new(kernel);
    let mut settled = vec![None; pairs.len()];
    let mut unresolved = 0;
    for (p, pair) in pairs.iter().enumerate() {
        settled[p] = match pair.phase {
            PairPhase::Merged => Some(true),
            PairPhase::Failed => Some(false),
            phase => match resolve_outcome(
                pool.pos[pair.x],
                pool.pos[pair.y],
                phase,
                kernel,
                law.as_ref(),
                &mut rng,
                opts.resolve_max_events,
            ) {
                Ok((end, _, _)) => Some(end == PairPhase::Merged),
                Err(CouplingError::Unresolved { .. }) => {
                    unresolved += 1;
                    None
                }
                Err(e) => return Err(e),
            },
        };
    }

    let mut records = Vec::with_capacity(opts.n_max);
    let mut cum = 0;
    for (k, b) in blocks.iter().enumerate().skip(1) {
        let e = match b.pair {
            Some(p) => settled[p],
            None => Some(false),
        };
        cum += usize::from(e == Some(true));
        if b.eta_total < cum || b.hat_alive < cum {
            return Err(CouplingError::PropertyViolated {
                t: grid.end(k),
                what: format!(
                    "block {k}: {} particles, {} marks, {cum} merged blocks",
                    b.eta_total, b.hat_alive
                ),
            });
        }
        records.push(BlockRecord {
            n: k,
            start: grid.start(k),
            end: grid.end(k),
            repaired: grid.repaired[k - 1],
            t_hat: b.t_hat,
            t_tilde: b.t_tilde,
            m_tilde: b.m_tilde,
            m_tilde_mean: integrate_rate(&schedule, grid.buffer_end(k), grid.end(k)),
            e,
            eta_total: b.eta_total,
            hat_alive: b.hat_alive,
            cum_e: cum,
        });
    }
    Ok(LowerRun {
        grid,
        blocks: records,
        unresolved,
        mark_checks,
        events,
    })
}

/// Wires the follower relation for the current phase of pair `(x, y)`.
fn link(pool: &mut Pool, x: usize, y: usize, phase: PairPhase) {
    let (follow, slaved) = match phase {
        PairPhase::Mirror => (Some((y, Follow::Mirror)), true),
        PairPhase::Merged => (Some((y, Follow::Same)), true),
        _ => (None, false),
    };
    pool.follower[x] = follow;
    pool.slaved[y] = slaved;
}

fn close_block(pool: &mut Pool, b: &mut BlockState, t: f64) {
    if let (Some(x), None) = (b.marked, b.t_tilde) {
        pool.kill_after[x] = Some(t);
    }
    let due: Vec<usize> = pool.eta_origin.iter().copied().collect();
    for i in due {
        pool.expire(i, t);
    }
    b.eta_total = pool.eta_count;
    b.hat_alive = pool.marks_alive;
}
