//! Upper-bound triple system.
//!
//! A Poisson system `tilde` with raised immigration runs on its own. At each
//! attempt of a rate-`gamma` clock, a `hat` particle is placed at the origin
//! if no `tilde` particle is there. The self-blocking system `eta` uses the
//! same attempts; a successful `eta` immigrant is glued to an unglued
//! `tilde`/`hat` particle at the origin and copies its path forever. Since
//! gluing is one-to-one, `eta_x <= tilde_x + hat_x` at every site and time.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rand::Rng;

use super::CouplingError;
use crate::heat::{solve_rho, HeatParams};
use crate::kernel::JumpKernel;
use crate::particles::{ImmigrationSchedule, Rho0Source, Sign, VacancyTracker};
use crate::rng::{exp_time, RngStream};

#[derive(Debug, Clone)]
pub struct UpperOptions {
    pub epsilon: f64,
    pub gamma: f64,
    pub kernel: JumpKernel,
    pub t_max: f64,
    pub snapshot_times: Vec<f64>,
    /// Defaults to a heat-equation solve on `[0, t_max]`.
    pub source: Option<Rho0Source>,
}

impl UpperOptions {
    pub fn new(epsilon: f64, gamma: f64, kernel: JumpKernel, t_max: f64) -> Self {
        Self {
            epsilon,
            gamma,
            kernel,
            t_max,
            snapshot_times: Vec::new(),
            source: None,
        }
    }

    pub fn snapshots(mut self, times: &[f64]) -> Self {
        self.snapshot_times = times.to_vec();
        self
    }

    pub fn source(mut self, source: Rho0Source) -> Self {
        self.source = Some(source);
        self
    }

    /// The tuned schedule, solving for `rho_0` if no source was given.
    pub fn schedule(&self) -> Result<ImmigrationSchedule, CouplingError> {
        let source = match &self.source {
            Some(s) => s.clone(),
            None if self.gamma > 0.0 => {
                let params = HeatParams::new(self.gamma, 1.0, self.kernel.clone())?;
                Rho0Source::Solution(Arc::new(solve_rho(&params, self.t_max, None, 1e-8)?))
            }
            // rate is identically zero, any source will do
            None => Rho0Source::Asymptotic(HeatParams::standard()),
        };
        Ok(ImmigrationSchedule::tuned(
            Sign::Plus,
            self.epsilon,
            self.gamma,
            source,
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleCounts {
    pub t: f64,
    pub eta: usize,
    pub eta_tilde: usize,
    pub eta_hat: usize,
}

#[derive(Debug, Clone)]
pub struct UpperRun {
    pub snapshots: Vec<TripleCounts>,
    pub final_counts: TripleCounts,
    pub attempts: u64,
    pub hat_additions: u64,
    /// Time in `[0, t_max]` with no `tilde` particle at the origin.
    pub tilde_vacant_time: f64,
    /// Site comparisons made while asserting domination.
    pub checks: u64,
    pub events: u64,
}

struct Triple {
    pos: Vec<i64>,
    is_hat: Vec<bool>,
    glued: Vec<bool>,
    union_occ: HashMap<i64, u32>,
    eta_occ: HashMap<i64, u32>,
    at_origin: BTreeSet<usize>,
    tilde_origin: u32,
    eta_count: usize,
    hat_count: usize,
    vacancy: VacancyTracker,
}

impl Triple {
    fn new() -> Self {
        Self {
            pos: Vec::new(),
            is_hat: Vec::new(),
            glued: Vec::new(),
            union_occ: HashMap::new(),
            eta_occ: HashMap::new(),
            at_origin: BTreeSet::new(),
            tilde_origin: 0,
            eta_count: 0,
            hat_count: 0,
            vacancy: VacancyTracker::new(),
        }
    }

    fn counts(&self, t: f64) -> TripleCounts {
        TripleCounts {
            t,
            eta: self.eta_count,
            eta_tilde: self.pos.len() - self.hat_count,
            eta_hat: self.hat_count,
        }
    }

    fn tilde_origin_add(&mut self, t: f64, delta: i32) {
        let before = self.tilde_origin;
        self.tilde_origin = (before as i32 + delta) as u32;
        if before == 0 && self.tilde_origin > 0 {
            self.vacancy.occupied(t);
        } else if before > 0 && self.tilde_origin == 0 {
            self.vacancy.vacated(t);
        }
    }

    fn add(&mut self, t: f64, hat: bool) {
        let i = self.pos.len();
        self.pos.push(0);
        self.is_hat.push(hat);
        self.glued.push(false);
        *self.union_occ.entry(0).or_insert(0) += 1;
        self.at_origin.insert(i);
        if hat {
            self.hat_count += 1;
        } else {
            self.tilde_origin_add(t, 1);
        }
    }

    fn jump(&mut self, t: f64, i: usize, d: i64) {
        if d == 0 {
            return;
        }
        let from = self.pos[i];
        let to = from + d;
        self.pos[i] = to;
        shift(&mut self.union_occ, from, to);
        if self.glued[i] {
            shift(&mut self.eta_occ, from, to);
        }
        if from == 0 {
            self.at_origin.remove(&i);
            if !self.is_hat[i] {
                self.tilde_origin_add(t, -1);
            }
        } else if to == 0 {
            self.at_origin.insert(i);
            if !self.is_hat[i] {
                self.tilde_origin_add(t, 1);
            }
        }
    }

    fn check(&self, t: f64, x: i64) -> Result<(), CouplingError> {
        let eta = self.eta_occ.get(&x).copied().unwrap_or(0);
        let dominating = self.union_occ.get(&x).copied().unwrap_or(0);
        if eta > dominating {
            return Err(CouplingError::DominationViolated {
                t,
                x,
                eta,
                dominating,
            });
        }
        Ok(())
    }
}

fn shift(occ: &mut HashMap<i64, u32>, from: i64, to: i64) {
    let c = occ.get_mut(&from).expect("occupied site");
    *c -= 1;
    if *c == 0 {
        occ.remove(&from);
    }
    *occ.entry(to).or_insert(0) += 1;
}

/// Runs the triple system on `[0, t_max]`, checking domination at every
/// site an event touches.
pub fn simulate_upper_coupling(
    opts: &UpperOptions,
    stream: RngStream,
) -> Result<UpperRun, CouplingError> {
    if !(opts.epsilon > 0.0 && opts.epsilon < 1.0) {
        return Err(CouplingError::InvalidParams(format!(
            "epsilon must lie in (0, 1), got {}",
            opts.epsilon
        )));
    }
    if !(opts.gamma >= 0.0 && opts.gamma.is_finite() && opts.t_max > 0.0) {
        return Err(CouplingError::InvalidParams(
            "need gamma >= 0 and t_max > 0".into(),
        ));
    }
    let schedule = opts.schedule()?;
    let gamma = opts.gamma;
    let t_max = opts.t_max;
    let mut snaps = opts.snapshot_times.clone();
    snaps.sort_by(f64::total_cmp);
    let mut rng = stream.rng();
    let mut s = Triple::new();
    let mut out = Vec::new();
    let mut next_snap = 0;
    let (mut t, mut events, mut checks, mut attempts, mut hats) = (0.0, 0u64, 0u64, 0u64, 0u64);
    loop {
        let (env, block_end) = schedule.envelope(t);
        let n = s.pos.len() as f64;
        let total = n + gamma + env;
        let next = if total > 0.0 {
            t + exp_time(&mut rng, total)
        } else {
            f64::INFINITY
        };
        let until = next.min(block_end).min(t_max);
        while next_snap < snaps.len() && snaps[next_snap] < until {
            out.push(s.counts(snaps[next_snap]));
            next_snap += 1;
        }
        if next >= block_end && block_end < t_max {
            t = block_end;
            continue;
        }
        if next > t_max {
            break;
        }
        t = next;
        events += 1;
        let u = rng.random::<f64>() * total;
        if u < gamma {
            attempts += 1;
            if s.tilde_origin == 0 {
                s.add(t, true);
                hats += 1;
            }
            if !s.eta_occ.contains_key(&0) {
                let partner = s
                    .at_origin
                    .iter()
                    .copied()
                    .find(|&i| !s.glued[i])
                    .ok_or_else(|| CouplingError::DominationViolated {
                        t,
                        x: 0,
                        eta: 1,
                        dominating: s.union_occ.get(&0).copied().unwrap_or(0),
                    })?;
                s.glued[partner] = true;
                *s.eta_occ.entry(0).or_insert(0) += 1;
                s.eta_count += 1;
            }
            s.check(t, 0)?;
            checks += 1;
        } else if u < gamma + env {
            let rate = schedule.rate(t);
            if rng.random::<f64>() * env < rate {
                s.add(t, false);
                s.check(t, 0)?;
                checks += 1;
            }
        } else {
            let i = rng.random_range(0..s.pos.len());
            let d = opts.kernel.sample(&mut rng);
            let from = s.pos[i];
            s.jump(t, i, d);
            s.check(t, from)?;
            s.check(t, from + d)?;
            checks += 2;
        }
    }
    while next_snap < snaps.len() {
        out.push(s.counts(snaps[next_snap]));
        next_snap += 1;
    }
    s.vacancy.finish(t_max);
    Ok(UpperRun {
        snapshots: out,
        final_counts: s.counts(t_max),
        attempts,
        hat_additions: hats,
        tilde_vacant_time: s.vacancy.vacant_time(0.0, t_max)?,
        checks,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particles::{run_replicas, simulate_rwsbi, SimOptions};

    #[test]
    fn zero_gamma_keeps_everything_empty() {
        let opts = UpperOptions::new(0.5, 0.0, JumpKernel::ssrw(), 50.0).snapshots(&[10.0]);
        let run = simulate_upper_coupling(&opts, RngStream::new(1, 0)).unwrap();
        assert_eq!(
            run.final_counts.eta + run.final_counts.eta_tilde + run.final_counts.eta_hat,
            0
        );
        assert_eq!(run.tilde_vacant_time, 50.0);
    }

    #[test]
    fn domination_holds_and_eta_is_smaller() {
        let opts = UpperOptions::new(0.3, 1.0, JumpKernel::ssrw(), 200.0).snapshots(&[50.0, 100.0]);
        for r in 0..20 {
            let run = simulate_upper_coupling(&opts, RngStream::new(2, r)).unwrap();
            assert!(run.checks > 0);
            for c in run.snapshots.iter().chain([&run.final_counts]) {
                assert!(c.eta <= c.eta_tilde + c.eta_hat);
            }
        }
    }

    #[test]
    fn eta_mean_matches_direct_simulation() {
        let t = 100.0;
        let opts = UpperOptions::new(0.5, 1.0, JumpKernel::ssrw(), t);
        let coupled: Vec<f64> = run_replicas(300, RngStream::new(7, 0), |s| {
            simulate_upper_coupling(&opts, s).unwrap().final_counts.eta as f64
        });
        let direct: Vec<f64> = run_replicas(300, RngStream::new(8, 0), |s| {
            simulate_rwsbi(1.0, &JumpKernel::ssrw(), &SimOptions::new(t), s)
                .unwrap()
                .final_state
                .count_total() as f64
        });
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        };
        let se = ((var(&coupled) + var(&direct)) / 300.0).sqrt();
        assert!((mean(&coupled) - mean(&direct)).abs() < 4.0 * se);
    }
}
