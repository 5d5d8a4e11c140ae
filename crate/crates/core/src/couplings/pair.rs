//! Two-walk coupling: `X` starts at `x0`, `Y` at the origin, both driven by
//! the same symmetric kernel.
//!
//! While mirrored, one clock drives both walks and `Y` takes the opposite
//! jump, so `X + Y` stays fixed. Mirroring ends when the walks meet (merge:
//! identical jumps from then on) or cross (independent from then on). For
//! nearest-neighbour kernels an odd initial gap first waits for the parity to
//! change. The coupling fails if `X` visits the origin before the walks meet.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::landing::LandingLaw;
use super::CouplingError;
use crate::kernel::JumpKernel;
use crate::particles::run_replicas;
use crate::rng::{exp_time, RngStream, SimRng};

pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairPhase {
    /// Nearest-neighbour kernel, odd gap: independent until the gap is even.
    Wait,
    Mirror,
    Independent,
    Merged,
    Failed,
}

impl PairPhase {
    pub fn is_open(self) -> bool {
        matches!(
            self,
            PairPhase::Wait | PairPhase::Mirror | PairPhase::Independent
        )
    }

    pub(crate) fn start(nearest: bool, x: i64, y: i64) -> Self {
        if x == y {
            PairPhase::Merged
        } else if nearest && (x - y).rem_euclid(2) == 1 {
            PairPhase::Wait
        } else {
            PairPhase::Mirror
        }
    }

    /// Phase after a move that changed the gap from `prev_gap` to `x - y`.
    pub(crate) fn advance(self, x: i64, y: i64, prev_gap: i64, x_moved: bool) -> Self {
        if x == y {
            return PairPhase::Merged;
        }
        if x_moved && x == 0 {
            return PairPhase::Failed;
        }
        match self {
            PairPhase::Wait if (x - y).rem_euclid(2) == 0 => PairPhase::Mirror,
            PairPhase::Mirror if (x - y).signum() != prev_gap.signum() => PairPhase::Independent,
            p => p,
        }
    }
}

pub(crate) fn is_nearest_neighbour(kernel: &JumpKernel) -> bool {
    kernel.max_jump() == 1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub t: f64,
    pub x: i64,
    pub y: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOutcome {
    pub x0: i64,
    pub success: bool,
    /// Meeting time, `INFINITY` on failure.
    pub coupling_time: f64,
    /// First visit of `X` to the origin during the run, `INFINITY` if the
    /// run ended (at the meeting, plus any requested extension) before one.
    pub hit_time_origin: f64,
    pub paths: Option<Vec<PathPoint>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupleOptions {
    pub record_paths: bool,
    /// Keep running the merged walks this long after they meet.
    pub extend_after: f64,
    pub max_events: u64,
}

impl Default for CoupleOptions {
    fn default() -> Self {
        Self {
            record_paths: false,
            extend_after: 0.0,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }
}

fn check_args(x0: i64, kernel: &JumpKernel) -> Result<(), CouplingError> {
    if !kernel.is_symmetric() {
        return Err(CouplingError::KernelNotSymmetric);
    }
    if x0 == 0 {
        return Err(CouplingError::InvalidParams("x0 must be nonzero".into()));
    }
    Ok(())
}

pub fn reflection_couple(
    x0: i64,
    kernel: &JumpKernel,
    stream: RngStream,
) -> Result<CouplingOutcome, CouplingError> {
    reflection_couple_with(x0, kernel, stream, &CoupleOptions::default())
}

/// Event-by-event simulation in continuous time.
pub fn reflection_couple_with(
    x0: i64,
    kernel: &JumpKernel,
    stream: RngStream,
    opts: &CoupleOptions,
) -> Result<CouplingOutcome, CouplingError> {
    check_args(x0, kernel)?;
    let mut rng = stream.rng();
    let nearest = is_nearest_neighbour(kernel);
    let (mut x, mut y, mut t) = (x0, 0i64, 0.0);
    let mut phase = PairPhase::start(nearest, x, y);
    let mut path = opts.record_paths.then(|| vec![PathPoint { t, x, y }]);
    let mut hit = f64::INFINITY;
    let mut events = 0u64;
    while phase.is_open() {
        events += 1;
        if events > opts.max_events {
            return Err(CouplingError::Unresolved {
                events: opts.max_events,
            });
        }
        let gap = x - y;
        let x_moved;
        if phase == PairPhase::Mirror {
            t += exp_time(&mut rng, 1.0);
            let d = kernel.sample(&mut rng);
            x += d;
            y -= d;
            x_moved = true;
        } else {
            t += exp_time(&mut rng, 2.0);
            let d = kernel.sample(&mut rng);
            x_moved = rng.random::<bool>();
            if x_moved {
                x += d;
            } else {
                y += d;
            }
        }
        if x_moved && x == 0 && hit.is_infinite() {
            hit = t;
        }
        phase = phase.advance(x, y, gap, x_moved);
        if let Some(p) = &mut path {
            p.push(PathPoint { t, x, y });
        }
    }
    let success = phase == PairPhase::Merged;
    let coupling_time = if success { t } else { f64::INFINITY };
    if success && opts.extend_after > 0.0 {
        let end = t + opts.extend_after;
        loop {
            t += exp_time(&mut rng, 1.0);
            if t > end {
                break;
            }
            let d = kernel.sample(&mut rng);
            x += d;
            y += d;
            if x == 0 && hit.is_infinite() {
                hit = t;
            }
            if let Some(p) = &mut path {
                p.push(PathPoint { t, x, y });
            }
        }
    }
    Ok(CouplingOutcome {
        x0,
        success,
        coupling_time,
        hit_time_origin: hit,
        paths: path,
    })
}

/// Runs an open pair to its outcome, ignoring time. Mirrored stretches are
/// skipped with one draw from the landing law when one is available: while
/// `X` stays strictly above the midpoint `(X + Y) / 2` neither a meeting, a
/// crossing nor a visit of `X` to the origin can happen.
pub(crate) fn resolve_outcome(
    mut x: i64,
    mut y: i64,
    mut phase: PairPhase,
    kernel: &JumpKernel,
    law: Option<&LandingLaw>,
    rng: &mut SimRng,
    max_events: u64,
) -> Result<(PairPhase, i64, i64), CouplingError> {
    let mut events = 0u64;
    while phase.is_open() {
        events += 1;
        if events > max_events {
            return Err(CouplingError::Unresolved { events: max_events });
        }
        let gap = x - y;
        if phase == PairPhase::Mirror {
            let sign = gap.signum();
            let (hx, hy) = (sign * x, sign * y);
            let mid = (hx + hy).div_euclid(2);
            if let (Some(law), true) = (law, mid >= 0) {
                let lx = mid + law.sample(hx - mid, rng);
                let ly = hx + hy - lx;
                x = sign * lx;
                y = sign * ly;
            } else {
                let d = kernel.sample(rng);
                x += d;
                y -= d;
            }
            phase = phase.advance(x, y, gap, true);
        } else {
            let d = kernel.sample(rng);
            let x_moved = rng.random::<bool>();
            if x_moved {
                x += d;
            } else {
                y += d;
            }
            phase = phase.advance(x, y, gap, x_moved);
        }
    }
    Ok((phase, x, y))
}

/// Moves a lone walk from `x` until it sits exactly on the origin, crossing
/// over in single landing-law draws. `false` if the event budget runs out.
fn run_to_origin(
    mut x: i64,
    kernel: &JumpKernel,
    law: Option<&LandingLaw>,
    rng: &mut SimRng,
    max_events: u64,
) -> bool {
    for _ in 0..max_events {
        if x == 0 {
            return true;
        }
        match law {
            Some(law) => x = x.signum() * law.sample(x.abs(), rng),
            None => x += kernel.sample(rng),
        }
    }
    x == 0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessEstimate {
    pub x0: i64,
    pub replicas: usize,
    pub successes: usize,
    pub p: f64,
    pub std_error: f64,
    /// Covariance between the success indicator and the unit-time increment
    /// of `X` right after its first visit to the origin.
    pub increment_cov: f64,
    pub increment_cov_se: f64,
    /// Replicas whose walk reached the origin within budget.
    pub increments_used: usize,
}

impl SuccessEstimate {
    /// Post-visit increments uncorrelated with success within 4 standard errors.
    pub fn increments_uncorrelated(&self) -> bool {
        self.increment_cov.abs() <= 4.0 * self.increment_cov_se
    }
}

/// Monte Carlo estimate of the success probability from `x0`.
///
/// Only outcomes are needed here, so mirrored stretches are skipped exactly
/// (see [`LandingLaw`]); the event-level simulation has heavy-tailed cost.
pub fn coupling_success_prob(
    x0: i64,
    kernel: &JumpKernel,
    replicas: usize,
    stream: RngStream,
) -> Result<SuccessEstimate, CouplingError> {
    check_args(x0, kernel)?;
    if replicas == 0 {
        return Err(CouplingError::InvalidParams(
            "replicas must be positive".into(),
        ));
    }
    let law = LandingLaw::new(kernel);
    let nearest = is_nearest_neighbour(kernel);
    let budget = DEFAULT_MAX_EVENTS;
    let runs = run_replicas(
        replicas,
        stream,
        |s| -> Result<(bool, Option<f64>), CouplingError> {
            let mut rng = s.rng();
            let phase = PairPhase::start(nearest, x0, 0);
            let (end, x, _) =
                resolve_outcome(x0, 0, phase, kernel, law.as_ref(), &mut rng, budget)?;
            let success = end == PairPhase::Merged;
            let increment =
                run_to_origin(x, kernel, law.as_ref(), &mut rng, budget / 1000).then(|| {
                    let jumps = Poisson::new(1.0).expect("rate 1").sample(&mut rng) as u64;
                    (0..jumps).map(|_| kernel.sample(&mut rng)).sum::<i64>() as f64
                });
            Ok((success, increment))
        },
    );
    let runs: Vec<(bool, Option<f64>)> = runs.into_iter().collect::<Result<_, _>>()?;
    let n = runs.len() as f64;
    let successes = runs.iter().filter(|r| r.0).count();
    let p = successes as f64 / n;
    let std_error = (p * (1.0 - p) / n).sqrt();

    let pairs: Vec<(f64, f64)> = runs
        .iter()
        .filter_map(|&(s, inc)| inc.map(|d| (if s { 1.0 } else { 0.0 }, d)))
        .collect();
    let m = pairs.len() as f64;
    let (mut cov, mut se) = (0.0, 0.0);
    if pairs.len() > 1 {
        let mi = pairs.iter().map(|p| p.0).sum::<f64>() / m;
        let md = pairs.iter().map(|p| p.1).sum::<f64>() / m;
        let prods: Vec<f64> = pairs.iter().map(|&(i, d)| (i - mi) * (d - md)).collect();
        cov = prods.iter().sum::<f64>() / m;
        let var = prods.iter().map(|v| (v - cov).powi(2)).sum::<f64>() / (m - 1.0);
        se = (var / m).sqrt();
    }
    Ok(SuccessEstimate {
        x0,
        replicas,
        successes,
        p,
        std_error,
        increment_cov: cov,
        increment_cov_se: se,
        increments_used: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_step() -> JumpKernel {
        JumpKernel::new(&[(-2, 0.25), (-1, 0.25), (1, 0.25), (2, 0.25)]).unwrap()
    }

    #[test]
    fn rejects_bad_arguments() {
        let skewed = JumpKernel::new(&[(-2, 1.0 / 3.0), (1, 2.0 / 3.0)]).unwrap();
        assert_eq!(
            reflection_couple(3, &skewed, RngStream::new(1, 0)),
            Err(CouplingError::KernelNotSymmetric)
        );
        assert!(matches!(
            reflection_couple(0, &JumpKernel::ssrw(), RngStream::new(1, 0)),
            Err(CouplingError::InvalidParams(_))
        ));
    }

    #[test]
    fn ssrw_even_and_odd_starts_always_merge_before_origin() {
        for x0 in [10, 7, -3, 1, -1] {
            for r in 0..200 {
                let opts = CoupleOptions {
                    record_paths: true,
                    extend_after: 5.0,
                    ..Default::default()
                };
                let out =
                    reflection_couple_with(x0, &JumpKernel::ssrw(), RngStream::new(3, r), &opts)
                        .unwrap();
                assert!(out.success, "x0 {x0} replica {r}");
                assert!(out.coupling_time <= out.hit_time_origin);
                let path = out.paths.unwrap();
                for p in path.iter().filter(|p| p.t < out.coupling_time) {
                    assert_ne!(p.x, 0, "X visited the origin before meeting");
                }
                for p in path.iter().filter(|p| p.t >= out.coupling_time) {
                    assert_eq!(p.x, p.y);
                }
            }
        }
    }

    #[test]
    fn failure_means_infinite_coupling_time() {
        let mut failures = 0;
        for r in 0..400 {
            let out = reflection_couple(1, &two_step(), RngStream::new(5, r)).unwrap();
            if !out.success {
                failures += 1;
                assert_eq!(out.coupling_time, f64::INFINITY);
                assert!(out.hit_time_origin.is_finite());
            } else {
                assert!(out.coupling_time <= out.hit_time_origin);
            }
        }
        assert!(failures > 0);
    }

    #[test]
    fn skipped_and_event_level_outcomes_agree() {
        let k = two_step();
        let fast = coupling_success_prob(4, &k, 4000, RngStream::new(11, 0)).unwrap();
        let mut wins = 0;
        let n = 4000;
        for r in 0..n {
            if reflection_couple(4, &k, RngStream::new(12, r))
                .unwrap()
                .success
            {
                wins += 1;
            }
        }
        let slow = wins as f64 / n as f64;
        let se = (fast.std_error.powi(2) + slow * (1.0 - slow) / n as f64).sqrt();
        assert!(
            (fast.p - slow).abs() < 4.0 * se,
            "fast {} slow {slow}",
            fast.p
        );
    }

    #[test]
    fn ssrw_estimate_is_exactly_one() {
        let est = coupling_success_prob(9, &JumpKernel::ssrw(), 500, RngStream::new(2, 0)).unwrap();
        assert_eq!(est.p, 1.0);
        assert!(est.increments_uncorrelated());
    }

    #[test]
    fn general_kernel_estimates_are_probabilities() {
        let est = coupling_success_prob(1, &two_step(), 2000, RngStream::new(4, 0)).unwrap();
        assert!(est.p > 0.0 && est.p <= 1.0);
        assert!(est.increments_uncorrelated(), "{est:?}");
    }
}
