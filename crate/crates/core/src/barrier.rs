//! Comparison functions for the integral equation at the origin (`alpha = 1`):
//!
//! ```text
//! f(t) = (1/2) log t - log log t + C   for t >= K,
//!        -1 (lower) or K' (upper)     for 0 <= t < K.
//! ```
//!
//! The lower function is a strict subsolution when
//! `f(t) < gamma int_0^t p_0(t - s) e^{-f(s)} ds` for every `t`, the upper one
//! a strict supersolution when the reverse holds. `K` and `K'` exist but are
//! not explicit, so [`scan_sub_supersolution`] searches for them.

use crate::heat::{HeatError, HeatParams};
use crate::quad::GaussRule;
use crate::transition::OriginReturn;

const GAUSS_NODES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Sub,
    Super,
}

impl Side {
    fn expected(self) -> &'static str {
        match self {
            Side::Sub => "strictly below",
            Side::Super => "strictly above",
        }
    }
}

/// One evaluated comparison function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub side: Side,
    pub c: f64,
    pub k: f64,
    /// Value on `[0, K)`: `-1` for the lower function, `K'` for the upper.
    pub plateau: f64,
}

impl Comparison {
    pub fn new(
        params: &HeatParams,
        side: Side,
        c: f64,
        k: f64,
        k_prime: f64,
    ) -> Result<Self, HeatError> {
        if params.alpha != 1.0 {
            return Err(HeatError::InvalidParams(format!(
                "comparison functions need alpha = 1, got {}",
                params.alpha
            )));
        }
        let threshold = params.log_constant();
        let ordered = match side {
            Side::Sub => c < threshold,
            Side::Super => c > threshold,
        };
        if !ordered {
            return Err(HeatError::ParameterOrderViolated {
                c,
                threshold,
                expected: side.expected(),
            });
        }
        if !(k > std::f64::consts::E) {
            return Err(HeatError::InvalidParams(format!(
                "K must exceed e, got {k}"
            )));
        }
        let plateau = match side {
            Side::Sub => -1.0,
            Side::Super => k_prime,
        };
        Ok(Self {
            side,
            c,
            k,
            plateau,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < self.k {
            self.plateau
        } else {
            0.5 * t.ln() - t.ln().ln() + self.c
        }
    }
}

/// `(t, f(t), gamma int_0^t p_0(t-s) e^{-f(s)} ds, strict inequality holds)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonPoint {
    pub t: f64,
    pub f: f64,
    pub integral: f64,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub comparison: Comparison,
    pub points: Vec<ComparisonPoint>,
}

impl ComparisonReport {
    pub fn all_hold(&self) -> bool {
        self.points.iter().all(|p| p.holds)
    }

    /// True if the inequality holds at every sampled `t >= K`.
    pub fn holds_beyond_k(&self) -> bool {
        self.points
            .iter()
            .filter(|p| p.t >= self.comparison.k)
            .all(|p| p.holds)
    }

    /// Smallest signed gap between the two sides; positive when all hold.
    pub fn min_margin(&self) -> f64 {
        self.points
            .iter()
            .map(|p| match self.comparison.side {
                Side::Sub => p.integral - p.f,
                Side::Super => p.f - p.integral,
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// `gamma int_0^t p_0(t - s) e^{-f(s)} ds`, split at `s = K` and on dyadic
/// panels in both `t - s` (where `p_0` varies) and `s` (where `f` varies).
pub fn comparison_integral(
    params: &HeatParams,
    origin: &OriginReturn,
    f: &Comparison,
    t: f64,
) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let rule = GaussRule::new(GAUSS_NODES);
    let mut cuts = vec![0.0, t];
    if f.k < t {
        cuts.push(f.k);
    }
    let mut u = 1.0;
    while u < t {
        cuts.push(t - u);
        cuts.push(u);
        u *= 2.0;
    }
    let mut s = 2.0 * f.k;
    while s < t {
        cuts.push(s);
        s *= 2.0;
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += rule.integrate(w[0], w[1], |s| origin.p0(t - s) * (-f.eval(s)).exp());
    }
    params.gamma * total
}

/// Evaluates the strict inequality at each grid time.
pub fn check_sub_supersolution(
    params: &HeatParams,
    c: f64,
    k: f64,
    k_prime: f64,
    side: Side,
    t_grid: &[f64],
) -> Result<ComparisonReport, HeatError> {
    let comparison = Comparison::new(params, side, c, k, k_prime)?;
    let origin = OriginReturn::new(&params.kernel);
    Ok(evaluate(params, &origin, comparison, t_grid))
}

fn evaluate(
    params: &HeatParams,
    origin: &OriginReturn,
    comparison: Comparison,
    t_grid: &[f64],
) -> ComparisonReport {
    let points = t_grid
        .iter()
        .map(|&t| {
            let f = comparison.eval(t);
            let integral = comparison_integral(params, origin, &comparison, t);
            let holds = match comparison.side {
                Side::Sub => f < integral,
                Side::Super => f > integral,
            };
            ComparisonPoint {
                t,
                f,
                integral,
                holds,
            }
        })
        .collect();
    ComparisonReport { comparison, points }
}

/// `n` log-uniform points on `[K, t_max]` plus a few points in `[0, K)`.
pub fn comparison_grid(k: f64, t_max: f64, n: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 0.99].iter().map(|q| q * k).collect();
    let (a, b) = (k.ln(), t_max.ln());
    for i in 0..n {
        let frac = if n == 1 {
            0.0
        } else {
            i as f64 / (n - 1) as f64
        };
        grid.push((a + frac * (b - a)).exp());
    }
    grid
}

/// Candidate cut-off points tried by the scan, in increasing order.
pub const K_CANDIDATES: [f64; 10] = [3.0, 4.0, 6.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0];

/// Searches `K` (and `K'` for the upper function) such that the strict
/// inequality holds on the whole [`comparison_grid`]. Returns the first
/// passing report, or the last attempt if none passes.
pub fn scan_sub_supersolution(
    params: &HeatParams,
    c: f64,
    side: Side,
    t_max: f64,
    n_points: usize,
) -> Result<ComparisonReport, HeatError> {
    let origin = OriginReturn::new(&params.kernel);
    let mut last = None;
    for &k in &K_CANDIDATES {
        if k >= t_max {
            break;
        }
        let plateaus: Vec<f64> = match side {
            Side::Sub => vec![-1.0],
            Side::Super => {
                let base = 1.0 + (params.gamma * k).ln().max(0.0);
                vec![base, base + 1.0, base + 3.0]
            }
        };
        for kp in plateaus {
            let comparison = Comparison::new(params, side, c, k, kp)?;
            let report = evaluate(
                params,
                &origin,
                comparison,
                &comparison_grid(k, t_max, n_points),
            );
            if report.all_hold() {
                return Ok(report);
            }
            last = Some(report);
        }
    }
    last.ok_or_else(|| HeatError::InvalidParams(format!("t_max {t_max} leaves no K candidate")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::JumpKernel;

    #[test]
    fn threshold_is_rejected_on_both_sides() {
        let p = HeatParams::standard();
        let thr = 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((p.log_constant() - thr).abs() < 1e-15);
        for side in [Side::Sub, Side::Super] {
            let err =
                check_sub_supersolution(&p, p.log_constant(), 8.0, 3.0, side, &[10.0]).unwrap_err();
            assert!(matches!(err, HeatError::ParameterOrderViolated { .. }));
        }
        assert!(check_sub_supersolution(&p, 2.0, 8.0, 3.0, Side::Sub, &[10.0]).is_err());
        assert!(check_sub_supersolution(&p, 0.0, 8.0, 3.0, Side::Super, &[10.0]).is_err());
    }

    #[test]
    fn requires_unit_alpha() {
        let p = HeatParams::new(1.0, 2.0, JumpKernel::ssrw()).unwrap();
        assert!(matches!(
            check_sub_supersolution(&p, 0.0, 8.0, 3.0, Side::Sub, &[10.0]),
            Err(HeatError::InvalidParams(_))
        ));
    }

    #[test]
    fn integral_of_constant_matches_direct_quadrature() {
        // f = K' on [0, t] with t < K: integral is gamma e^{-K'} int_0^t p_0
        let p = HeatParams::standard();
        let origin = OriginReturn::new(&p.kernel);
        let f = Comparison::new(&p, Side::Super, 2.0, 100.0, 1.5).unwrap();
        let got = comparison_integral(&p, &origin, &f, 50.0);
        let (direct, _) = crate::quad::adaptive(|u| origin.p0(u), 0.0, 50.0, 1e-12);
        assert!((got - (-1.5f64).exp() * direct).abs() < 1e-9);
    }

    #[test]
    fn scan_finds_both_functions() {
        let p = HeatParams::standard();
        let sub = scan_sub_supersolution(&p, 0.0, Side::Sub, 1e4, 20).unwrap();
        assert!(sub.all_hold(), "{:?}", sub.points);
        let sup = scan_sub_supersolution(&p, 2.0, Side::Super, 1e4, 20).unwrap();
        assert!(sup.all_hold(), "{:?}", sup.points);
    }
}
