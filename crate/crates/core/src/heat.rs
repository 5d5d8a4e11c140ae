//! Semilinear lattice heat equation
//!
//! ```text
//! d/dt rho_x = (L rho)_x + gamma * delta_0(x) * exp(-alpha * rho_0),   rho(0) = 0,
//! (L rho)_x  = sum_d a_d rho_{x-d} - rho_x,
//! ```
//!
//! solved on the truncated lattice `|x| <= radius` by classical RK4 with
//! step-doubling (Richardson) error control. Mass that jumps out of the box
//! is lost; the solver integrates `R(t) = gamma int_0^t exp(-alpha rho_0)` as
//! an extra component, so `R(t) - sum_x rho_x(t)` is exactly the mass that
//! leaked through the boundary (RK methods preserve linear invariants).

use std::f64::consts::PI;

use libm::erfc;
use thiserror::Error;

use crate::kernel::JumpKernel;
use crate::quad;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeatError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("lattice radius {radius} too small: boundary leak {leak:.3e} exceeds {allowed:.3e}")]
    RadiusTooSmall {
        radius: usize,
        leak: f64,
        allowed: f64,
    },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("time {0} is not on the solution grid")]
    NotInGrid(f64),
    #[error("constant C = {c} must be {expected} log(sqrt(2 pi) gamma / sigma) = {threshold}")]
    ParameterOrderViolated {
        c: f64,
        threshold: f64,
        expected: &'static str,
    },
}

/// Immigration rate `gamma`, nonlinearity exponent `alpha` and the walk kernel.
/// `sigma` is always taken from the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatParams {
    pub gamma: f64,
    pub alpha: f64,
    pub kernel: JumpKernel,
}

impl HeatParams {
    pub fn new(gamma: f64, alpha: f64, kernel: JumpKernel) -> Result<Self, HeatError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(HeatError::InvalidParams(format!(
                "gamma must be > 0, got {gamma}"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(HeatError::InvalidParams(format!(
                "alpha must be > 0, got {alpha}"
            )));
        }
        Ok(Self {
            gamma,
            alpha,
            kernel,
        })
    }

    /// `gamma = alpha = 1` with the simple symmetric walk.
    pub fn standard() -> Self {
        Self::new(1.0, 1.0, JumpKernel::ssrw()).expect("valid")
    }

    pub fn sigma(&self) -> f64 {
        self.kernel.sigma()
    }

    /// `log(sqrt(2 pi) gamma alpha / sigma)`, the constant in the local growth.
    pub fn log_constant(&self) -> f64 {
        ((2.0 * PI).sqrt() * self.gamma * self.alpha / self.sigma()).ln()
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub t_max: f64,
    /// Lattice truncation; `None` picks `ceil(8 sigma sqrt(t_max))` plus a few jumps.
    pub radius: Option<usize>,
    /// Local error per unit time accepted by the step-doubling controller.
    pub tol: f64,
    /// Times at which the full profile is stored; the stepper lands on them.
    pub profile_times: Vec<f64>,
    /// Upper bound on the step (stability of the jump generator).
    pub h_max: f64,
    pub h_init: f64,
}

impl SolveOptions {
    pub fn new(t_max: f64, tol: f64) -> Self {
        Self {
            t_max,
            radius: None,
            tol,
            profile_times: Vec::new(),
            h_max: 0.5,
            h_init: 1e-3,
        }
    }

    pub fn radius(mut self, radius: usize) -> Self {
        self.radius = Some(radius);
        self
    }

    pub fn profile_times(mut self, times: &[f64]) -> Self {
        self.profile_times = times.to_vec();
        self
    }

    pub fn h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }
}

pub fn default_radius(kernel: &JumpKernel, t_max: f64) -> usize {
    (8.0 * kernel.sigma() * t_max.sqrt()).ceil() as usize + 4 * kernel.max_jump() as usize
}

/// Time-stepped solution. `rho_0`, its derivative and both mass forms are
/// kept at every accepted step; full profiles only at the requested times.
#[derive(Debug, Clone)]
pub struct RhoSolution {
    params: HeatParams,
    radius: usize,
    tol: f64,
    times: Vec<f64>,
    rho0: Vec<f64>,
    drho0: Vec<f64>,
    mass_sum: Vec<f64>,
    mass_integral: Vec<f64>,
    profiles: Vec<(f64, Vec<f64>)>,
    leak_estimate: f64,
    rejected_steps: usize,
}

/// `sum_x rho_x(t)` against `gamma int_0^t exp(-alpha rho_0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassReport {
    pub t: f64,
    pub sum: f64,
    pub integral: f64,
    pub discrepancy: f64,
}

struct Rhs<'a> {
    offsets: &'a [(i64, f64)],
    gamma: f64,
    alpha: f64,
    origin: usize,
}

impl Rhs<'_> {
    /// Writes `L rho + source` into `out` and returns the source term.
    fn eval(&self, rho: &[f64], out: &mut [f64]) -> f64 {
        let n = rho.len();
        for (o, &r) in out.iter_mut().zip(rho) {
            *o = -r;
        }
        for &(d, p) in self.offsets {
            let s = d.unsigned_abs() as usize;
            if s >= n {
                continue;
            }
            if d >= 0 {
                for (o, &r) in out[s..].iter_mut().zip(&rho[..n - s]) {
                    *o += p * r;
                }
            } else {
                for (o, &r) in out[..n - s].iter_mut().zip(&rho[s..]) {
                    *o += p * r;
                }
            }
        }
        let src = self.gamma * (-self.alpha * rho[self.origin]).exp();
        out[self.origin] += src;
        src
    }
}

struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    /// One classical RK4 step of size `h`; `(rho, mass)` is updated in place.
    fn step(&mut self, rhs: &Rhs, rho: &mut [f64], mass: &mut f64, h: f64) {
        let s1 = rhs.eval(rho, &mut self.k1);
        for ((t, &y), &k) in self.tmp.iter_mut().zip(rho.iter()).zip(&self.k1) {
            *t = y + 0.5 * h * k;
        }
        let s2 = rhs.eval(&self.tmp, &mut self.k2);
        for ((t, &y), &k) in self.tmp.iter_mut().zip(rho.iter()).zip(&self.k2) {
            *t = y + 0.5 * h * k;
        }
        let s3 = rhs.eval(&self.tmp, &mut self.k3);
        for ((t, &y), &k) in self.tmp.iter_mut().zip(rho.iter()).zip(&self.k3) {
            *t = y + h * k;
        }
        let s4 = rhs.eval(&self.tmp, &mut self.k4);
        let c = h / 6.0;
        for i in 0..rho.len() {
            rho[i] += c * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        *mass += c * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
    }
}

/// Solves with default options (auto radius, final profile only).
pub fn solve_rho(
    params: &HeatParams,
    t_max: f64,
    radius: Option<usize>,
    tol: f64,
) -> Result<RhoSolution, HeatError> {
    let mut opts = SolveOptions::new(t_max, tol);
    opts.radius = radius;
    solve_rho_with(params, &opts)
}

pub fn solve_rho_with(params: &HeatParams, opts: &SolveOptions) -> Result<RhoSolution, HeatError> {
    if !(opts.t_max >= 0.0 && opts.t_max.is_finite()) {
        return Err(HeatError::InvalidParams(format!(
            "t_max must be >= 0, got {}",
            opts.t_max
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(HeatError::InvalidParams("tol must be > 0".into()));
    }
    let radius = opts
        .radius
        .unwrap_or_else(|| default_radius(&params.kernel, opts.t_max));
    let n = 2 * radius + 1;
    let rhs = Rhs {
        offsets: params.kernel.offsets(),
        gamma: params.gamma,
        alpha: params.alpha,
        origin: radius,
    };

    let mut stops: Vec<f64> = opts
        .profile_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < opts.t_max)
        .collect();
    stops.push(opts.t_max);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut rho = vec![0.0; n];
    let mut mass = 0.0;
    let mut deriv = vec![0.0; n];
    let mut rk = Rk4::new(n);
    let mut coarse = vec![0.0; n];
    let mut fine = vec![0.0; n];

    let src0 = rhs.eval(&rho, &mut deriv);
    let _ = src0;
    let mut sol = RhoSolution {
        params: params.clone(),
        radius,
        tol: opts.tol,
        times: vec![0.0],
        rho0: vec![0.0],
        drho0: vec![deriv[radius]],
        mass_sum: vec![0.0],
        mass_integral: vec![0.0],
        profiles: Vec::new(),
        leak_estimate: 0.0,
        rejected_steps: 0,
    };
    if opts.profile_times.contains(&0.0) || opts.t_max == 0.0 {
        sol.profiles.push((0.0, rho.clone()));
    }
    if opts.t_max == 0.0 {
        return Ok(sol);
    }

    let mut t = 0.0;
    let mut h = opts.h_init.min(opts.h_max);
    let mut next_stop = 0;
    while next_stop < stops.len() {
        let target = stops[next_stop];
        let remaining = target - t;
        let (h_try, lands) = if h >= remaining * (1.0 - 1e-12) {
            (remaining, true)
        } else {
            (h, false)
        };

        coarse.copy_from_slice(&rho);
        let mut m_coarse = mass;
        rk.step(&rhs, &mut coarse, &mut m_coarse, h_try);
        fine.copy_from_slice(&rho);
        let mut m_fine = mass;
        rk.step(&rhs, &mut fine, &mut m_fine, 0.5 * h_try);
        rk.step(&rhs, &mut fine, &mut m_fine, 0.5 * h_try);

        let mut err = 0.0f64;
        for (a, b) in coarse.iter().zip(&fine) {
            err = err.max((b - a).abs());
        }
        err = err.max((m_fine - m_coarse).abs()) / 15.0;

        if err <= opts.tol * h_try {
            for (f, c) in fine.iter_mut().zip(&coarse) {
                *f += (*f - c) / 15.0;
            }
            m_fine += (m_fine - m_coarse) / 15.0;
            std::mem::swap(&mut rho, &mut fine);
            mass = m_fine;
            t = if lands { target } else { t + h_try };

            rhs.eval(&rho, &mut deriv);
            sol.times.push(t);
            sol.rho0.push(rho[radius]);
            sol.drho0.push(deriv[radius]);
            sol.mass_sum.push(rho.iter().sum());
            sol.mass_integral.push(mass);
            if lands {
                if next_stop < stops.len() - 1
                    || opts.profile_times.contains(&target)
                    || target == opts.t_max
                {
                    sol.profiles.push((t, rho.clone()));
                }
                next_stop += 1;
            }
            let grow = if err == 0.0 {
                2.0
            } else {
                (0.9 * (opts.tol * h_try / err).powf(0.2)).clamp(0.2, 2.0)
            };
            if !lands || h_try >= h {
                h = (h_try * grow).min(opts.h_max);
            }
        } else {
            sol.rejected_steps += 1;
            h = h_try * (0.9 * (opts.tol * h_try / err).powf(0.2)).clamp(0.1, 0.5);
            if h < 1e-12 {
                return Err(HeatError::StepFailure { t, h });
            }
        }
    }

    let last = sol.times.len() - 1;
    let discrepancy = (sol.mass_integral[last] - sol.mass_sum[last]).abs();
    let sigma = params.sigma();
    let z = radius as f64 / (sigma * opts.t_max.sqrt());
    let tail = sol.mass_integral[last] * erfc(z / std::f64::consts::SQRT_2);
    sol.leak_estimate = discrepancy + tail;
    let allowed = opts.tol * sol.mass_integral[last].max(1.0);
    if sol.leak_estimate > allowed {
        return Err(HeatError::RadiusTooSmall {
            radius,
            leak: sol.leak_estimate,
            allowed,
        });
    }
    Ok(sol)
}

impl RhoSolution {
    pub fn params(&self) -> &HeatParams {
        &self.params
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().expect("non-empty grid")
    }

    /// Accepted step times, starting at 0.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `rho_0` at each grid time.
    pub fn rho0_values(&self) -> &[f64] {
        &self.rho0
    }

    pub fn leak_estimate(&self) -> f64 {
        self.leak_estimate
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected_steps
    }

    pub fn dt_policy(&self) -> String {
        format!(
            "RK4 with step doubling, local error <= {:e} per unit time, h <= 0.5",
            self.tol
        )
    }

    /// Index of `t` in the step grid, allowing for rounding.
    pub fn grid_index(&self, t: f64) -> Option<usize> {
        let i = self.times.partition_point(|&s| s < t - 1e-9 * t.max(1.0));
        (i < self.times.len() && (self.times[i] - t).abs() <= 1e-9 * t.max(1.0)).then_some(i)
    }

    /// Interval index `i` with `times[i] <= t <= times[i + 1]`.
    fn bracket(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s <= t);
        i.saturating_sub(1).min(self.times.len().saturating_sub(2))
    }

    /// `rho_0(t)` by cubic Hermite interpolation of the step values.
    pub fn rho0_at(&self, t: f64) -> f64 {
        if self.times.len() == 1 || t <= 0.0 {
            return 0.0;
        }
        let t = t.min(self.t_max());
        let i = self.bracket(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1) = (self.rho0[i], self.rho0[i + 1]);
        let (d0, d1) = (self.drho0[i] * h, self.drho0[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1
    }

    /// Stored profile at `t`, indexed by `x + radius`.
    pub fn profile(&self, t: f64) -> Option<&[f64]> {
        self.profiles
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-9 * t.max(1.0))
            .map(|(_, v)| v.as_slice())
    }

    pub fn profile_times(&self) -> Vec<f64> {
        self.profiles.iter().map(|(t, _)| *t).collect()
    }

    /// `rho_x(t)` for a stored profile time.
    pub fn rho(&self, x: i64, t: f64) -> Option<f64> {
        let p = self.profile(t)?;
        let i = x + self.radius as i64;
        Some(if i < 0 || i as usize >= p.len() {
            0.0
        } else {
            p[i as usize]
        })
    }

    /// Both forms of the total mass at a grid time.
    pub fn total_mass(&self, t: f64) -> Result<MassReport, HeatError> {
        let i = self.grid_index(t).ok_or(HeatError::NotInGrid(t))?;
        Ok(MassReport {
            t: self.times[i],
            sum: self.mass_sum[i],
            integral: self.mass_integral[i],
            discrepancy: (self.mass_sum[i] - self.mass_integral[i]).abs(),
        })
    }

    /// Largest mass-identity discrepancy over the whole grid.
    pub fn max_mass_discrepancy(&self) -> f64 {
        self.mass_sum
            .iter()
            .zip(&self.mass_integral)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `gamma int_0^t exp(-alpha rho_0)` at any `t` in range (interpolated
    /// between steps by Gauss quadrature of the Hermite interpolant).
    pub fn mass_integral_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let t = t.min(self.t_max());
        let i = self.bracket(t);
        let rule = quad::GaussRule::new(6);
        let g = |s: f64| self.params.gamma * (-self.params.alpha * self.rho0_at(s)).exp();
        self.mass_integral[i] + rule.integrate(self.times[i], t, g)
    }

    /// Step intervals `(t_i, t_{i+1})` of the grid.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.windows(2).map(|w| (w[0], w[1]))
    }
}

/// `(1/alpha) [ log(t)/2 - log log t + log(sqrt(2 pi) gamma alpha / sigma) ]`.
pub fn asymptotic_rho0(t: f64, params: &HeatParams) -> Result<f64, HeatError> {
    if !(t > std::f64::consts::E) {
        return Err(HeatError::DomainError(format!(
            "asymptotic rho_0 needs t > e, got {t}"
        )));
    }
    Ok((0.5 * t.ln() - t.ln().ln() + params.log_constant()) / params.alpha)
}

/// `(sigma / alpha) sqrt(2/pi) sqrt(t) log t`.
pub fn asymptotic_r(t: f64, params: &HeatParams) -> Result<f64, HeatError> {
    if !(t > 1.0) {
        return Err(HeatError::DomainError(format!(
            "asymptotic R needs t > 1, got {t}"
        )));
    }
    Ok(params.sigma() / params.alpha * (2.0 / PI).sqrt() * t.sqrt() * t.ln())
}

/// Limiting profile `1 - Phi(|y|)`.
pub fn tilde_rho(y: f64) -> f64 {
    0.5 * erfc(y.abs() / std::f64::consts::SQRT_2)
}

/// The profile as `(1/2pi) int_0^1 (s(1-s))^{-1/2} exp(-y^2/2s) ds`.
///
/// Evaluated after the substitution `s = sin^2(theta)`, which removes both
/// endpoint singularities: `(1/pi) int_0^{pi/2} exp(-y^2 / (2 sin^2 theta))`.
pub fn tilde_rho_integral(y: f64) -> f64 {
    let y2 = y * y;
    let f = |th: f64| {
        let s = th.sin();
        if s == 0.0 {
            if y2 == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (-y2 / (2.0 * s * s)).exp()
        }
    };
    quad::adaptive(f, 0.0, PI / 2.0, 1e-14).0 / PI
}

#[derive(Debug, Clone)]
pub struct ProfileSample {
    pub t: f64,
    /// `(y, rho_{[sigma sqrt(t) y]}(t) / log t)`
    pub points: Vec<(f64, f64)>,
    pub sup_distance: f64,
}

/// Samples `rho_{[sigma sqrt(t) y]}(t) / log t` on `y_grid` (integer part
/// taken towards zero) and its sup-distance to [`tilde_rho`].
pub fn rescaled_profile(
    sol: &RhoSolution,
    t: f64,
    y_grid: &[f64],
) -> Result<ProfileSample, HeatError> {
    if !(t > std::f64::consts::E) {
        return Err(HeatError::DomainError(format!(
            "rescaled profile needs t > e, got {t}"
        )));
    }
    let profile = sol.profile(t).ok_or(HeatError::NotInGrid(t))?;
    let scale = sol.params.sigma() * t.sqrt();
    let log_t = t.ln();
    let mut points = Vec::with_capacity(y_grid.len());
    let mut sup: f64 = 0.0;
    for &y in y_grid {
        let x = (scale * y).trunc();
        if x.abs() > sol.radius as f64 {
            return Err(HeatError::RadiusTooSmall {
                radius: sol.radius,
                leak: f64::INFINITY,
                allowed: 0.0,
            });
        }
        let v = profile[(x as i64 + sol.radius as i64) as usize] / log_t;
        sup = sup.max((v - tilde_rho(y)).abs());
        points.push((y, v));
    }
    Ok(ProfileSample {
        t,
        points,
        sup_distance: sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_horizon_gives_zero_solution() {
        let sol = solve_rho(&HeatParams::standard(), 0.0, None, 1e-8).unwrap();
        assert_eq!(sol.times(), &[0.0]);
        assert_eq!(sol.rho0_values(), &[0.0]);
        assert!(sol.profile(0.0).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(sol.total_mass(0.0).unwrap().sum, 0.0);
    }

    #[test]
    fn initial_slope_is_gamma() {
        // rho_0(t) = gamma t - (1 + gamma alpha) gamma t^2 / 2 + O(t^3)
        let params = HeatParams::new(1.0, 1.0, JumpKernel::ssrw()).unwrap();
        let sol = solve_rho(&params, 0.01, None, 1e-12).unwrap();
        let t = 0.01;
        let series = t - t * t;
        assert!((sol.rho0_at(t) - series).abs() < 1e-6, "{}", sol.rho0_at(t));
        assert!((sol.rho0_at(1e-3) / 1e-3 - 1.0).abs() < 2e-3);
    }

    #[test]
    fn rho_is_nonnegative_and_rho0_monotone() {
        let sol = solve_rho_with(
            &HeatParams::standard(),
            &SolveOptions::new(200.0, 1e-9).profile_times(&[50.0]),
        )
        .unwrap();
        assert!(sol.rho0_values().windows(2).all(|w| w[1] >= w[0]));
        for t in [50.0, 200.0] {
            assert!(sol.profile(t).unwrap().iter().all(|&v| v >= -1e-14));
        }
    }

    #[test]
    fn mass_identity_holds_on_grid() {
        let sol = solve_rho(&HeatParams::standard(), 300.0, None, 1e-9).unwrap();
        assert!(sol.max_mass_discrepancy() < 1e-9);
        let rep = sol.total_mass(300.0).unwrap();
        assert!(rep.discrepancy < 1e-9);
        assert!(matches!(
            sol.total_mass(123.456),
            Err(HeatError::NotInGrid(_))
        ));
    }

    #[test]
    fn small_radius_is_reported() {
        let err = solve_rho(&HeatParams::standard(), 200.0, Some(10), 1e-8).unwrap_err();
        assert!(matches!(err, HeatError::RadiusTooSmall { radius: 10, .. }));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(HeatParams::new(0.0, 1.0, JumpKernel::ssrw()).is_err());
        assert!(HeatParams::new(1.0, -1.0, JumpKernel::ssrw()).is_err());
    }

    #[test]
    fn asymptotic_rho0_reference_value() {
        // 4/2 - log 4 + log sqrt(2 pi)
        let v = asymptotic_rho0(4f64.exp(), &HeatParams::standard()).unwrap();
        let expected = 2.0 - 4f64.ln() + 0.5 * (2.0 * PI).ln();
        assert!((v - expected).abs() < 1e-14);
        assert!((v - 1.532_645).abs() < 1e-6);
        assert!(asymptotic_rho0(2.0, &HeatParams::standard()).is_err());
    }

    #[test]
    fn asymptotic_rho0_gamma_and_alpha_structure() {
        let k = JumpKernel::ssrw();
        let t = 1234.5;
        let base = HeatParams::new(0.7, 1.3, k.clone()).unwrap();
        let doubled = HeatParams::new(1.4, 1.3, k.clone()).unwrap();
        let shift = asymptotic_rho0(t, &doubled).unwrap() - asymptotic_rho0(t, &base).unwrap();
        assert!((shift - 2f64.ln() / 1.3).abs() < 1e-13);
        let unit = HeatParams::new(0.7 * 1.3, 1.0, k).unwrap();
        let lhs = asymptotic_rho0(t, &base).unwrap();
        let rhs = asymptotic_rho0(t, &unit).unwrap() / 1.3;
        assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn asymptotic_r_structure() {
        let p = HeatParams::standard();
        let v = asymptotic_r(1e4, &p).unwrap();
        assert!((v - (2.0 / PI).sqrt() * 100.0 * 1e4f64.ln()).abs() < 1e-10);
        assert!((v - 734.8).abs() < 0.1);
        let t = 1e6;
        let ratio = asymptotic_r(4.0 * t, &p).unwrap() / asymptotic_r(t, &p).unwrap();
        assert!((ratio - 2.0 * (4.0 * t).ln() / t.ln()).abs() < 1e-12);
        let g = HeatParams::new(5.0, 1.0, JumpKernel::ssrw()).unwrap();
        assert_eq!(asymptotic_r(t, &g).unwrap(), asymptotic_r(t, &p).unwrap());
        assert!(asymptotic_r(1.0, &p).is_err());
    }

    #[test]
    fn tilde_rho_values() {
        assert_eq!(tilde_rho(0.0), 0.5);
        assert!(
            (tilde_rho(1.0) - 0.158_655_253_931_457_05).abs() < 1e-14,
            "{:.17}",
            tilde_rho(1.0)
        );
        assert_eq!(tilde_rho(-1.3), tilde_rho(1.3));
    }

    #[test]
    fn tilde_rho_integral_form_agrees() {
        for y in [0.0, 0.5, 1.0, 2.0, 3.0] {
            assert!((tilde_rho_integral(y) - tilde_rho(y)).abs() < 1e-8, "y={y}");
        }
    }

    #[test]
    fn profile_at_origin_matches_rho0() {
        let sol = solve_rho_with(
            &HeatParams::standard(),
            &SolveOptions::new(400.0, 1e-8).profile_times(&[100.0]),
        )
        .unwrap();
        let ys = [-1.5, -0.5, 0.0, 0.5, 1.5];
        let prof = rescaled_profile(&sol, 100.0, &ys).unwrap();
        let at0 = prof.points[2].1;
        assert!((at0 - sol.rho(0, 100.0).unwrap() / 100f64.ln()).abs() < 1e-15);
        for i in 0..2 {
            assert!((prof.points[i].1 - prof.points[4 - i].1).abs() < 1e-12);
        }
        assert!(matches!(
            rescaled_profile(&sol, 100.0, &[1e3]),
            Err(HeatError::RadiusTooSmall { .. })
        ));
    }
}
