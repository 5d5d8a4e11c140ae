//! Continuous-time transition probabilities `p_x(t) = P(X_t = x)` of the
//! rate-1 walk with a given kernel.
//!
//! Two independent routes are provided:
//!
//! * uniformization, `p(t) = sum_n e^{-t} t^n / n! * a^{*n}`, truncated where
//!   the Poisson tail drops below a tolerance;
//! * Fourier inversion, `p_x(t) = (1/2pi) int e^{t(phi(theta) - 1) - i x theta}`,
//!   evaluated with the trapezoid rule on enough nodes that aliasing is
//!   below double precision.
//!
//! Uniformization is exact up to the requested tail and is the route used for
//! full tables; Fourier inversion is used for single probabilities at large
//! times, where convolution powers become expensive.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::kernel::JumpKernel;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Poisson(mean) weights on `first..first + weights.len()`, missing at most
/// `tol` of the total mass.
#[derive(Debug, Clone)]
pub struct PoissonWindow {
    pub first: usize,
    pub weights: Vec<f64>,
}

impl PoissonWindow {
    pub fn last(&self) -> usize {
        self.first + self.weights.len() - 1
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Poisson weights around the mode, extended outwards until the geometric
/// tail bounds on both sides are below `tol / 2`.
pub fn poisson_window(mean: f64, tol: f64) -> PoissonWindow {
    assert!(
        mean >= 0.0 && mean.is_finite(),
        "Poisson mean must be finite and >= 0"
    );
    assert!(tol > 0.0 && tol < 1.0, "tolerance must lie in (0, 1)");
    if mean == 0.0 {
        return PoissonWindow {
            first: 0,
            weights: vec![1.0],
        };
    }
    let mode = mean.floor() as usize;
    let log_mode = -mean + mode as f64 * mean.ln() - ln_gamma(mode as f64 + 1.0);
    let w_mode = log_mode.exp();
    let half = tol / 2.0;

    let mut right = Vec::new();
    let mut w = w_mode;
    let mut n = mode;
    loop {
        let denom = n as f64 + 1.0 - mean;
        if denom > 0.0 && w * mean / denom < half {
            break;
        }
        w *= mean / (n as f64 + 1.0);
        n += 1;
        right.push(w);
    }

    let mut left = Vec::new();
    let mut w = w_mode;
    let mut n = mode;
    while n > 0 {
        let bound = w * n as f64 / (mean - n as f64);
        if mean > n as f64 && bound < half {
            break;
        }
        w *= n as f64 / mean;
        n -= 1;
        left.push(w);
    }

    let first = mode - left.len();
    let mut weights: Vec<f64> = left.into_iter().rev().collect();
    weights.push(w_mode);
    weights.extend(right);
    PoissonWindow { first, weights }
}

/// One convolution step `v -> v * a`; `v[i]` is the mass at `lo + i`.
fn convolve(kernel: &JumpKernel, lo: i64, v: &[f64]) -> (i64, Vec<f64>) {
    let kmin = kernel.min_offset();
    let width = (kernel.max_offset() - kmin) as usize;
    let mut out = vec![0.0; v.len() + width];
    for &(d, p) in kernel.offsets() {
        let shift = (d - kmin) as usize;
        for (i, &m) in v.iter().enumerate() {
            out[i + shift] += p * m;
        }
    }
    (lo + kmin, out)
}

/// `p_x(t)` on a contiguous range of sites.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    kernel: JumpKernel,
    t: f64,
    min_x: i64,
    values: Vec<f64>,
    truncation_tol: f64,
}

impl TransitionTable {
    pub fn kernel(&self) -> &JumpKernel {
        &self.kernel
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn truncation_tol(&self) -> f64 {
        self.truncation_tol
    }

    pub fn min_x(&self) -> i64 {
        self.min_x
    }

    pub fn max_x(&self) -> i64 {
        self.min_x + self.values.len() as i64 - 1
    }

    pub fn get(&self, x: i64) -> f64 {
        if x < self.min_x || x > self.max_x() {
            return 0.0;
        }
        self.values[(x - self.min_x) as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.min_x + i as i64, p))
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Transition probabilities at time `t` by uniformization with Poisson tail
/// at most `tol`.
pub fn transition_probability(kernel: &JumpKernel, t: f64, tol: f64) -> TransitionTable {
    assert!(t >= 0.0 && t.is_finite(), "time must be finite and >= 0");
    let window = poisson_window(t, tol);
    let last = window.last();
    let mut lo = 0i64;
    let mut power = vec![1.0];
    // accumulator covers the support of the largest power needed
    let acc_lo = last as i64 * kernel.min_offset();
    let acc_len = (last as i64 * (kernel.max_offset() - kernel.min_offset())) as usize + 1;
    let mut acc = vec![0.0; acc_len];
    for n in 0..=last {
        if n > 0 {
            let (l, p) = convolve(kernel, lo, &power);
            lo = l;
            power = p;
        }
        if n >= window.first {
            let w = window.weights[n - window.first];
            let off = (lo - acc_lo) as usize;
            for (i, &m) in power.iter().enumerate() {
                acc[off + i] += w * m;
            }
        }
    }
    // trim exact zeros at the edges (parity or lazy kernels)
    let first_nz = acc.iter().position(|&v| v > 0.0).unwrap_or(0);
    let last_nz = acc.iter().rposition(|&v| v > 0.0).unwrap_or(0);
    TransitionTable {
        kernel: kernel.clone(),
        t,
        min_x: acc_lo + first_nz as i64,
        values: acc[first_nz..=last_nz].to_vec(),
        truncation_tol: tol,
    }
}

/// Radius beyond which the walk's position at time `t` has mass below
/// about `1e-17` (Bernstein bound for a compound Poisson walk with jumps
/// bounded by `b`).
fn reach(kernel: &JumpKernel, t: f64) -> f64 {
    let b = kernel.max_jump() as f64;
    let v = kernel.sigma2() * t;
    let l = 40.0;
    let lin = 2.0 * l * b / 3.0;
    (lin + (lin * lin + 8.0 * l * v).sqrt()) / 2.0 + b
}

/// `p_x(t)` by Fourier inversion of the characteristic function.
pub fn fourier_transition(kernel: &JumpKernel, x: i64, t: f64) -> f64 {
    if t == 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    let r = reach(kernel, t);
    let n = ((2.0 * r + x.unsigned_abs() as f64).ceil() as usize + 2).max(16);
    let h = 2.0 * PI / n as f64;
    let mut sum = 0.0;
    for j in 0..n {
        let theta = j as f64 * h;
        let (re, im) = kernel.characteristic(theta);
        let mag = (t * (re - 1.0)).exp();
        if mag == 0.0 {
            continue;
        }
        sum += mag * (t * im - x as f64 * theta).cos();
    }
    (sum / n as f64).max(0.0)
}

/// Evaluator for the return probability `p_0(u)`.
///
/// Uses uniformization with cached `a^{*n}(0)` up to `switch_time` and
/// Fourier inversion beyond it.
#[derive(Debug, Clone)]
pub struct OriginReturn {
    kernel: JumpKernel,
    tol: f64,
    switch_time: f64,
    coeffs: Vec<f64>,
}

impl OriginReturn {
    pub const DEFAULT_SWITCH: f64 = 2000.0;

    pub fn new(kernel: &JumpKernel) -> Self {
        Self::with_switch(kernel, DEFAULT_TOL * 1e-3, Self::DEFAULT_SWITCH)
    }

    pub fn with_switch(kernel: &JumpKernel, tol: f64, switch_time: f64) -> Self {
        let n_max = poisson_window(switch_time, tol).last();
        let mut coeffs = Vec::with_capacity(n_max + 1);
        let mut lo = 0i64;
        let mut power = vec![1.0];
        coeffs.push(1.0);
        for _ in 1..=n_max {
            let (l, p) = convolve(kernel, lo, &power);
            lo = l;
            power = p;
            let idx = -lo;
            coeffs.push(if idx >= 0 && (idx as usize) < power.len() {
                power[idx as usize]
            } else {
                0.0
            });
        }
        Self {
            kernel: kernel.clone(),
            tol,
            switch_time,
            coeffs,
        }
    }

    pub fn kernel(&self) -> &JumpKernel {
        &self.kernel
    }

    pub fn p0(&self, u: f64) -> f64 {
        if u <= self.switch_time {
            self.p0_uniformized(u)
        } else {
            fourier_transition(&self.kernel, 0, u)
        }
    }

    /// Uniformization route; panics if `u` exceeds the cached range.
    pub fn p0_uniformized(&self, u: f64) -> f64 {
        assert!(
            u <= self.switch_time,
            "u beyond cached uniformization range"
        );
        let w = poisson_window(u, self.tol);
        w.weights
            .iter()
            .enumerate()
            .map(|(i, &wt)| wt * self.coeffs[w.first + i])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::validate_kernel;

    /// `e^{-t} I_x(t)` for the simple symmetric walk through the integral
    /// `(1/pi) int_0^pi e^{t(cos th - 1)} cos(x th) d th` (composite Simpson).
    fn ssrw_bessel_oracle(x: i64, t: f64) -> f64 {
        let n = 20_000;
        let h = PI / n as f64;
        let f = |th: f64| (t * (th.cos() - 1.0)).exp() * (x as f64 * th).cos();
        let mut s = f(0.0) + f(PI);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0 / PI
    }

    #[test]
    fn window_respects_tolerance() {
        for &m in &[0.0, 0.3, 1.0, 7.5, 100.0, 5000.0] {
            let w = poisson_window(m, 1e-12);
            assert!(
                1.0 - w.mass() <= 1e-12 + 1e-13,
                "mean {m}: mass {}",
                w.mass()
            );
        }
    }

    #[test]
    fn table_at_zero_is_point_mass() {
        let t = transition_probability(&JumpKernel::ssrw(), 0.0, 1e-10);
        assert_eq!(t.min_x(), 0);
        assert_eq!(t.values(), &[1.0]);
    }

    #[test]
    fn ssrw_table_matches_bessel_oracle() {
        let k = JumpKernel::ssrw();
        let table = transition_probability(&k, 1.0, 1e-14);
        // p_0(1) = e^{-1} I_0(1)
        let oracle = ssrw_bessel_oracle(0, 1.0);
        assert!(
            (table.get(0) - oracle).abs() < 1e-13,
            "{} vs {oracle}",
            table.get(0)
        );
        assert!((table.get(0) - 0.465_759_607_593_640_3).abs() < 1e-13);
        for x in [1, 2, 5] {
            assert!((table.get(x) - ssrw_bessel_oracle(x, 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn local_clt_at_t_100() {
        let table = transition_probability(&JumpKernel::ssrw(), 100.0, 1e-10);
        let lclt = 1.0 / (2.0 * PI * 100.0).sqrt();
        assert!((table.get(0) / lclt - 1.0).abs() < 0.05);
    }

    #[test]
    fn symmetric_kernel_gives_symmetric_table() {
        let k = validate_kernel(&[(-2, 0.25), (-1, 0.25), (1, 0.25), (2, 0.25)]).unwrap();
        let table = transition_probability(&k, 7.3, 1e-12);
        for x in 0..30 {
            assert!((table.get(x) - table.get(-x)).abs() < 1e-15);
        }
        assert!(table.total_mass() >= 1.0 - 1e-12);
    }

    #[test]
    fn fourier_route_agrees_with_uniformization() {
        let kernels = [
            JumpKernel::ssrw(),
            validate_kernel(&[(-2, 0.25), (0, 0.5), (2, 0.25)]).unwrap(),
            validate_kernel(&[(-1, 2.0 / 3.0), (2, 1.0 / 3.0)]).unwrap(),
        ];
        for k in &kernels {
            for &t in &[0.5, 3.0, 40.0, 400.0] {
                let table = transition_probability(k, t, 1e-14);
                for x in [-3, 0, 1, 4] {
                    let f = fourier_transition(k, x, t);
                    assert!(
                        (f - table.get(x)).abs() < 1e-12,
                        "t={t} x={x}: {f} vs {}",
                        table.get(x)
                    );
                }
            }
        }
    }

    #[test]
    fn origin_return_switches_consistently() {
        let k = JumpKernel::ssrw();
        let ret = OriginReturn::with_switch(&k, 1e-14, 600.0);
        for &u in &[0.0, 0.01, 2.0, 150.0, 599.0] {
            let a = ret.p0(u);
            let b = fourier_transition(&k, 0, u);
            assert!((a - b).abs() < 1e-12, "u={u}: {a} vs {b}");
        }
        let big = ret.p0(1e5);
        let lclt = 1.0 / (2.0 * PI * 1e5).sqrt();
        assert!((big / lclt - 1.0).abs() < 1e-4);
    }
}
