//! Where a symmetric walk lands when it first enters a half-line.
//!
//! Started at distance `s >= 1` above a level `m`, a walk with jumps bounded
//! by `b` first enters `(-inf, m]` at one of `m, m - 1, ..., m - b + 1`. For
//! each landing offset `o` the probability `h_o(s)` is the bounded solution
//! of `h(s) = sum_d a_d h(s + d)` on `s >= 1` with `h = 1{s = o}` on the `b`
//! boundary sites. Bounded solutions are `c_0 + sum_k c_k z_k^s` over the
//! `b - 1` roots of `sum_d a_d z^d = 1` inside the unit disc (the root `1`
//! is double and contributes only the constant), so the law is available in
//! closed form for every `s`. This lets long excursions that cannot decide
//! anything be skipped in a single draw.

use num_complex::Complex64;
use rand::Rng;

use crate::kernel::JumpKernel;

const ROOT_ITERS: usize = 500;
const ROOT_TOL: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct LandingLaw {
    b: usize,
    roots: Vec<Complex64>,
    /// `coeffs[j]` solves the boundary problem for landing offset `-j`:
    /// `[c_0, c_1, ..., c_{b-1}]`.
    coeffs: Vec<Vec<Complex64>>,
}

impl LandingLaw {
    /// `None` for asymmetric kernels and for periodic ones (extra roots on
    /// the unit circle), where the representation above breaks down.
    pub fn new(kernel: &JumpKernel) -> Option<Self> {
        if !kernel.is_symmetric() || lattice_span(kernel) != 1 {
            return None;
        }
        let b = kernel.max_jump() as usize;
        // coefficients of z^b (sum_d a_d z^d - 1), lowest degree first
        let mut poly = vec![Complex64::new(0.0, 0.0); 2 * b + 1];
        for &(d, p) in kernel.offsets() {
            poly[(d + b as i64) as usize] += p;
        }
        poly[b] -= 1.0;
        let deflated = divide_by_root(&divide_by_root(&poly, 1.0), 1.0);
        let all = polynomial_roots(&deflated);
        let inside: Vec<Complex64> = all
            .iter()
            .copied()
            .filter(|z| z.norm() < 1.0 - 1e-6)
            .collect();
        let on_circle = all.iter().any(|z| (z.norm() - 1.0).abs() <= 1e-6);
        if inside.len() != b - 1 || on_circle {
            return None;
        }
        let mut coeffs = Vec::with_capacity(b);
        for j in 0..b {
            // rows: boundary sites s = 0, -1, ..., -(b-1)
            let mut a = vec![vec![Complex64::new(0.0, 0.0); b]; b];
            let mut rhs = vec![Complex64::new(0.0, 0.0); b];
            for (row, r) in a.iter_mut().enumerate() {
                let s = -(row as i32);
                r[0] = Complex64::new(1.0, 0.0);
                for (k, z) in inside.iter().enumerate() {
                    r[k + 1] = z.powi(s);
                }
                if row == j {
                    rhs[row] = Complex64::new(1.0, 0.0);
                }
            }
            coeffs.push(solve_complex(a, rhs)?);
        }
        Some(Self {
            b,
            roots: inside,
            coeffs,
        })
    }

    pub fn max_jump(&self) -> usize {
        self.b
    }

    /// `P(land at m - j)` for `j = 0..b`, starting at `m + s`, `s >= 1`.
    pub fn probabilities(&self, s: i64) -> Vec<f64> {
        assert!(s >= 1, "start must lie above the level");
        let mut p: Vec<f64> = self
            .coeffs
            .iter()
            .map(|c| {
                let mut v = c[0];
                for (k, z) in self.roots.iter().enumerate() {
                    v += c[k + 1] * (z.ln() * s as f64).exp();
                }
                v.re.max(0.0)
            })
            .collect();
        let total: f64 = p.iter().sum();
        for x in &mut p {
            *x /= total;
        }
        p
    }

    /// Landing offset (`0` or negative) for a walk started at distance `s`.
    pub fn sample<R: Rng + ?Sized>(&self, s: i64, rng: &mut R) -> i64 {
        if self.b == 1 {
            return 0;
        }
        let p = self.probabilities(s);
        let mut u: f64 = rng.random();
        for (j, &q) in p.iter().enumerate() {
            if u < q {
                return -(j as i64);
            }
            u -= q;
        }
        -(self.b as i64 - 1)
    }
}

/// gcd of the nonzero offsets: the walk lives on `span * Z`.
fn lattice_span(kernel: &JumpKernel) -> i64 {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    kernel
        .offsets()
        .iter()
        .fold(0, |g, &(d, _)| gcd(g, d.abs()))
}

/// Synthetic division by `(z - r)`; the remainder is dropped.
fn divide_by_root(poly: &[Complex64], r: f64) -> Vec<Complex64> {
    let n = poly.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut carry = Complex64::new(0.0, 0.0);
    for i in (1..=n).rev() {
        carry = poly[i] + carry * r;
        out[i - 1] = carry;
    }
    out
}

fn eval(poly: &[Complex64], z: Complex64) -> Complex64 {
    poly.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// All roots by Durand-Kerner iteration followed by Newton polishing.
fn polynomial_roots(poly: &[Complex64]) -> Vec<Complex64> {
    let n = poly.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = poly[n];
    let monic: Vec<Complex64> = poly.iter().map(|&c| c / lead).collect();
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powi(k as i32)).collect();
    for _ in 0..ROOT_ITERS {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            let step = eval(&monic, z[i]) / denom;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < ROOT_TOL {
            break;
        }
    }
    let deriv: Vec<Complex64> = (1..=n).map(|k| monic[k] * k as f64).collect();
    for r in &mut z {
        for _ in 0..3 {
            let d = eval(&deriv, *r);
            if d.norm() > 0.0 {
                *r -= eval(&monic, *r) / d;
            }
        }
    }
    z
}

/// Gaussian elimination with partial pivoting.
fn solve_complex(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if a[piv][col].norm() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}
