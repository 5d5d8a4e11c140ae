//! Correlation of vacancy events for a Poisson point process.
//!
//! For sets `E_1..E_k` with intensities `nu(E_I)`, `E_I = cap_{l in I} E_l`,
//! the quantity is `E[prod_i (1{xi(E_i) = 0} - P(xi(E_i) = 0))]`. Only the
//! `nu` table matters, so a spec is that table, indexed by bitmask of `I`.
//!
//! With `g(J) = sum_{I subset J, |I| >= 2} (-1)^{|I|} nu(E_I)` the exact value is
//!
//! ```text
//! e^{-sum_i nu(E_i)} sum_{J subset [k]} (-1)^{k - |J|} exp(g(J)),
//! ```
//!
//! and expanding each exponential gives a series over ordered tuples of
//! subsets (each of size >= 2) that cover `[k]`.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::rng::RngStream;

pub const MAX_K_EXACT: usize = 20;
pub const MAX_K_SERIES: usize = 8;
const REALIZABLE_TOL: f64 = 1e-12;
const MC_BLOCK: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelationError {
    #[error("k = {k} exceeds the limit {max} for this evaluator")]
    KTooLarge { k: usize, max: usize },
    #[error("spec is not realizable: atom {atom:#b} has mass {mass}")]
    UnrealizableSpec { atom: usize, mass: f64 },
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("spec line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Intensities of all intersections of `k` events.
#[derive(Debug, Clone, PartialEq)]
pub struct VacancySpec {
    k: usize,
    /// `nu[mask]` for `mask` in `1..2^k`; `nu[0]` is unused.
    nu: Vec<f64>,
    atoms: Vec<f64>,
}

impl VacancySpec {
    /// `nu[mask]` for every nonempty mask (entry 0 is ignored).
    pub fn from_masks(k: usize, mut nu: Vec<f64>) -> Result<Self, CorrelationError> {
        if k == 0 || k > 30 {
            return Err(CorrelationError::InvalidSpec(format!(
                "k must lie in 1..=30, got {k}"
            )));
        }
        if nu.len() != 1 << k {
            return Err(CorrelationError::InvalidSpec(format!(
                "expected {} entries, got {}",
                1usize << k,
                nu.len()
            )));
        }
        nu[0] = 0.0;
        if let Some(m) = (1..nu.len()).find(|&m| !(nu[m].is_finite() && nu[m] >= 0.0)) {
            return Err(CorrelationError::InvalidSpec(format!(
                "nu[{m:#b}] = {} is not a finite mass",
                nu[m]
            )));
        }
        if let Some((a, b)) = (1..nu.len())
            .flat_map(|a| (0..k).map(move |i| (a, a | (1 << i))))
            .find(|&(a, b)| nu[b] > nu[a] * (1.0 + 1e-12) + 1e-15)
        {
            return Err(CorrelationError::InvalidSpec(format!(
                "not monotone: nu[{b:#b}] = {} exceeds nu[{a:#b}] = {}",
                nu[b], nu[a]
            )));
        }
        let atoms = atom_masses(k, &nu);
        let scale = nu.iter().fold(1.0f64, |m, &v| m.max(v));
        if let Some(atom) = (1..atoms.len()).find(|&a| atoms[a] < -REALIZABLE_TOL * scale) {
            return Err(CorrelationError::UnrealizableSpec {
                atom,
                mass: atoms[atom],
            });
        }
        Ok(Self { k, nu, atoms })
    }

    /// Entries are `(I, nu(E_I))` with 1-based labels. Singletons must all be
    /// given; missing intersections are 0.
    pub fn new(k: usize, entries: &[(Vec<usize>, f64)]) -> Result<Self, CorrelationError> {
        if k == 0 || k > 30 {
            return Err(CorrelationError::InvalidSpec(format!(
                "k must lie in 1..=30, got {k}"
            )));
        }
        let mut nu = vec![f64::NAN; 1 << k];
        for (set, v) in entries {
            let mut mask = 0usize;
            for &l in set {
                if l == 0 || l > k {
                    return Err(CorrelationError::InvalidSpec(format!(
                        "label {l} outside 1..={k}"
                    )));
                }
                mask |= 1 << (l - 1);
            }
            if mask == 0 {
                return Err(CorrelationError::InvalidSpec("empty index set".into()));
            }
            if !nu[mask].is_nan() {
                return Err(CorrelationError::InvalidSpec(format!(
                    "index set {set:?} given twice"
                )));
            }
            nu[mask] = *v;
        }
        for i in 0..k {
            if nu[1 << i].is_nan() {
                return Err(CorrelationError::InvalidSpec(format!(
                    "missing singleton {}",
                    i + 1
                )));
            }
        }
        for v in nu.iter_mut().skip(1) {
            if v.is_nan() {
                *v = 0.0;
            }
        }
        Self::from_masks(k, nu)
    }

    /// Lines `I:1,2 = 0.5`; `#` starts a comment. `k` is the largest label.
    pub fn parse(text: &str) -> Result<Self, CorrelationError> {
        let mut entries = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| CorrelationError::Parse {
                line: no + 1,
                msg: msg.into(),
            };
            let (lhs, rhs) = line
                .split_once('=')
                .ok_or_else(|| err("expected `I:labels = value`"))?;
            let labels = lhs
                .trim()
                .strip_prefix("I:")
                .ok_or_else(|| err("left side must start with `I:`"))?;
            let set = labels
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| err(&format!("bad label: {e}")))?;
            let v = rhs
                .trim()
                .parse::<f64>()
                .map_err(|e| err(&format!("bad value: {e}")))?;
            entries.push((set, v));
        }
        let k = entries
            .iter()
            .flat_map(|(s, _)| s.iter().copied())
            .max()
            .unwrap_or(0);
        Self::new(k, &entries)
    }

    pub fn from_file(path: &Path) -> Result<Self, CorrelationError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CorrelationError::InvalidSpec(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Spec whose generated algebra has the given atom masses (`atoms[mask]`
    /// is the mass of points in exactly the events of `mask`).
    pub fn from_atoms(k: usize, atoms: &[f64]) -> Result<Self, CorrelationError> {
        if atoms.len() != 1 << k {
            return Err(CorrelationError::InvalidSpec(
                "atom table has the wrong length".into(),
            ));
        }
        let mut nu = vec![0.0; 1 << k];
        for (mask, v) in nu.iter_mut().enumerate().skip(1) {
            *v = (1..atoms.len())
                .filter(|&a| a & mask == mask)
                .map(|a| atoms[a])
                .sum();
        }
        Self::from_masks(k, nu)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn nu(&self, mask: usize) -> f64 {
        self.nu[mask]
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn singleton_sum(&self) -> f64 {
        (0..self.k).map(|i| self.nu[1 << i]).sum()
    }

    /// `max_{i < j} nu(E_i cap E_j)`, 0 for `k = 1`.
    pub fn max_pairwise(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.k {
            for j in i + 1..self.k {
                best = best.max(self.nu[(1 << i) | (1 << j)]);
            }
        }
        best
    }

    /// Relabels event `i` as `perm[i]` (0-based).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, CorrelationError> {
        let mut seen = vec![false; self.k];
        if perm.len() != self.k
            || perm
                .iter()
                .any(|&p| p >= self.k || std::mem::replace(&mut seen[p], true))
        {
            return Err(CorrelationError::InvalidSpec("not a permutation".into()));
        }
        let mut nu = vec![0.0; self.nu.len()];
        for (mask, &v) in self.nu.iter().enumerate() {
            let image = (0..self.k)
                .filter(|&i| mask >> i & 1 == 1)
                .fold(0, |m, i| m | 1 << perm[i]);
            nu[image] = v;
        }
        Self::from_masks(self.k, nu)
    }

    /// Multiplies every intersection (`|I| >= 2`) by `s` in `[0, 1]`.
    pub fn scaled_intersections(&self, s: f64) -> Result<Self, CorrelationError> {
        let nu = self
            .nu
            .iter()
            .enumerate()
            .map(|(m, &v)| if m.count_ones() >= 2 { v * s } else { v })
            .collect();
        Self::from_masks(self.k, nu)
    }

    /// Random realizable spec: singleton-only atoms uniform on `(0, 1)`,
    /// shared atoms uniform on `(0, shared)`.
    pub fn random<R: Rng + ?Sized>(k: usize, shared: f64, rng: &mut R) -> Self {
        let atoms: Vec<f64> = (0..1usize << k)
            .map(|a| match a.count_ones() {
                0 => 0.0,
                1 => rng.random::<f64>(),
                _ => shared * rng.random::<f64>(),
            })
            .collect();
        Self::from_atoms(k, &atoms).expect("nonnegative atoms are realizable")
    }

    fn weights(&self) -> Vec<f64> {
        self.nu
            .iter()
            .enumerate()
            .map(|(m, &v)| {
                if m.count_ones() < 2 {
                    0.0
                } else if m.count_ones() % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect()
    }
}

/// Mobius inversion: `atom(A) = sum_{J superset A} (-1)^{|J| - |A|} nu(J)`.
fn atom_masses(k: usize, nu: &[f64]) -> Vec<f64> {
    let mut a = nu.to_vec();
    for i in 0..k {
        for m in 0..a.len() {
            if m >> i & 1 == 0 {
                a[m] -= a[m | 1 << i];
            }
        }
    }
    a
}

pub fn correlation_exact(spec: &VacancySpec) -> Result<f64, CorrelationError> {
    let k = spec.k;
    if k > MAX_K_EXACT {
        return Err(CorrelationError::KTooLarge {
            k,
            max: MAX_K_EXACT,
        });
    }
    // subset sums g(J) = sum_{I subset J} w(I)
    let mut g = spec.weights();
    for i in 0..k {
        for m in 0..g.len() {
            if m >> i & 1 == 1 {
                g[m] += g[m ^ 1 << i];
            }
        }
    }
    let total: f64 = g
        .iter()
        .enumerate()
        .map(|(m, &x)| {
            let sign = if (k - m.count_ones() as usize).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            sign * x.exp()
        })
        .sum();
    Ok((-spec.singleton_sum()).exp() * total)
}

/// Series truncated after `m` factors, plus the bound
/// `2^k |x|^{M+1} / (M+1)! e^{|x|}`, `x = 2^k max_{i<j} nu(E_i cap E_j)`,
/// on the truncation error before the `e^{-sum nu(E_i)}` factor.
pub fn correlation_series(spec: &VacancySpec, m: usize) -> Result<(f64, f64), CorrelationError> {
    let k = spec.k;
    if k > MAX_K_SERIES {
        return Err(CorrelationError::KTooLarge {
            k,
            max: MAX_K_SERIES,
        });
    }
    let w = spec.weights();
    let full = (1usize << k) - 1;
    let parts: Vec<usize> = (0..=full)
        .filter(|s| s.count_ones() >= 2 && w[*s] != 0.0)
        .collect();
    // f[u] = sum over ordered n-tuples with union u of prod w(I_j) / n!
    let mut f = vec![0.0; full + 1];
    f[0] = 1.0;
    let mut sum = 0.0;
    for n in 1..=m {
        let mut next = vec![0.0; full + 1];
        for (u, &fu) in f.iter().enumerate() {
            if fu == 0.0 {
                continue;
            }
            for &s in &parts {
                next[u | s] += fu * w[s];
            }
        }
        for v in &mut next {
            *v /= n as f64;
        }
        f = next;
        sum += f[full];
    }
    let x = (1u64 << k) as f64 * spec.max_pairwise();
    let bound = (1u64 << k) as f64 * x.powi(m as i32 + 1) / factorial(m + 1) * x.exp();
    Ok(((-spec.singleton_sum()).exp() * sum, bound))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Monte Carlo over the atom decomposition: independent Poisson counts per
/// atom, event `i` is empty when every atom inside `E_i` is. Returns the
/// estimate and its standard error.
pub fn correlation_montecarlo(
    spec: &VacancySpec,
    replicas: usize,
    stream: RngStream,
) -> Result<(f64, f64), CorrelationError> {
    if replicas == 0 {
        return Err(CorrelationError::InvalidSpec(
            "replicas must be positive".into(),
        ));
    }
    if let Some(atom) = (1..spec.atoms.len()).find(|&a| spec.atoms[a] < -REALIZABLE_TOL) {
        return Err(CorrelationError::UnrealizableSpec {
            atom,
            mass: spec.atoms[atom],
        });
    }
    let k = spec.k;
    let atoms: Vec<(usize, Poisson<f64>)> = (1..spec.atoms.len())
        .filter(|&a| spec.atoms[a] > 0.0)
        .map(|a| (a, Poisson::new(spec.atoms[a]).expect("positive mass")))
        .collect();
    let centre: Vec<f64> = (0..k).map(|i| (-spec.nu[1 << i]).exp()).collect();
    let blocks = replicas.div_ceil(MC_BLOCK);
    let sums: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream.replica(b as u64).rng();
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..MC_BLOCK.min(replicas - b * MC_BLOCK) {
                let mut hit = 0usize;
                for (a, d) in &atoms {
                    if d.sample(&mut rng) > 0.0 {
                        hit |= a;
                    }
                }
                let v: f64 = (0..k)
                    .map(|i| {
                        if hit >> i & 1 == 0 {
                            1.0 - centre[i]
                        } else {
                            -centre[i]
                        }
                    })
                    .product();
                sum += v;
                sq += v * v;
            }
            (sum, sq)
        })
        .collect();
    let n = replicas as f64;
    let (sum, sq) = sums
        .iter()
        .fold((0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
    let mean = sum / n;
    let var = ((sq - n * mean * mean) / (n - 1.0).max(1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}
