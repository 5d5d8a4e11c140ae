//! Finite-support jump kernels on the integer lattice.
//!
//! A kernel `(a_x)` is a probability vector with mean zero and finite,
//! positive variance `sigma^2 = sum x^2 a_x`. Every walker in the crate
//! (heat-equation generator, particle systems, couplings) is driven by one.

use std::fmt;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

const MOMENT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("kernel has no entries")]
    Empty,
    #[error("not a probability kernel: {0}")]
    NotAProbability(String),
    #[error("kernel mean must be 0, got {mean}")]
    NonZeroMean { mean: f64 },
    #[error("kernel variance must lie in (0, inf), got {sigma2}")]
    NonFiniteVariance { sigma2: f64 },
    #[error("kernel file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cannot read kernel file {path}: {msg}")]
    Io { path: String, msg: String },
}

/// Validated jump kernel. Offsets are sorted, distinct and carry positive mass.
#[derive(Clone, PartialEq)]
pub struct JumpKernel {
    offsets: Vec<(i64, f64)>,
    cumulative: Vec<f64>,
    sigma2: f64,
}

impl fmt::Debug for JumpKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JumpKernel")
            .field("offsets", &self.offsets)
            .field("sigma2", &self.sigma2)
            .finish()
    }
}

/// Checks the kernel conditions and computes the variance.
pub fn validate_kernel(raw: &[(i64, f64)]) -> Result<JumpKernel, KernelError> {
    JumpKernel::new(raw)
}

impl JumpKernel {
    pub fn new(raw: &[(i64, f64)]) -> Result<Self, KernelError> {
        if raw.is_empty() {
            return Err(KernelError::Empty);
        }
        for &(x, p) in raw {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(KernelError::NotAProbability(format!(
                    "probability {p} at offset {x} is outside [0, 1]"
                )));
            }
        }
        let mut merged: Vec<(i64, f64)> = Vec::with_capacity(raw.len());
        let mut sorted = raw.to_vec();
        sorted.sort_by_key(|&(x, _)| x);
        for (x, p) in sorted {
            match merged.last_mut() {
                Some((y, q)) if *y == x => *q += p,
                _ => merged.push((x, p)),
            }
        }
        merged.retain(|&(_, p)| p > 0.0);

        let total: f64 = merged.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > MOMENT_TOL {
            return Err(KernelError::NotAProbability(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let mean: f64 = merged.iter().map(|&(x, p)| x as f64 * p).sum();
        if mean.abs() > MOMENT_TOL {
            return Err(KernelError::NonZeroMean { mean });
        }
        let sigma2: f64 = merged.iter().map(|&(x, p)| (x as f64).powi(2) * p).sum();
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(KernelError::NonFiniteVariance { sigma2 });
        }

        let mut acc = 0.0;
        let cumulative = merged
            .iter()
            .map(|&(_, p)| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            offsets: merged,
            cumulative,
            sigma2,
        })
    }

    /// Symmetric simple random walk: +-1 with probability 1/2 each.
    pub fn ssrw() -> Self {
        Self::new(&[(-1, 0.5), (1, 0.5)]).expect("ssrw is a valid kernel")
    }

    /// Parses the plain-text kernel format: one `offset probability` pair per
    /// line, `#` starts a comment, blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, KernelError> {
        let mut raw = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(x), Some(p), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(KernelError::Parse {
                    line: i + 1,
                    msg: format!("expected `offset probability`, got `{line}`"),
                });
            };
            let x: i64 = x.parse().map_err(|_| KernelError::Parse {
                line: i + 1,
                msg: format!("bad offset `{x}`"),
            })?;
            let p: f64 = p.parse().map_err(|_| KernelError::Parse {
                line: i + 1,
                msg: format!("bad probability `{p}`"),
            })?;
            raw.push((x, p));
        }
        Self::new(&raw)
    }

    pub fn from_file(path: &Path) -> Result<Self, KernelError> {
        let text = std::fs::read_to_string(path).map_err(|e| KernelError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Resolves a kernel argument: the builtin name `ssrw` or a file path.
    pub fn resolve(spec: &str) -> Result<Self, KernelError> {
        if spec.eq_ignore_ascii_case("ssrw") {
            Ok(Self::ssrw())
        } else {
            Self::from_file(Path::new(spec))
        }
    }

    pub fn offsets(&self) -> &[(i64, f64)] {
        &self.offsets
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn min_offset(&self) -> i64 {
        self.offsets[0].0
    }

    pub fn max_offset(&self) -> i64 {
        self.offsets[self.offsets.len() - 1].0
    }

    /// Largest absolute jump.
    pub fn max_jump(&self) -> i64 {
        self.min_offset().abs().max(self.max_offset().abs())
    }

    pub fn probability(&self, x: i64) -> f64 {
        self.offsets
            .binary_search_by_key(&x, |&(y, _)| y)
            .map(|i| self.offsets[i].1)
            .unwrap_or(0.0)
    }

    pub fn is_symmetric(&self) -> bool {
        self.offsets
            .iter()
            .all(|&(x, p)| (self.probability(-x) - p).abs() <= MOMENT_TOL)
    }

    /// The mirrored kernel `x -> a_{-x}`.
    pub fn reflected(&self) -> Self {
        let raw: Vec<_> = self.offsets.iter().map(|&(x, p)| (-x, p)).collect();
        Self::new(&raw).expect("reflection preserves validity")
    }

    /// Characteristic function `sum_x a_x e^{i x theta}` as `(re, im)`.
    pub fn characteristic(&self, theta: f64) -> (f64, f64) {
        self.offsets.iter().fold((0.0, 0.0), |(re, im), &(x, p)| {
            let (s, c) = (x as f64 * theta).sin_cos();
            (re + p * c, im + p * s)
        })
    }

    /// Draws one displacement.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.random();
        for (i, &c) in self.cumulative.iter().enumerate() {
            if u < c {
                return self.offsets[i].0;
            }
        }
        self.offsets[self.offsets.len() - 1].0
    }
}

/// Draws one displacement from `kernel` using the given stream.
pub fn sample_jump<R: Rng + ?Sized>(kernel: &JumpKernel, rng: &mut R) -> i64 {
    kernel.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn ssrw_has_unit_variance() {
        let k = validate_kernel(&[(-1, 0.5), (1, 0.5)]).unwrap();
        assert_eq!(k.sigma2(), 1.0);
        assert!(k.is_symmetric());
    }

    #[test]
    fn lazy_even_kernel_variance() {
        // direct moment: 4 * 0.25 + 0 + 4 * 0.25
        let k = validate_kernel(&[(-2, 0.25), (0, 0.5), (2, 0.25)]).unwrap();
        assert!((k.sigma2() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn drift_is_rejected() {
        assert!(matches!(
            validate_kernel(&[(1, 1.0)]),
            Err(KernelError::NonZeroMean { .. })
        ));
    }

    #[test]
    fn bad_probabilities_are_rejected() {
        assert!(matches!(
            validate_kernel(&[(-1, 0.5), (1, 0.6)]),
            Err(KernelError::NotAProbability(_))
        ));
        assert!(matches!(
            validate_kernel(&[(-1, -0.5), (1, 1.5)]),
            Err(KernelError::NotAProbability(_))
        ));
        assert_eq!(validate_kernel(&[]), Err(KernelError::Empty));
    }

    #[test]
    fn point_mass_at_zero_has_no_variance() {
        assert!(matches!(
            validate_kernel(&[(0, 1.0)]),
            Err(KernelError::NonFiniteVariance { .. })
        ));
    }

    #[test]
    fn duplicate_offsets_merge() {
        let k = validate_kernel(&[(1, 0.25), (-1, 0.5), (1, 0.25)]).unwrap();
        assert_eq!(k.offsets(), &[(-1, 0.5), (1, 0.5)]);
    }

    #[test]
    fn parses_kernel_file_format() {
        let text = "# lazy walk\n-1 0.25\n\n0 0.5 # stay\n1 0.25\n";
        let k = JumpKernel::parse(text).unwrap();
        assert_eq!(k.offsets().len(), 3);
        assert!((k.sigma2() - 0.5).abs() < 1e-15);
        let err = JumpKernel::parse("1 0.5 extra").unwrap_err();
        assert!(matches!(err, KernelError::Parse { line: 1, .. }));
    }

    #[test]
    fn asymmetric_kernel_detected() {
        let k = validate_kernel(&[(-1, 2.0 / 3.0), (2, 1.0 / 3.0)]).unwrap();
        assert!(!k.is_symmetric());
        assert!((k.sigma2() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ssrw_samples_are_unit_steps() {
        let k = JumpKernel::ssrw();
        let mut rng = RngStream::new(7, 0).rng();
        for _ in 0..1000 {
            let d = sample_jump(&k, &mut rng);
            assert!(d == -1 || d == 1);
        }
    }

    #[test]
    fn ssrw_sample_mean_within_clt_bound() {
        let k = JumpKernel::ssrw();
        let mut rng = RngStream::new(2024, 3).rng();
        let n = 1_000_000;
        let sum: i64 = (0..n).map(|_| sample_jump(&k, &mut rng)).sum();
        let mean = sum as f64 / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn sample_frequencies_match_kernel() {
        let k = validate_kernel(&[(-2, 0.1), (-1, 0.2), (0, 0.4), (1, 0.2), (2, 0.1)]).unwrap();
        let mut rng = RngStream::new(11, 1).rng();
        let n = 1_000_000usize;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            counts[(sample_jump(&k, &mut rng) + 2) as usize] += 1;
        }
        for (i, &(_, p)) in k.offsets().iter().enumerate() {
            let freq = counts[i] as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 4.0 * se, "offset {i}: {freq} vs {p}");
        }
    }
}
