//! Time grid of the lower-bound block scheme.
//!
//! Block `n >= 1` is `(t_{3n-3}, t_{3n}]`, cut into an attempt window
//! `(t_{3n-3}, t_{3n-2}]`, a buffer `(t_{3n-2}, t_{3n-1}]` and an arrival
//! window `(t_{3n-1}, t_{3n}]`. Block ends are `t_{3n} = eps^2 n^2 /
//! log(n v 3)^2`; attempt window and buffer both have length
//! `eps^2 n^{1 - eps/2}`, cut down to a third of the block where that would
//! not fit.

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub epsilon: f64,
    pub n_max: usize,
    /// `t[0..=3 n_max]`.
    pub t: Vec<f64>,
    /// `repaired[n - 1]` is set when block `n` had its windows shortened.
    pub repaired: Vec<bool>,
}

/// `t_{3n}` before any repair.
pub fn block_end(epsilon: f64, n: usize) -> f64 {
    let n = n as f64;
    let l = n.max(3.0).ln();
    epsilon * epsilon * n * n / (l * l)
}

/// Unrepaired window length for block `n`.
pub fn window_length(epsilon: f64, n: usize) -> f64 {
    epsilon * epsilon * (n as f64).powf(1.0 - epsilon / 2.0)
}

pub fn build_time_grid(epsilon: f64, n_max: usize) -> Result<TimeGrid, super::CouplingError> {
    if !(epsilon > 0.0 && epsilon < 1.0) || n_max == 0 {
        return Err(super::CouplingError::InvalidParams(format!(
            "need epsilon in (0, 1) and n_max >= 1, got {epsilon}, {n_max}"
        )));
    }
    let mut t = Vec::with_capacity(3 * n_max + 1);
    let mut repaired = Vec::with_capacity(n_max);
    t.push(0.0);
    for n in 1..=n_max {
        let start = block_end(epsilon, n - 1);
        let end = block_end(epsilon, n);
        let raw = window_length(epsilon, n);
        let cap = (end - start) / 3.0;
        let len = raw.min(cap);
        repaired.push(raw > cap);
        t.push(start + len);
        t.push(start + 2.0 * len);
        t.push(end);
    }
    Ok(TimeGrid {
        epsilon,
        n_max,
        t,
        repaired,
    })
}

impl TimeGrid {
    pub fn start(&self, n: usize) -> f64 {
        self.t[3 * n - 3]
    }

    pub fn attempt_end(&self, n: usize) -> f64 {
        self.t[3 * n - 2]
    }

    pub fn buffer_end(&self, n: usize) -> f64 {
        self.t[3 * n - 1]
    }

    pub fn end(&self, n: usize) -> f64 {
        self.t[3 * n]
    }

    pub fn horizon(&self) -> f64 {
        self.t[3 * self.n_max]
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.t.windows(2).all(|w| w[0] < w[1])
    }

    /// `#{n >= 1 : t_{3n} <= t}`.
    pub fn blocks_by(&self, t: f64) -> usize {
        (1..=self.n_max).take_while(|&n| self.end(n) <= t).count()
    }

    /// `#{n : t_{3n} <= t} * 2 eps / (sqrt(t) log t)`, which tends to 1.
    pub fn count_ratio(&self, t: f64) -> f64 {
        self.blocks_by(t) as f64 * 2.0 * self.epsilon / (t.sqrt() * t.ln())
    }

    /// Last block whose windows were shortened, 0 if none.
    pub fn last_repaired(&self) -> usize {
        self.repaired.iter().rposition(|&r| r).map_or(0, |i| i + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strictly_increasing_for_several_eps() {
        for eps in [0.05, 0.3, 0.5, 0.9] {
            let g = build_time_grid(eps, 3000).unwrap();
            assert!(g.is_strictly_increasing(), "eps {eps}");
            assert_eq!(g.t.len(), 9001);
        }
    }

    #[test]
    fn raw_formula_is_not_monotone_at_small_n() {
        // t_3 = eps^2 / log(3)^2 while the raw buffer end t_2 = 2 eps^2
        let eps = 0.5;
        assert!(block_end(eps, 1) < 2.0 * window_length(eps, 1));
        let g = build_time_grid(eps, 5).unwrap();
        assert!(g.repaired[0]);
    }

    #[test]
    fn unrepaired_windows_follow_formula() {
        let g = build_time_grid(0.5, 200).unwrap();
        for n in 1..=200 {
            if !g.repaired[n - 1] {
                let len = 0.25 * (n as f64).powf(0.75);
                assert!((g.attempt_end(n) - g.start(n) - len).abs() < 1e-9 * len.max(1.0));
                assert!((g.buffer_end(n) - g.attempt_end(n) - len).abs() < 1e-9 * len.max(1.0));
            }
            assert_eq!(g.end(n), block_end(0.5, n));
        }
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(build_time_grid(0.0, 10).is_err());
        assert!(build_time_grid(1.0, 10).is_err());
        assert!(build_time_grid(0.5, 0).is_err());
    }
}
