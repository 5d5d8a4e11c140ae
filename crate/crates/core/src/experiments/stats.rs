//! Replica aggregation and the two goodness-of-fit tests the suites use.

use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance; `None` for a single value.
    pub variance: Option<f64>,
    pub std_error: Option<f64>,
    pub min: f64,
    pub max: f64,
}

/// Mean, unbiased variance, standard error and extremes.
///
/// Sums run over the sorted values, so any permutation of the input gives a
/// bit-identical result.
pub fn aggregate_replicas(values: &[f64]) -> Result<Aggregate, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::EmptyInput);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let variance =
        (n > 1).then(|| v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64);
    Ok(Aggregate {
        n,
        mean,
        variance,
        std_error: variance.map(|var| (var / n as f64).sqrt()),
        min: v[0],
        max: v[n - 1],
    })
}

/// Asymptotic two-sample Kolmogorov–Smirnov coefficient at level 1%.
pub const KS_COEFF_1PCT: f64 = 1.628;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    /// `sup |F_a - F_b|`.
    pub statistic: f64,
    /// `1.628 sqrt((n + m) / (n m))`.
    pub critical: f64,
}

impl KsTest {
    pub fn passes(&self) -> bool {
        self.statistic <= self.critical
    }
}

/// Two-sample KS test at 1%. Tied values are stepped over together, which
/// keeps the test valid (conservative) for discrete data.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsTest, ExperimentError> {
    if a.is_empty() || b.is_empty() {
        return Err(ExperimentError::EmptyInput);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(KsTest {
        statistic: d,
        critical: KS_COEFF_1PCT * ((n + m) / (n * m)).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Inclusive lower ends of the bins; the last bin is open above.
    pub bin_starts: Vec<u64>,
}

/// Pearson chi-square test of `counts` against Poisson(`mean`).
///
/// Consecutive values are merged into bins with expected count at least 5.
/// The mean is given, not fitted, so `dof = bins - 1`.
pub fn chi_square_poisson(counts: &[u64], mean: f64) -> Result<ChiSquare, ExperimentError> {
    if counts.is_empty() {
        return Err(ExperimentError::EmptyInput);
    }
    let law = Poisson::new(mean)
        .map_err(|e| ExperimentError::Config(format!("Poisson mean {mean}: {e}")))?;
    let total = counts.len() as f64;
    let k_max = counts
        .iter()
        .copied()
        .max()
        .unwrap_or(0)
        .max((mean + 12.0 * mean.sqrt() + 20.0) as u64);
    let mut starts = vec![0u64];
    let mut acc = 0.0;
    for k in 0..=k_max {
        acc += total * law.pmf(k);
        if acc >= 5.0 {
            starts.push(k + 1);
            acc = 0.0;
        }
    }
    // the incomplete tail joins the last full bin
    if starts.len() > 1 {
        starts.pop();
    }
    while starts.len() > 1 {
        let last = *starts.last().expect("nonempty");
        if total * law.sf(last - 1) >= 5.0 {
            break;
        }
        starts.pop();
    }
    let bins = starts.len();
    let bin_of = |v: u64| starts.partition_point(|&s| s <= v) - 1;
    let mut observed = vec![0.0; bins];
    for &c in counts {
        observed[bin_of(c)] += 1.0;
    }
    let mut statistic = 0.0;
    for (b, &lo) in starts.iter().enumerate() {
        let below = if lo == 0 { 0.0 } else { law.cdf(lo - 1) };
        let p = match starts.get(b + 1) {
            Some(&hi) => law.cdf(hi - 1) - below,
            None => 1.0 - below,
        };
        let e = total * p;
        statistic += (observed[b] - e).powi(2) / e;
    }
    let dof = bins.saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let chi = ChiSquared::new(dof as f64).expect("positive dof");
        1.0 - chi.cdf(statistic)
    };
    Ok(ChiSquare {
        statistic,
        dof,
        p_value,
        bin_starts: starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_distr::Distribution;

    #[test]
    fn single_value_has_no_variance() {
        let a = aggregate_replicas(&[2.5]).unwrap();
        assert_eq!(a.mean, 2.5);
        assert_eq!(a.variance, None);
        assert_eq!(a.std_error, None);
        assert_eq!((a.min, a.max), (2.5, 2.5));
    }

    #[test]
    fn small_list() {
        let a = aggregate_replicas(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a.mean, 2.0);
        assert_eq!(a.variance, Some(1.0));
        assert_eq!(a.std_error, Some((1.0f64 / 3.0).sqrt()));
        assert_eq!((a.min, a.max), (1.0, 3.0));
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(
            aggregate_replicas(&[]),
            Err(ExperimentError::EmptyInput)
        ));
    }

    #[test]
    fn permutations_give_identical_aggregates() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin() * 1e3).collect();
        let a = aggregate_replicas(&v).unwrap();
        for _ in 0..5 {
            v.shuffle(&mut rng);
            assert_eq!(aggregate_replicas(&v).unwrap(), a);
        }
    }

    #[test]
    fn ks_on_identical_and_shifted_samples() {
        let a: Vec<f64> = (0..500).map(|i| i as f64).collect();
        let same = ks_two_sample(&a, &a).unwrap();
        assert_eq!(same.statistic, 0.0);
        let shifted: Vec<f64> = a.iter().map(|x| x + 250.0).collect();
        let t = ks_two_sample(&a, &shifted).unwrap();
        assert!((t.statistic - 0.5).abs() < 1e-12);
        assert!(!t.passes());
        assert!((t.critical - 1.628 * (2.0f64 / 500.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn chi_square_accepts_poisson_and_rejects_shifted_mean() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let law = rand_distr::Poisson::new(30.0).unwrap();
        let draws: Vec<u64> = (0..2000).map(|_| law.sample(&mut rng) as u64).collect();
        let ok = chi_square_poisson(&draws, 30.0).unwrap();
        assert!(ok.p_value > 0.001, "{ok:?}");
        assert!(ok.dof > 5);
        let bad = chi_square_poisson(&draws, 33.0).unwrap();
        assert!(bad.p_value < 1e-6);
    }

    #[test]
    fn chi_square_bins_have_enough_mass() {
        let c = chi_square_poisson(&[3; 40], 3.0).unwrap();
        let law = Poisson::new(3.0).unwrap();
        for (b, &lo) in c.bin_starts.iter().enumerate() {
            let below = if lo == 0 { 0.0 } else { law.cdf(lo - 1) };
            let above = c.bin_starts.get(b + 1).map_or(1.0, |&h| law.cdf(h - 1));
            assert!(40.0 * (above - below) >= 5.0 - 1e-9);
        }
    }
}
