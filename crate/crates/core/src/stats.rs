//! Small statistics helpers for Monte-Carlo checks: chi-square goodness of
//! fit against a fixed distribution and binomial confidence bounds.

/// Pearson chi-square statistic of observed counts against expected
/// probabilities. `expected` entries must be strictly positive.
pub fn chi_square(observed: &[u64], expected_probs: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected_probs.len());
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    observed
        .iter()
        .zip(expected_probs)
        .map(|(&o, &p)| {
            let e = n * p;
            let d = o as f64 - e;
            d * d / e
        })
        .sum()
}

/// Acceptance threshold for a chi-square statistic at "mean + 4 sigma" of the
/// chi-square distribution with `df` degrees of freedom.
pub fn chi_square_4sigma(df: usize) -> f64 {
    let k = df as f64;
    k + 4.0 * (2.0 * k).sqrt()
}

/// Standard deviation of an empirical frequency of `n` Bernoulli(p) samples.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Wilson score interval for an observed proportion; well behaved at the
/// boundaries, unlike the plain normal approximation.
pub fn proportion_ci(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_zero_for_exact_match() {
        let obs = [250u64, 250, 250, 250];
        assert!(chi_square(&obs, &[0.25; 4]).abs() < 1e-12);
    }

    #[test]
    fn chi_square_grows_with_deviation() {
        let close = chi_square(&[260, 240, 250, 250], &[0.25; 4]);
        let far = chi_square(&[400, 100, 250, 250], &[0.25; 4]);
        assert!(far > close);
        assert!(close < chi_square_4sigma(3));
        assert!(far > chi_square_4sigma(3));
    }

    #[test]
    fn ci_brackets_point_estimate() {
        let (lo, hi) = proportion_ci(500, 1000, 1.96);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!(hi - lo < 0.07);
    }
}
