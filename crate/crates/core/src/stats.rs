//! Binomial confidence intervals for sampled estimates.
//!
//! Wilson score interval. The default level is 99%; the z quantiles are the
//! standard normal ones. Interval endpoints are floating point by design:
//! they describe estimator uncertainty, not exact quantities.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfidenceLevel {
    P95,
    P99,
}

impl ConfidenceLevel {
    pub fn z(self) -> f64 {
        match self {
            ConfidenceLevel::P95 => 1.959_963_984_540_054,
            ConfidenceLevel::P99 => 2.575_829_303_548_901,
        }
    }
}

/// Wilson score interval for `hits` successes in `n` trials.
pub fn binomial_ci(hits: u64, n: u64, level: ConfidenceLevel) -> (f64, f64) {
    assert!(n > 0 && hits <= n);
    let z = level.z();
    let n_f = n as f64;
    let p = hits as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_contains_point_estimate() {
        let (lo, hi) = binomial_ci(250, 1000, ConfidenceLevel::P99);
        assert!(lo < 0.25 && 0.25 < hi);
        assert!(lo > 0.2 && hi < 0.3);
    }

    #[test]
    fn degenerate_counts() {
        let (lo, _) = binomial_ci(0, 100, ConfidenceLevel::P99);
        assert_eq!(lo, 0.0);
        let (_, hi) = binomial_ci(100, 100, ConfidenceLevel::P99);
        assert_eq!(hi, 1.0);
    }
}
