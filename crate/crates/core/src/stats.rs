//! Small helpers for comparing Monte Carlo estimates with exact values.

use serde::Serialize;

/// Width of every acceptance band, in standard errors.
pub const SIGMA_MULTIPLIER: f64 = 3.0;

/// Standard error of a frequency estimate of a probability `p` from `n`
/// independent trials.
pub fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).max(0.0).sqrt()
}

/// One estimate held against its exact value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub estimate: f64,
    pub exact: f64,
    pub se: f64,
    /// `|estimate - exact| / se`; `None` when `se = 0`.
    pub z: Option<f64>,
    pub passed: bool,
}

impl Comparison {
    /// Passes when the gap is within `SIGMA_MULTIPLIER` standard errors. A
    /// zero standard error demands agreement to rounding.
    pub fn new(estimate: f64, exact: f64, se: f64) -> Self {
        let gap = (estimate - exact).abs();
        let z = (se > 0.0).then(|| gap / se);
        let slack = 1e-9 * exact.abs().max(1.0);
        let passed = gap <= SIGMA_MULTIPLIER * se + slack;
        Comparison {
            estimate,
            exact,
            se,
            z,
            passed,
        }
    }
}

/// Pearson statistic `sum (O - E)^2 / E` against equal expected counts.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}
