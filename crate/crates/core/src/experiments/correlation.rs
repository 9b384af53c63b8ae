//! Monte Carlo test of negative correlation between the park indicators.
//!
//! For a set `S` of cars the statistic is
//! `D_S = Pr[all of S park] - prod_{k in S} Pr[X_k = 1]`. Its standard error
//! comes from the delta method: `D_S` is a smooth function of indicator
//! means, with influence function
//! `Z = prod_S X - sum_k (prod_{l != k} mu_l) X_k`.

use serde::Serialize;

use crate::analytics::exact_law;
use crate::analytics::occupancy::MAX_EXACT_N;
use crate::error::{validation, Result};
use crate::parking::PreferenceList;
use crate::stats::SIGMA_MULTIPLIER;
use crate::walk::{batch_simulate, BatchStats, WalkParameters};

/// Fewer trials than this in which the cars of a subset could be observed
/// leaves the test without a verdict.
pub const MIN_SAMPLES: u64 = 30;

const SE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// `D + 3 se <= 0`.
    ConsistentNegative,
    /// `D - 3 se > 0`: positive correlation beyond the margin.
    Violation,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationEntry {
    /// 1-indexed cars.
    pub cars: Vec<usize>,
    pub joint: f64,
    pub product: f64,
    pub difference: f64,
    pub se: f64,
    /// `Pr[all park] - prod Pr[X_k]` from the exact law, when `n` is small
    /// enough to compute it.
    pub exact_difference: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub alpha: PreferenceList,
    pub params: WalkParameters,
    pub seed: u64,
    pub trials: u64,
    pub pairs: Vec<CorrelationEntry>,
    pub subsets: Vec<CorrelationEntry>,
    pub violations: usize,
}

fn entry(stats: &BatchStats, cars: &[usize], exact: Option<f64>) -> CorrelationEntry {
    let n_trials = stats.trials as f64;
    let mu: Vec<f64> = cars.iter().map(|&c| stats.park_frequency(c)).collect();
    let mask = cars.iter().fold(0u64, |m, &c| m | 1 << (c - 1));
    let joint = stats.subset_count(mask) as f64 / n_trials;
    let product: f64 = mu.iter().product();
    let difference = joint - product;
    // prod_{l != k} mu_l for each k
    let leave_one: Vec<f64> = (0..cars.len())
        .map(|k| {
            mu.iter()
                .enumerate()
                .filter(|(l, _)| *l != k)
                .map(|(_, m)| m)
                .product()
        })
        .collect();
    let z_of = |pattern: u64| {
        let x = |c: usize| (pattern >> (c - 1) & 1) as f64;
        let all = (pattern & mask == mask) as u8 as f64;
        all - cars
            .iter()
            .zip(&leave_one)
            .map(|(&c, w)| w * x(c))
            .sum::<f64>()
    };
    let zbar = stats
        .pattern_counts
        .iter()
        .map(|(&m, &c)| c as f64 * z_of(m))
        .sum::<f64>()
        / n_trials;
    let var = stats
        .pattern_counts
        .iter()
        .map(|(&m, &c)| c as f64 * (z_of(m) - zbar).powi(2))
        .sum::<f64>()
        / n_trials;
    let se = (var / n_trials).sqrt();
    // a degenerate indicator leaves only rounding noise in Z
    let se = if se < SE_FLOOR { 0.0 } else { se };
    let verdict = if stats.trials < MIN_SAMPLES {
        Verdict::Inconclusive
    } else if difference - SIGMA_MULTIPLIER * se > 0.0 {
        Verdict::Violation
    } else if difference + SIGMA_MULTIPLIER * se <= 0.0 {
        Verdict::ConsistentNegative
    } else {
        Verdict::Inconclusive
    };
    CorrelationEntry {
        cars: cars.to_vec(),
        joint,
        product,
        difference,
        se,
        exact_difference: exact,
        verdict,
    }
}

/// Simulates `trials` runs and tests every pair plus each requested subset.
pub fn correlation_test(
    alpha: &PreferenceList,
    params: &WalkParameters,
    seed: u64,
    trials: u64,
    subsets: &[Vec<usize>],
) -> Result<CorrelationReport> {
    let n = alpha.n();
    if n > 64 {
        return Err(validation("correlation tests track at most 64 cars"));
    }
    let mut subsets_norm = Vec::with_capacity(subsets.len());
    for s in subsets {
        let mut s = s.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() < 2 || s.iter().any(|&c| c < 1 || c > n) {
            return Err(validation(format!(
                "subset {s:?} needs at least two distinct cars in [1, {n}]"
            )));
        }
        subsets_norm.push(s);
    }
    let stats = batch_simulate(alpha, params, seed, trials)?;
    let law = (n <= MAX_EXACT_N)
        .then(|| exact_law(alpha, params.boundary, &params.p()))
        .transpose()?;
    let exact_for = |cars: &[usize]| {
        law.as_ref().map(|l| {
            let mask = cars.iter().fold(0u64, |m, &c| m | 1 << (c - 1));
            l.subset(mask) - cars.iter().map(|&c| l.marginal(c)).product::<f64>()
        })
    };
    let mut pairs = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            pairs.push(entry(&stats, &[i, j], exact_for(&[i, j])));
        }
    }
    let subsets: Vec<CorrelationEntry> = subsets_norm
        .iter()
        .map(|s| entry(&stats, s, exact_for(s)))
        .collect();
    let violations = pairs
        .iter()
        .chain(&subsets)
        .filter(|e| e.verdict == Verdict::Violation)
        .count();
    Ok(CorrelationReport {
        alpha: alpha.clone(),
        params: params.clone(),
        seed,
        trials,
        pairs,
        subsets,
        violations,
    })
}

/// Every subset of `[n]` with at least two cars, ordered by size then
/// lexicographically.
pub fn all_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u64..1 << n)
        .filter(|m| m.count_ones() >= 2)
        .map(|m| (1..=n).filter(|c| m >> (c - 1) & 1 == 1).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}
