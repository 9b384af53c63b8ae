//! Empirical tails of the number of parked cars against Chernoff-type bounds.

use serde::Serialize;

use crate::analytics::exact_law;
use crate::error::{domain, validation, Result};
use crate::parking::PreferenceList;
use crate::stats::{binomial_se, SIGMA_MULTIPLIER};
use crate::walk::{batch_simulate, Boundary, WalkParameters};

/// Slack when comparing a count with a threshold such as `(1 + delta) mu`
/// that may be an integer in exact arithmetic.
const THRESHOLD_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheck {
    pub delta: f64,
    /// `Pr[N >= (1 + delta) mu]`.
    pub upper_empirical: f64,
    pub upper_se: f64,
    /// `(e^delta / (1 + delta)^(1 + delta))^mu`.
    pub upper_bound: f64,
    pub upper_passed: bool,
    /// `Pr[N <= (1 - delta) mu]`.
    pub lower_empirical: f64,
    pub lower_se: f64,
    /// `(e^delta / (1 - delta)^(1 - delta))^mu`, as stated; never below 1.
    pub lower_bound_printed: f64,
    pub lower_passed: bool,
    /// `(e^-delta / (1 - delta)^(1 - delta))^mu`, the usual lower-tail form.
    pub lower_bound_standard: f64,
    pub lower_standard_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChernoffReport {
    pub alpha: PreferenceList,
    pub params: WalkParameters,
    pub seed: u64,
    pub trials: u64,
    /// `E[N] = sum_i Pr[X_i = 1]`, from the exact law.
    pub mu: f64,
    pub checks: Vec<TailCheck>,
    /// Every printed bound held within the margin.
    pub passed: bool,
}

/// `x^x` with `0^0 = 1`.
fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

pub fn upper_bound(delta: f64, mu: f64) -> f64 {
    (mu * (delta - xlnx(1.0 + delta))).exp()
}

pub fn lower_bound_printed(delta: f64, mu: f64) -> f64 {
    (mu * (delta - xlnx(1.0 - delta))).exp()
}

pub fn lower_bound_standard(delta: f64, mu: f64) -> f64 {
    (mu * (-delta - xlnx(1.0 - delta))).exp()
}

pub fn chernoff_check(
    alpha: &PreferenceList,
    params: &WalkParameters,
    seed: u64,
    trials: u64,
    deltas: &[f64],
) -> Result<ChernoffReport> {
    if params.boundary != Boundary::Open {
        return Err(domain("the Chernoff check is stated for the open boundary"));
    }
    if let Some(d) = deltas.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(validation(format!("delta {d} outside [0, 1]")));
    }
    let law = exact_law(alpha, params.boundary, &params.p())?;
    let mu = law.mean_parked();
    let stats = batch_simulate(alpha, params, seed, trials)?;
    let t = trials as f64;
    let tail = |keep: &dyn Fn(f64) -> bool| -> f64 {
        stats
            .parked_count_hist
            .iter()
            .enumerate()
            .filter(|(k, _)| keep(*k as f64))
            .map(|(_, c)| *c)
            .sum::<u64>() as f64
            / t
    };
    let checks: Vec<TailCheck> = deltas
        .iter()
        .map(|&delta| {
            let hi = (1.0 + delta) * mu;
            let lo = (1.0 - delta) * mu;
            let upper_empirical = tail(&|k| k >= hi - THRESHOLD_EPS);
            let lower_empirical = tail(&|k| k <= lo + THRESHOLD_EPS);
            let upper_se = binomial_se(upper_empirical, trials);
            let lower_se = binomial_se(lower_empirical, trials);
            let ub = upper_bound(delta, mu);
            let lbp = lower_bound_printed(delta, mu);
            let lbs = lower_bound_standard(delta, mu);
            TailCheck {
                delta,
                upper_empirical,
                upper_se,
                upper_bound: ub,
                upper_passed: upper_empirical <= ub + SIGMA_MULTIPLIER * upper_se,
                lower_empirical,
                lower_se,
                lower_bound_printed: lbp,
                lower_passed: lower_empirical <= lbp + SIGMA_MULTIPLIER * lower_se,
                lower_bound_standard: lbs,
                lower_standard_passed: lower_empirical <= lbs + SIGMA_MULTIPLIER * lower_se,
            }
        })
        .collect();
    let passed = checks.iter().all(|c| c.upper_passed && c.lower_passed);
    Ok(ChernoffReport {
        alpha: alpha.clone(),
        params: params.clone(),
        seed,
        trials,
        mu,
        checks,
        passed,
    })
}
