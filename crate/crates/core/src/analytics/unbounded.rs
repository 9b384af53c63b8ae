//! Unbounded model: a car displaced by `d` parks iff its walk on Z ever
//! climbs `d` above its start.

use num::rational::BigRational;
use num::One;
use serde::Serialize;

use crate::error::{domain, validation, Error, Result};
use crate::parking::{displacement, PreferenceList};
use crate::scalar::{eval_mode, Field, ProbabilityValue, StepProbability};

pub const DEFAULT_SERIES_TOL: f64 = 1e-12;
pub const DEFAULT_TERM_BUDGET: u64 = 1_000_000;

/// A truncated infinite series with a certified bound on the omitted tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: u64,
    pub tail_bound: f64,
    pub converged: bool,
}

/// Sums the first-passage series
/// `sum_l d/(l+d) C(2l+d-1, l) p^(d+l) q^l`.
///
/// Consecutive terms have ratio `pq (2l+d+1)(2l+d) / ((l+1)(l+d+1))`, which
/// is at most `4pq` as soon as `6l >= d^2 - 3d - 4`; from there on the tail
/// after term `t` is at most `t * 4pq / (1 - 4pq)`.
pub fn unbounded_prob_series(d: u64, p: f64, tol: f64, budget: u64) -> Result<SeriesResult> {
    if !(0.0..=1.0).contains(&p) {
        return Err(validation(format!("step probability {p} outside [0, 1]")));
    }
    if tol <= 0.0 || tol.is_nan() {
        return Err(validation("tolerance must be positive"));
    }
    if d == 0 {
        return Ok(SeriesResult {
            value: 1.0,
            terms_used: 0,
            tail_bound: 0.0,
            converged: true,
        });
    }
    let q = 1.0 - p;
    let rho = 4.0 * p * q;
    let df = d as f64;
    // the first term underflows long before d reaches u32::MAX
    let mut term = p.powf(df);
    let mut value = 0.0;
    let mut tail = f64::INFINITY;
    let mut l = 0u64;
    while l < budget {
        value += term;
        let lf = l as f64;
        if 6.0 * lf >= df * df - 3.0 * df - 4.0 && rho < 1.0 {
            tail = term * rho / (1.0 - rho);
            if tail <= tol {
                return Ok(SeriesResult {
                    value,
                    terms_used: l + 1,
                    tail_bound: tail,
                    converged: true,
                });
            }
        }
        term *= p * q * (2.0 * lf + df + 1.0) * (2.0 * lf + df) / ((lf + 1.0) * (lf + df + 1.0));
        l += 1;
    }
    Ok(SeriesResult {
        value,
        terms_used: l,
        tail_bound: tail,
        converged: false,
    })
}

/// Probability that a car displaced by `d` parks, with the series evaluated
/// alongside the closed form when that is informative.
#[derive(Debug, Clone, Serialize)]
pub struct UnboundedProbability {
    pub closed_form: ProbabilityValue,
    /// `None` when the series was skipped (`d = 0`, or `p = 1/2` where it
    /// converges too slowly to certify).
    pub series: Option<SeriesResult>,
    pub series_skipped: bool,
}

fn closed_form_single(d: u64, p: &StepProbability) -> Result<ProbabilityValue> {
    eval_mode(
        p,
        |p| {
            let q = p.complement();
            Ok(
                if p.clone() * BigRational::from_count(2) >= BigRational::one() {
                    BigRational::one()
                } else {
                    Field::powi(&(p.clone() / q), d)
                },
            )
        },
        |p| {
            Ok(if p >= 0.5 {
                1.0
            } else {
                (p / (1.0 - p)).powf(d as f64)
            })
        },
    )
}

pub fn unbounded_prob_single(
    d: u64,
    p: &StepProbability,
    tol: f64,
) -> Result<UnboundedProbability> {
    let closed = closed_form_single(d, p)?;
    let pf = p.as_f64();
    if d == 0 || pf == 0.5 {
        return Ok(UnboundedProbability {
            closed_form: closed,
            series: None,
            series_skipped: true,
        });
    }
    let series = unbounded_prob_series(d, pf, tol, DEFAULT_TERM_BUDGET)?;
    if series.converged {
        let gap = (series.value - closed.as_f64()).abs();
        // tail bound plus rounding in the partial sum
        let slack = series.tail_bound + 1e-13 * series.terms_used as f64;
        if gap > slack.max(tol) {
            return Err(Error::Inconsistent(format!(
                "series {} and closed form {} differ by {gap:e} at d={d}, p={pf}",
                series.value,
                closed.as_f64()
            )));
        }
    }
    Ok(UnboundedProbability {
        closed_form: closed,
        series: Some(series),
        series_skipped: false,
    })
}

fn total_displacement(alpha: &PreferenceList) -> Result<u64> {
    Ok(displacement(alpha)?.total())
}

/// Probability that every car parks: `(p/q)^(sum d_i)` below 1/2, else 1.
pub fn unbounded_prob_all(alpha: &PreferenceList, p: &StepProbability) -> Result<ProbabilityValue> {
    closed_form_single(total_displacement(alpha)?, p)
}

fn require_drift(p: &StepProbability) -> Result<()> {
    let drifts_right = match p {
        StepProbability::Exact(r) => r.clone() * BigRational::from_count(2) > BigRational::one(),
        StepProbability::Float(f) => *f > 0.5,
    };
    if !drifts_right {
        return Err(domain(format!(
            "mean and variance of the parking time are finite only for 1/2 < p <= 1 (got p = {p})"
        )));
    }
    Ok(())
}

/// Mean steps for a car displaced by `d`: `d / (p - q)`.
pub fn unbounded_expected_time(d: u64, p: &StepProbability) -> Result<ProbabilityValue> {
    require_drift(p)?;
    eval_mode(
        p,
        |p| {
            let gap = p.clone() - p.complement();
            Ok(BigRational::from_count(d) / gap)
        },
        |p| Ok(d as f64 / (2.0 * p - 1.0)),
    )
}

/// Variance of the steps for a car displaced by `d`: `4dpq / (p - q)^3`.
pub fn unbounded_variance(d: u64, p: &StepProbability) -> Result<ProbabilityValue> {
    require_drift(p)?;
    eval_mode(
        p,
        |p| {
            let q = p.complement();
            let gap = p.clone() - q.clone();
            let num = BigRational::from_count(4 * d) * p.clone() * q;
            Ok(num / Field::powi(&gap, 3))
        },
        |p| {
            let q = 1.0 - p;
            Ok(4.0 * d as f64 * p * q / (2.0 * p - 1.0).powi(3))
        },
    )
}

/// Mean total steps over all cars (they park with probability 1 here).
pub fn unbounded_expected_time_all(
    alpha: &PreferenceList,
    p: &StepProbability,
) -> Result<ProbabilityValue> {
    unbounded_expected_time(total_displacement(alpha)?, p)
}

/// Variance of the total steps; the cars' walks are independent.
pub fn unbounded_variance_all(
    alpha: &PreferenceList,
    p: &StepProbability,
) -> Result<ProbabilityValue> {
    unbounded_variance(total_displacement(alpha)?, p)
}
